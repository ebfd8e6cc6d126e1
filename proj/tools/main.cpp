#include <string>
#include <vector>

#include "lowrank/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return lowrank::cli::dispatch(args);
}
