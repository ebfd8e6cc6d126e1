#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lowrank/config.hpp"
#include "lowrank/errors.hpp"
#include "lowrank/experiments.hpp"
#include "lowrank/io.hpp"
#include "lowrank/solvers.hpp"

namespace lowrank::cli {

namespace detail {

inline std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline nlohmann::json record_json(const BenchmarkRecord& r) {
    nlohmann::json j;
    j["n1"] = r.spec.rows;
    j["n2"] = r.spec.cols;
    j["rank"] = r.spec.rank;
    j["sample_fraction"] = r.spec.resolved_fraction();
    j["algorithm"] = algorithm_name(r.algorithm);
    j["trial"] = r.trial;
    j["seed"] = r.trial_seed;
    j["iterations"] = r.iterations;
    j["relative_error"] = r.relative_error;
    j["wall_time_ms"] = r.wall_time_ms;
    j["converged"] = r.converged;
    if (!r.note.empty()) j["note"] = r.note;
    return j;
}

/// Run-summary sidecar; the one emitted file allowed to carry timestamps
/// and measured durations.
inline void write_sidecar(const std::filesystem::path& path, const std::string& command,
                          std::uint64_t seed, const std::vector<BenchmarkRecord>& records) {
    nlohmann::json j;
    j["command"] = command;
    j["generated_at"] = iso_timestamp();
    j["seed"] = seed;
    j["records"] = nlohmann::json::array();
    for (const auto& r : records) j["records"].push_back(record_json(r));
    lowrank::detail::write_atomic(path, j.dump(2) + "\n");
}

struct SolverFlags {
    std::string scale_b = "auto";
    std::string tolerance = "auto";
    std::string svt_tau = "auto";
    double decay_a = -1.0;  // < 0 means auto
    double step_size = 1.0;
    int max_iters = 200;
    bool relative_tolerance = false;

    void attach(CLI::App& app) {
        app.add_option("--scale-b", scale_b, "Threshold scale b, or 'auto'");
        app.add_option("--decay-a", decay_a, "Threshold decay a (default: auto)");
        app.add_option("--step-size", step_size, "Step size delta (default 1)");
        app.add_option("--max-iters", max_iters, "Iteration cap (default 200)");
        app.add_option("--tolerance", tolerance, "Stopping tolerance, or 'auto'");
        app.add_option("--svt-tau", svt_tau, "Fixed SVT threshold, or 'auto'");
        app.add_flag("--relative-tolerance", relative_tolerance,
                     "Compare iterate change relative to ||X_k||_F");
    }

    SolverConfig to_config() const {
        SolverConfig cfg;
        auto parse_auto = [](const std::string& text, const char* what) -> std::optional<double> {
            if (text == "auto") return std::nullopt;
            try {
                std::size_t pos = 0;
                const double v = std::stod(text, &pos);
                if (pos != text.size()) throw std::invalid_argument(text);
                return v;
            } catch (const std::exception&) {
                throw ParameterError(std::string(what) + " must be a number or 'auto'");
            }
        };
        if (const auto b = parse_auto(scale_b, "--scale-b")) {
            cfg.schedule.mode = ScheduleMode::Explicit;
            cfg.schedule.scale_b = *b;
            if (decay_a < 0.0) throw ParameterError("--decay-a required with an explicit --scale-b");
        }
        if (decay_a >= 0.0) cfg.schedule.decay_a = decay_a;
        cfg.step_size = step_size;
        cfg.max_iters = max_iters;
        cfg.tolerance = parse_auto(tolerance, "--tolerance");
        cfg.svt_tau = parse_auto(svt_tau, "--svt-tau");
        cfg.relative_tolerance = relative_tolerance;
        cfg.validate();
        return cfg;
    }
};

inline int run_gen(Index n1, Index n2, Index rank, std::optional<double> fraction,
                   std::optional<Index> count, std::uint64_t seed, const std::string& prefix) {
    ProblemSpec spec;
    spec.rows = n1;
    spec.cols = n2;
    spec.rank = rank;
    spec.sample_fraction = fraction;
    spec.sample_count = count;
    spec.seed = seed;
    spec.validate();

    const Matrix truth = generate_low_rank(n1, n2, rank, lowrank::detail::mix64(seed ^ 1));
    const ObservationSet obs =
        sample_observations(n1, n2, spec.resolved_sample_count(), lowrank::detail::mix64(seed ^ 2));
    const SamplingOperator op(obs);
    const Vector b = op.apply(truth);

    write_matrix(prefix + ".truth.txt", truth);
    write_observations(prefix + ".obs.txt", obs, b);
    std::cout << "wrote " << prefix << ".truth.txt and " << prefix << ".obs.txt (" << n1 << "x"
              << n2 << ", rank " << rank << ", m " << spec.resolved_sample_count() << ")\n";
    return 0;
}

inline int run_complete(const std::string& obs_path, const std::string& out_path,
                        const std::string& algorithm, const SolverFlags& flags,
                        const std::optional<std::string>& truth_path) {
    const auto [obs, b] = read_observations(obs_path);
    const SamplingOperator op(obs);
    const SolverConfig cfg = flags.to_config();

    const SolveResult result =
        algorithm == "svt" ? svt_solve(op, b, cfg) : asvt_solve(op, b, cfg);
    write_matrix(out_path, result.x_hat);

    std::cout << algorithm << ": " << result.iterations_run << " iterations, "
              << (result.converged ? "converged" : "hit iteration cap") << "\n";
    if (truth_path) {
        const Matrix truth = read_matrix(*truth_path);
        std::cout << "relative_error " << format_double(relative_error(truth, result.x_hat))
                  << "\n";
    }
    return 0;
}

inline RunConfig load_config_or_die(const std::string& path) {
    if (!std::filesystem::exists(path)) throw IoError("config file not found: " + path);
    return load_run_config(path);
}

inline int run_benchmark_cmd(const std::string& config_path, std::optional<std::string> csv_path,
                             std::optional<std::string> json_path, bool timing, bool large) {
    RunConfig cfg = load_config_or_die(config_path);
    if (cfg.problems.empty())
        throw ParameterError("benchmark: config has no experiment.problems");
    for (const auto& p : cfg.problems)
        if (std::min(p.rows, p.cols) >= 1500 && !large)
            throw ParameterError("benchmark: " + std::to_string(p.rows) + "x" +
                                 std::to_string(p.cols) +
                                 " problem requires --large (desk-scale guard)");
    const auto records = run_benchmark(cfg.problems, cfg.algorithms, cfg.solver, cfg.trials);
    const std::string csv = csv_path.value_or(cfg.output.csv.value_or("benchmark.csv"));
    write_benchmark_csv(csv, records, timing || cfg.output.timing);
    if (const auto sidecar = json_path ? json_path : cfg.output.json)
        write_sidecar(*sidecar, "benchmark", cfg.seed, records);
    std::cout << "wrote " << csv << " (" << records.size() << " rows)\n";
    return 0;
}

inline int run_sweep_cmd(const std::string& config_path, std::optional<std::string> csv_path,
                         std::optional<std::string> json_path, bool timing) {
    RunConfig cfg = load_config_or_die(config_path);
    if (!cfg.sweep) throw ParameterError("sweep: config has no experiment.sweep section");
    const auto& sw = *cfg.sweep;
    const auto records = run_sweep(sw.base, sw.param, sw.values, cfg.solver, cfg.trials);
    const std::string csv = csv_path.value_or(cfg.output.csv.value_or("sweep.csv"));
    write_sweep_csv(csv, sw.param, sw.values, cfg.trials, records, timing || cfg.output.timing);
    if (const auto sidecar = json_path ? json_path : cfg.output.json)
        write_sidecar(*sidecar, "sweep", cfg.seed, records);
    std::cout << "wrote " << csv << " (" << records.size() << " rows)\n";
    return 0;
}

inline int run_phase_cmd(const std::string& config_path, std::optional<std::string> csv_path,
                         std::optional<std::string> pgm_path,
                         std::optional<std::string> json_path) {
    RunConfig cfg = load_config_or_die(config_path);
    if (!cfg.phase) throw ParameterError("phase: config has no experiment.phase section");
    const auto& ph = *cfg.phase;
    const PhaseGrid grid =
        run_phase_transition(ph.rows, ph.cols, ph.sampling_axis, ph.freedom_axis,
                             ph.trials_per_cell, ph.success_threshold, cfg.solver, cfg.seed);
    const std::string csv = csv_path.value_or(cfg.output.csv.value_or("phase.csv"));
    const std::string pgm = pgm_path.value_or(cfg.output.pgm.value_or("phase.pgm"));
    write_phase_csv(csv, grid);
    emit_phase_pgm(pgm, grid);
    if (const auto sidecar = json_path ? json_path : cfg.output.json) {
        nlohmann::json j;
        j["command"] = "phase";
        j["generated_at"] = iso_timestamp();
        j["seed"] = cfg.seed;
        j["trials_per_cell"] = grid.trials_per_cell;
        j["success_threshold"] = grid.success_threshold;
        lowrank::detail::write_atomic(*sidecar, j.dump(2) + "\n");
    }
    std::cout << "wrote " << csv << " and " << pgm << " (" << grid.freedom_axis.size() << "x"
              << grid.sampling_axis.size() << " cells)\n";
    return 0;
}

} // namespace detail

/// Entry point shared by the binary and the tests. Returns the process exit
/// code: 0 success, 1 usage or input error, 2 numerical failure.
inline int dispatch(const std::vector<std::string>& args) {
    CLI::App app{"Low-rank matrix recovery under affine constraints"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "Generate a random completion problem");
    Index g_n1 = 0, g_n2 = 0, g_rank = 0;
    double g_fraction = -1.0;
    Index g_count = -1;
    std::uint64_t g_seed = 0;
    std::string g_out = "problem";
    gen->add_option("--n1", g_n1, "Rows")->required();
    gen->add_option("--n2", g_n2, "Columns")->required();
    gen->add_option("--rank", g_rank, "Rank of the generated matrix")->required();
    gen->add_option("--fraction", g_fraction, "Observed fraction in (0, 1]");
    gen->add_option("--m", g_count, "Observed entry count");
    gen->add_option("--seed", g_seed, "Random seed");
    gen->add_option("--out", g_out, "Output file prefix (default 'problem')");

    // complete
    auto* complete = app.add_subcommand("complete", "Recover a matrix from an observation file");
    std::string c_obs, c_out = "recovered.txt", c_algorithm = "asvt";
    std::string c_truth;
    detail::SolverFlags c_flags;
    complete->add_option("--obs", c_obs, "Observation file")->required();
    complete->add_option("--out", c_out, "Recovered matrix output path");
    complete->add_option("--algorithm", c_algorithm, "asvt or svt")
        ->check(CLI::IsMember({"asvt", "svt"}));
    complete->add_option("--truth", c_truth, "Ground-truth matrix for error reporting");
    c_flags.attach(*complete);

    // benchmark / sweep / phase share config + output flags
    std::string b_config, s_config, p_config;
    std::string b_csv, b_json, s_csv, s_json, p_csv, p_json, p_pgm;
    bool b_timing = false, s_timing = false, b_large = false;

    auto* benchmark = app.add_subcommand("benchmark", "Run solver comparisons to CSV");
    benchmark->add_option("--config", b_config, "JSON run configuration")->required();
    benchmark->add_option("--csv", b_csv, "CSV output path override");
    benchmark->add_option("--json", b_json, "JSON run-summary sidecar path");
    benchmark->add_flag("--timing", b_timing, "Include measured wall times in the CSV");
    benchmark->add_flag("--large", b_large, "Allow problems of size 1500 and above");

    auto* sweep = app.add_subcommand("sweep", "Parameter sweep to CSV");
    sweep->add_option("--config", s_config, "JSON run configuration")->required();
    sweep->add_option("--csv", s_csv, "CSV output path override");
    sweep->add_option("--json", s_json, "JSON run-summary sidecar path");
    sweep->add_flag("--timing", s_timing, "Include measured wall times in the CSV");

    auto* phase = app.add_subcommand("phase", "Phase-transition grid to CSV and PGM");
    phase->add_option("--config", p_config, "JSON run configuration")->required();
    phase->add_option("--csv", p_csv, "CSV output path override");
    phase->add_option("--pgm", p_pgm, "PGM output path override");
    phase->add_option("--json", p_json, "JSON run-summary sidecar path");

    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("lowrank");
    for (const auto& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return 1;
    }

    auto opt = [](const std::string& s) {
        return s.empty() ? std::nullopt : std::optional<std::string>(s);
    };

    try {
        if (gen->parsed()) {
            return detail::run_gen(g_n1, g_n2, g_rank,
                                   g_fraction > 0 ? std::optional<double>(g_fraction) : std::nullopt,
                                   g_count > 0 ? std::optional<Index>(g_count) : std::nullopt,
                                   g_seed, g_out);
        }
        if (complete->parsed())
            return detail::run_complete(c_obs, c_out, c_algorithm, c_flags, opt(c_truth));
        if (benchmark->parsed())
            return detail::run_benchmark_cmd(b_config, opt(b_csv), opt(b_json), b_timing, b_large);
        if (sweep->parsed()) return detail::run_sweep_cmd(s_config, opt(s_csv), opt(s_json), s_timing);
        if (phase->parsed())
            return detail::run_phase_cmd(p_config, opt(p_csv), opt(p_pgm), opt(p_json));
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

} // namespace lowrank::cli
