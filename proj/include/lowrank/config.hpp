#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lowrank/errors.hpp"
#include "lowrank/experiments.hpp"
#include "lowrank/solvers.hpp"

namespace lowrank {

struct SweepSection {
    SweepParameter param = SweepParameter::DecayA;
    std::vector<double> values{};
    ProblemSpec base{};  ///< defaults to 300x300, rank 10, 1/3 observed
};

struct PhaseSection {
    Index rows = 80;
    Index cols = 80;
    std::vector<double> sampling_axis{};
    std::vector<double> freedom_axis{};
    int trials_per_cell = 100;
    double success_threshold = 1e-3;
};

struct OutputSection {
    std::optional<std::string> csv{};
    std::optional<std::string> json{};
    std::optional<std::string> pgm{};
    bool timing = false;  ///< measured durations in the CSV break reproducibility
};

/// Parsed run configuration shared by the benchmark, sweep, and phase
/// subcommands. Unknown keys anywhere in the document are rejected.
struct RunConfig {
    std::uint64_t seed = 0;
    SolverConfig solver{};
    std::vector<ProblemSpec> problems{};
    std::vector<Algorithm> algorithms{Algorithm::Asvt, Algorithm::Svt};
    int trials = 1;
    std::optional<SweepSection> sweep{};
    std::optional<PhaseSection> phase{};
    OutputSection output{};
};

namespace detail {

using Json = nlohmann::json;

inline void require_known_keys(const Json& obj, const std::vector<std::string>& known,
                               const std::string& where) {
    for (const auto& item : obj.items()) {
        bool ok = false;
        for (const auto& k : known)
            if (item.key() == k) { ok = true; break; }
        if (!ok) throw ParameterError("config: unknown key '" + item.key() + "' in " + where);
    }
}

inline double number_at(const Json& obj, const std::string& key, const std::string& where) {
    const auto& v = obj.at(key);
    if (!v.is_number()) throw ParameterError("config: " + where + "." + key + " must be a number");
    return v.get<double>();
}

inline std::int64_t integer_at(const Json& obj, const std::string& key, const std::string& where) {
    const auto& v = obj.at(key);
    if (!v.is_number_integer())
        throw ParameterError("config: " + where + "." + key + " must be an integer");
    return v.get<std::int64_t>();
}

/// "auto" or a number; "auto" maps to an unengaged optional.
inline std::optional<double> auto_or_number(const Json& v, const std::string& what) {
    if (v.is_string()) {
        if (v.get<std::string>() == "auto") return std::nullopt;
        throw ParameterError("config: " + what + " must be a number or \"auto\"");
    }
    if (!v.is_number()) throw ParameterError("config: " + what + " must be a number or \"auto\"");
    return v.get<double>();
}

inline ProblemSpec parse_problem(const Json& obj, const std::string& where,
                                 std::uint64_t default_seed) {
    if (!obj.is_object()) throw ParameterError("config: " + where + " must be an object");
    require_known_keys(obj, {"n1", "n2", "rank", "fraction", "m", "seed"}, where);
    ProblemSpec spec;
    spec.rows = static_cast<Index>(integer_at(obj, "n1", where));
    spec.cols = static_cast<Index>(integer_at(obj, "n2", where));
    spec.rank = static_cast<Index>(integer_at(obj, "rank", where));
    if (obj.contains("fraction")) spec.sample_fraction = number_at(obj, "fraction", where);
    if (obj.contains("m")) spec.sample_count = static_cast<Index>(integer_at(obj, "m", where));
    spec.seed = obj.contains("seed") ? obj.at("seed").get<std::uint64_t>() : default_seed;
    spec.validate();
    return spec;
}

inline SolverConfig parse_solver(const Json& obj) {
    SolverConfig cfg;
    if (obj.is_null()) return cfg;
    if (!obj.is_object()) throw ParameterError("config: solver must be an object");
    require_known_keys(obj,
                       {"scale_b", "decay_a", "step_size", "step_sizes", "max_iters", "tolerance",
                        "svt_tau", "relative_tolerance"},
                       "solver");
    if (obj.contains("scale_b")) {
        const auto b = auto_or_number(obj.at("scale_b"), "solver.scale_b");
        if (b) {
            cfg.schedule.mode = ScheduleMode::Explicit;
            cfg.schedule.scale_b = *b;
        }
    }
    if (obj.contains("decay_a")) cfg.schedule.decay_a = number_at(obj, "decay_a", "solver");
    if (cfg.schedule.mode == ScheduleMode::Explicit && !cfg.schedule.decay_a)
        throw ParameterError("config: solver.decay_a required with an explicit scale_b");
    if (obj.contains("step_size")) cfg.step_size = number_at(obj, "step_size", "solver");
    if (obj.contains("step_sizes")) {
        if (!obj.at("step_sizes").is_array())
            throw ParameterError("config: solver.step_sizes must be an array");
        for (const auto& v : obj.at("step_sizes")) {
            if (!v.is_number()) throw ParameterError("config: solver.step_sizes entries must be numbers");
            cfg.step_sizes.push_back(v.get<double>());
        }
    }
    if (obj.contains("max_iters")) cfg.max_iters = static_cast<int>(integer_at(obj, "max_iters", "solver"));
    if (obj.contains("tolerance")) cfg.tolerance = auto_or_number(obj.at("tolerance"), "solver.tolerance");
    if (obj.contains("svt_tau")) cfg.svt_tau = auto_or_number(obj.at("svt_tau"), "solver.svt_tau");
    if (obj.contains("relative_tolerance")) {
        if (!obj.at("relative_tolerance").is_boolean())
            throw ParameterError("config: solver.relative_tolerance must be a boolean");
        cfg.relative_tolerance = obj.at("relative_tolerance").get<bool>();
    }
    cfg.validate();
    return cfg;
}

inline std::vector<double> parse_axis(const Json& section, const std::string& array_key,
                                      const std::string& cells_key, const std::string& where) {
    if (section.contains(array_key)) {
        if (section.contains(cells_key))
            throw ParameterError("config: " + where + " must not set both " + array_key + " and " +
                                 cells_key);
        const auto& arr = section.at(array_key);
        if (!arr.is_array() || arr.empty())
            throw ParameterError("config: " + where + "." + array_key + " must be a non-empty array");
        std::vector<double> out;
        for (const auto& v : arr) {
            if (!v.is_number())
                throw ParameterError("config: " + where + "." + array_key + " entries must be numbers");
            out.push_back(v.get<double>());
        }
        return out;
    }
    long long cells = 20;  // default grid resolution
    if (section.contains(cells_key)) cells = integer_at(section, cells_key, where);
    if (cells < 1) throw ParameterError("config: " + where + "." + cells_key + " must be >= 1");
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(cells));
    for (long long i = 1; i <= cells; ++i)
        out.push_back(static_cast<double>(i) / static_cast<double>(cells));
    return out;
}

} // namespace detail

inline RunConfig parse_run_config(const std::string& text) {
    detail::Json doc;
    try {
        doc = detail::Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw FormatError("config: top level must be an object");
    detail::require_known_keys(doc, {"seed", "solver", "experiment", "output"}, "top level");

    RunConfig cfg;
    if (doc.contains("seed")) {
        if (!doc.at("seed").is_number_integer() && !doc.at("seed").is_number_unsigned())
            throw ParameterError("config: seed must be an integer");
        cfg.seed = doc.at("seed").get<std::uint64_t>();
    }
    if (doc.contains("solver")) cfg.solver = detail::parse_solver(doc.at("solver"));

    if (doc.contains("experiment")) {
        const auto& exp = doc.at("experiment");
        if (!exp.is_object()) throw ParameterError("config: experiment must be an object");
        detail::require_known_keys(exp, {"problems", "algorithms", "trials", "sweep", "phase"},
                                   "experiment");
        if (exp.contains("problems")) {
            if (!exp.at("problems").is_array())
                throw ParameterError("config: experiment.problems must be an array");
            std::size_t idx = 0;
            for (const auto& p : exp.at("problems"))
                cfg.problems.push_back(detail::parse_problem(
                    p, "experiment.problems[" + std::to_string(idx++) + "]", cfg.seed));
        }
        if (exp.contains("algorithms")) {
            if (!exp.at("algorithms").is_array())
                throw ParameterError("config: experiment.algorithms must be an array");
            cfg.algorithms.clear();
            for (const auto& a : exp.at("algorithms")) {
                const std::string name = a.is_string() ? a.get<std::string>() : "";
                if (name == "asvt")
                    cfg.algorithms.push_back(Algorithm::Asvt);
                else if (name == "svt")
                    cfg.algorithms.push_back(Algorithm::Svt);
                else
                    throw ParameterError("config: unknown algorithm '" + name + "'");
            }
            if (cfg.algorithms.empty())
                throw ParameterError("config: experiment.algorithms must not be empty");
        }
        if (exp.contains("trials")) {
            cfg.trials = static_cast<int>(detail::integer_at(exp, "trials", "experiment"));
            if (cfg.trials < 1) throw ParameterError("config: experiment.trials must be >= 1");
        }
        if (exp.contains("sweep")) {
            const auto& sw = exp.at("sweep");
            if (!sw.is_object()) throw ParameterError("config: experiment.sweep must be an object");
            detail::require_known_keys(sw, {"param", "values", "base"}, "experiment.sweep");
            SweepSection section;
            const std::string param =
                sw.contains("param") && sw.at("param").is_string() ? sw.at("param").get<std::string>() : "";
            if (param == "decay_a")
                section.param = SweepParameter::DecayA;
            else if (param == "step_size")
                section.param = SweepParameter::StepSize;
            else
                throw ParameterError("config: experiment.sweep.param must be decay_a or step_size");
            if (!sw.contains("values") || !sw.at("values").is_array() || sw.at("values").empty())
                throw ParameterError("config: experiment.sweep.values must be a non-empty array");
            for (const auto& v : sw.at("values")) {
                if (!v.is_number())
                    throw ParameterError("config: experiment.sweep.values entries must be numbers");
                section.values.push_back(v.get<double>());
            }
            if (sw.contains("base")) {
                section.base = detail::parse_problem(sw.at("base"), "experiment.sweep.base", cfg.seed);
            } else {
                section.base.rows = 300;
                section.base.cols = 300;
                section.base.rank = 10;
                section.base.sample_fraction = 1.0 / 3.0;
                section.base.seed = cfg.seed;
            }
            cfg.sweep = std::move(section);
        }
        if (exp.contains("phase")) {
            const auto& ph = exp.at("phase");
            if (!ph.is_object()) throw ParameterError("config: experiment.phase must be an object");
            detail::require_known_keys(ph,
                                       {"n1", "n2", "sampling", "sampling_cells", "freedom",
                                        "freedom_cells", "trials_per_cell", "success_threshold"},
                                       "experiment.phase");
            PhaseSection section;
            if (ph.contains("n1")) section.rows = static_cast<Index>(detail::integer_at(ph, "n1", "experiment.phase"));
            if (ph.contains("n2")) section.cols = static_cast<Index>(detail::integer_at(ph, "n2", "experiment.phase"));
            section.sampling_axis = detail::parse_axis(ph, "sampling", "sampling_cells", "experiment.phase");
            section.freedom_axis = detail::parse_axis(ph, "freedom", "freedom_cells", "experiment.phase");
            if (ph.contains("trials_per_cell"))
                section.trials_per_cell =
                    static_cast<int>(detail::integer_at(ph, "trials_per_cell", "experiment.phase"));
            if (ph.contains("success_threshold"))
                section.success_threshold = detail::number_at(ph, "success_threshold", "experiment.phase");
            cfg.phase = std::move(section);
        }
    }

    if (doc.contains("output")) {
        const auto& out = doc.at("output");
        if (!out.is_object()) throw ParameterError("config: output must be an object");
        detail::require_known_keys(out, {"csv", "json", "pgm", "timing"}, "output");
        auto path_at = [&](const char* key) -> std::optional<std::string> {
            if (!out.contains(key)) return std::nullopt;
            if (!out.at(key).is_string())
                throw ParameterError(std::string("config: output.") + key + " must be a string");
            return out.at(key).get<std::string>();
        };
        cfg.output.csv = path_at("csv");
        cfg.output.json = path_at("json");
        cfg.output.pgm = path_at("pgm");
        if (out.contains("timing")) {
            if (!out.at("timing").is_boolean())
                throw ParameterError("config: output.timing must be a boolean");
            cfg.output.timing = out.at("timing").get<bool>();
        }
    }
    return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_run_config(text);
}

} // namespace lowrank
