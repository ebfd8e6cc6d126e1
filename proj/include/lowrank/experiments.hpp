#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "lowrank/errors.hpp"
#include "lowrank/linalg.hpp"
#include "lowrank/operators.hpp"
#include "lowrank/parallel.hpp"
#include "lowrank/solvers.hpp"

namespace lowrank {

enum class Algorithm { Asvt, Svt };

inline const char* algorithm_name(Algorithm a) { return a == Algorithm::Asvt ? "asvt" : "svt"; }

/// One random recovery instance: dimensions, rank, how much is observed
/// (count or fraction, exactly one), and the base seed.
struct ProblemSpec {
    Index rows = 0;
    Index cols = 0;
    Index rank = 0;
    std::optional<Index> sample_count{};
    std::optional<double> sample_fraction{};
    std::uint64_t seed = 0;

    void validate() const {
        if (rows < 1 || cols < 1) throw ParameterError("ProblemSpec: dimensions must be positive");
        if (rank < 1 || rank > std::min(rows, cols))
            throw ParameterError("ProblemSpec: rank must lie in [1, min(n1, n2)]");
        if (sample_count.has_value() == sample_fraction.has_value())
            throw ParameterError("ProblemSpec: exactly one of sample count and fraction required");
        if (sample_fraction && !(*sample_fraction > 0.0 && *sample_fraction <= 1.0))
            throw ParameterError("ProblemSpec: sample fraction must lie in (0, 1]");
        const Index m = resolved_sample_count();
        if (m < 1 || m > rows * cols)
            throw ParameterError("ProblemSpec: sample count must lie in [1, n1*n2]");
    }

    Index resolved_sample_count() const {
        if (sample_count) return *sample_count;
        const auto cells = static_cast<double>(rows) * static_cast<double>(cols);
        auto m = static_cast<Index>(std::llround(*sample_fraction * cells));
        m = std::max<Index>(m, 1);
        m = std::min<Index>(m, rows * cols);
        return m;
    }

    double resolved_fraction() const {
        return static_cast<double>(resolved_sample_count()) /
               (static_cast<double>(rows) * static_cast<double>(cols));
    }
};

struct BenchmarkRecord {
    ProblemSpec spec;
    Algorithm algorithm = Algorithm::Asvt;
    int trial = 0;
    std::uint64_t trial_seed = 0;
    int iterations = 0;
    double relative_error = std::numeric_limits<double>::quiet_NaN();
    double wall_time_ms = 0.0;
    bool converged = false;
    std::string note{};  ///< failure description when a solve aborted
};

/// Success-probability grid over sampling fraction (columns) and the
/// freedom ratio d_r/m (rows). Skipped cells (no representable rank) carry
/// trials = 0.
struct PhaseCell {
    double requested_sampling = 0.0;
    double requested_freedom = 0.0;
    double realized_sampling = 0.0;
    double realized_freedom = 0.0;
    Index sample_count = 0;
    Index rank = 0;
    Index freedom = 0;  ///< d_r of the realized rank
    int successes = 0;
    int trials = 0;

    double success_rate() const { return trials > 0 ? static_cast<double>(successes) / trials : 0.0; }
};

struct PhaseGrid {
    std::vector<double> sampling_axis;  ///< m/(n1*n2), ascending, in (0, 1]
    std::vector<double> freedom_axis;   ///< d_r/m, in (0, 1]
    std::vector<PhaseCell> cells;       ///< row-major, rows follow freedom_axis
    int trials_per_cell = 0;
    double success_threshold = 0.0;

    const PhaseCell& at(std::size_t freedom_idx, std::size_t sampling_idx) const {
        return cells[freedom_idx * sampling_axis.size() + sampling_idx];
    }
};

namespace detail {

inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace detail

/// Per-trial seed: a pure hash of (base seed, spec index, stream, trial).
/// Stream 0 is problem generation; it deliberately excludes the algorithm
/// so every algorithm sees identical instances within a trial.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t spec_index,
                                 std::uint64_t stream, std::uint64_t trial) {
    std::uint64_t h = detail::mix64(base);
    h = detail::mix64(h ^ detail::mix64(spec_index));
    h = detail::mix64(h ^ detail::mix64(stream));
    h = detail::mix64(h ^ detail::mix64(trial));
    return h;
}

/// Random rank-r matrix X = A * B with independent standard normal factors,
/// filled row by row from a generator seeded with `seed`.
inline Matrix generate_low_rank(Index rows, Index cols, Index rank, std::uint64_t seed) {
    if (rows < 1 || cols < 1) throw ParameterError("generate_low_rank: dimensions must be positive");
    if (rank < 1 || rank > std::min(rows, cols))
        throw ParameterError("generate_low_rank: rank must lie in [1, min(n1, n2)]");
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix a(rows, rank);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < rank; ++j) a(i, j) = normal(gen);
    Matrix b(rank, cols);
    for (Index i = 0; i < rank; ++i)
        for (Index j = 0; j < cols; ++j) b(i, j) = normal(gen);
    return a * b;
}

/// Uniform size-m subset of the index grid (Floyd's sampling), returned in
/// row-major order, deterministic per seed.
inline ObservationSet sample_observations(Index rows, Index cols, Index count, std::uint64_t seed) {
    if (rows < 1 || cols < 1)
        throw ParameterError("sample_observations: dimensions must be positive");
    const std::uint64_t cells = static_cast<std::uint64_t>(rows) * static_cast<std::uint64_t>(cols);
    if (count < 1 || static_cast<std::uint64_t>(count) > cells)
        throw ParameterError("sample_observations: count must lie in [1, n1*n2]");

    std::mt19937_64 gen(seed);
    std::unordered_set<std::uint64_t> chosen;
    chosen.reserve(static_cast<std::size_t>(count));
    for (std::uint64_t j = cells - static_cast<std::uint64_t>(count); j < cells; ++j) {
        std::uniform_int_distribution<std::uint64_t> pick(0, j);
        const std::uint64_t t = pick(gen);
        if (!chosen.insert(t).second) chosen.insert(j);
    }

    std::vector<std::uint64_t> linear(chosen.begin(), chosen.end());
    std::sort(linear.begin(), linear.end());
    std::vector<std::pair<Index, Index>> entries;
    entries.reserve(linear.size());
    for (std::uint64_t v : linear)
        entries.emplace_back(static_cast<Index>(v / static_cast<std::uint64_t>(cols)),
                             static_cast<Index>(v % static_cast<std::uint64_t>(cols)));
    return ObservationSet(rows, cols, std::move(entries));
}

/// ||x_hat - x_true||_F / ||x_true||_F.
inline double relative_error(const Matrix& x_true, const Matrix& x_hat) {
    if (x_true.rows() != x_hat.rows() || x_true.cols() != x_hat.cols())
        throw ShapeError("relative_error: dimension mismatch");
    const double denom = x_true.norm();
    if (!(denom > 0.0)) throw ParameterError("relative_error: reference matrix has zero norm");
    return (x_hat - x_true).norm() / denom;
}

/// Parameter count of a rank-r n1 x n2 matrix: r * (n1 + n2 - r).
inline Index degrees_of_freedom(Index rows, Index cols, Index rank) {
    if (rank < 0 || rank > std::min(rows, cols))
        throw ParameterError("degrees_of_freedom: rank must lie in [0, min(n1, n2)]");
    return rank * (rows + cols - rank);
}

namespace detail {

struct TrialProblem {
    Matrix truth;
    SamplingOperator op;
    Vector measurements;
};

inline TrialProblem make_trial_problem(const ProblemSpec& spec, std::uint64_t trial_seed) {
    Matrix truth = generate_low_rank(spec.rows, spec.cols, spec.rank, mix64(trial_seed ^ 1));
    SamplingOperator op(
        sample_observations(spec.rows, spec.cols, spec.resolved_sample_count(), mix64(trial_seed ^ 2)));
    Vector b = op.apply(truth);
    return TrialProblem{std::move(truth), std::move(op), std::move(b)};
}

inline BenchmarkRecord run_trial(const ProblemSpec& spec, Algorithm algorithm, int trial,
                                 std::uint64_t trial_seed, const SolverConfig& cfg) {
    BenchmarkRecord rec;
    rec.spec = spec;
    rec.algorithm = algorithm;
    rec.trial = trial;
    rec.trial_seed = trial_seed;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        const TrialProblem problem = make_trial_problem(spec, trial_seed);
        const SolveResult result = algorithm == Algorithm::Asvt
                                       ? asvt_solve(problem.op, problem.measurements, cfg)
                                       : svt_solve(problem.op, problem.measurements, cfg);
        rec.iterations = result.iterations_run;
        rec.converged = result.converged;
        // Always recomputed against the ground truth, never read off the trace.
        rec.relative_error = relative_error(problem.truth, result.x_hat);
    } catch (const Error& err) {
        rec.converged = false;
        rec.relative_error = std::numeric_limits<double>::infinity();
        rec.note = err.what();
    }
    rec.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

} // namespace detail

/// Cross product specs x algorithms x trials, each trial on an independent
/// seeded instance shared across algorithms. Output order is spec-major,
/// then algorithm, then trial; solve failures land in the record's note.
inline std::vector<BenchmarkRecord> run_benchmark(const std::vector<ProblemSpec>& specs,
                                                  const std::vector<Algorithm>& algorithms,
                                                  const SolverConfig& cfg, int trials) {
    if (trials < 1) throw ParameterError("run_benchmark: trials must be >= 1");
    if (algorithms.empty()) throw ParameterError("run_benchmark: no algorithms selected");
    for (const auto& s : specs) s.validate();
    cfg.validate();

    struct Task {
        const ProblemSpec* spec;
        std::size_t spec_index;
        Algorithm algorithm;
        int trial;
    };
    std::vector<Task> tasks;
    tasks.reserve(specs.size() * algorithms.size() * static_cast<std::size_t>(trials));
    for (std::size_t s = 0; s < specs.size(); ++s)
        for (const Algorithm a : algorithms)
            for (int t = 0; t < trials; ++t) tasks.push_back({&specs[s], s, a, t});

    std::vector<BenchmarkRecord> records(tasks.size());
    parallel_for_index(tasks.size(), [&](std::size_t i) {
        const Task& task = tasks[i];
        const std::uint64_t seed = derive_seed(task.spec->seed, task.spec_index, 0,
                                               static_cast<std::uint64_t>(task.trial));
        records[i] = detail::run_trial(*task.spec, task.algorithm, task.trial, seed, cfg);
    });
    return records;
}

enum class SweepParameter { DecayA, StepSize };

inline const char* sweep_parameter_name(SweepParameter p) {
    return p == SweepParameter::DecayA ? "decay_a" : "step_size";
}

/// Section III-B style sweep: ASVT on the base problem for each parameter
/// value, value-major output, trial seeds independent of the swept value so
/// every value sees the same instances.
inline std::vector<BenchmarkRecord> run_sweep(const ProblemSpec& base, SweepParameter param,
                                              const std::vector<double>& values,
                                              const SolverConfig& cfg, int trials) {
    if (values.empty()) throw ParameterError("run_sweep: values must be non-empty");
    for (double v : values)
        if (!(v > 0.0)) throw ParameterError("run_sweep: swept values must be positive");
    if (trials < 1) throw ParameterError("run_sweep: trials must be >= 1");
    base.validate();
    cfg.validate();

    std::vector<BenchmarkRecord> records(values.size() * static_cast<std::size_t>(trials));
    parallel_for_index(records.size(), [&](std::size_t i) {
        const std::size_t vi = i / static_cast<std::size_t>(trials);
        const int trial = static_cast<int>(i % static_cast<std::size_t>(trials));
        SolverConfig local = cfg;
        if (param == SweepParameter::DecayA)
            local.schedule.decay_a = values[vi];
        else
            local.step_size = values[vi];
        const std::uint64_t seed = derive_seed(base.seed, 0, 0, static_cast<std::uint64_t>(trial));
        records[i] = detail::run_trial(base, Algorithm::Asvt, trial, seed, local);
    });
    return records;
}

namespace detail {

/// Nearest rank whose d_r approximates target = freedom * m; the quadratic
/// r^2 - (n1+n2) r + target = 0 is solved and rounded to the closer of the
/// two neighboring integers by |d_r - target|.
inline std::optional<Index> rank_for_freedom(Index rows, Index cols, double target) {
    const double n = static_cast<double>(rows + cols);
    const double disc = n * n - 4.0 * target;
    if (disc < 0.0) return std::nullopt;
    const double root = (n - std::sqrt(disc)) / 2.0;
    const Index max_rank = std::min(rows, cols);
    const auto clamp = [&](Index r) { return std::max<Index>(1, std::min(r, max_rank)); };
    const Index lo = clamp(static_cast<Index>(std::floor(root)));
    const Index hi = clamp(static_cast<Index>(std::ceil(root)));
    const auto dist = [&](Index r) {
        return std::abs(static_cast<double>(degrees_of_freedom(rows, cols, r)) - target);
    };
    return dist(lo) <= dist(hi) ? lo : hi;
}

} // namespace detail

/// Phase-transition study: success probability per (sampling fraction,
/// freedom ratio) cell, each cell averaging trials_per_cell independent
/// ASVT runs, success meaning relative error < success_threshold.
inline PhaseGrid run_phase_transition(Index rows, Index cols, std::vector<double> sampling_axis,
                                      std::vector<double> freedom_axis, int trials_per_cell,
                                      double success_threshold, const SolverConfig& cfg,
                                      std::uint64_t seed) {
    if (rows < 1 || cols < 1)
        throw ParameterError("run_phase_transition: dimensions must be positive");
    if (sampling_axis.empty() || freedom_axis.empty())
        throw ParameterError("run_phase_transition: axes must be non-empty");
    for (double v : sampling_axis)
        if (!(v > 0.0 && v <= 1.0))
            throw ParameterError("run_phase_transition: sampling fractions must lie in (0, 1]");
    for (double v : freedom_axis)
        if (!(v > 0.0 && v <= 1.0))
            throw ParameterError("run_phase_transition: freedom ratios must lie in (0, 1]");
    if (trials_per_cell < 1)
        throw ParameterError("run_phase_transition: trials_per_cell must be >= 1");
    if (!(success_threshold > 0.0))
        throw ParameterError("run_phase_transition: success threshold must be positive");
    cfg.validate();

    PhaseGrid grid;
    grid.sampling_axis = std::move(sampling_axis);
    grid.freedom_axis = std::move(freedom_axis);
    grid.trials_per_cell = trials_per_cell;
    grid.success_threshold = success_threshold;
    grid.cells.resize(grid.sampling_axis.size() * grid.freedom_axis.size());

    const double cells_total = static_cast<double>(rows) * static_cast<double>(cols);
    for (std::size_t fi = 0; fi < grid.freedom_axis.size(); ++fi) {
        for (std::size_t si = 0; si < grid.sampling_axis.size(); ++si) {
            PhaseCell& cell = grid.cells[fi * grid.sampling_axis.size() + si];
            cell.requested_sampling = grid.sampling_axis[si];
            cell.requested_freedom = grid.freedom_axis[fi];
            Index m = static_cast<Index>(std::llround(cell.requested_sampling * cells_total));
            m = std::max<Index>(1, std::min<Index>(m, rows * cols));
            const auto rank =
                detail::rank_for_freedom(rows, cols, cell.requested_freedom * static_cast<double>(m));
            if (!rank) continue;  // unrepresentable cell, left with trials = 0
            cell.sample_count = m;
            cell.rank = *rank;
            cell.freedom = degrees_of_freedom(rows, cols, *rank);
            cell.realized_sampling = static_cast<double>(m) / cells_total;
            cell.realized_freedom = static_cast<double>(cell.freedom) / static_cast<double>(m);
            cell.trials = trials_per_cell;
        }
    }

    struct Trial {
        std::size_t cell_index;
        int trial;
    };
    std::vector<Trial> trials;
    trials.reserve(grid.cells.size() * static_cast<std::size_t>(trials_per_cell));
    for (std::size_t c = 0; c < grid.cells.size(); ++c)
        if (grid.cells[c].trials > 0)
            for (int t = 0; t < trials_per_cell; ++t) trials.push_back({c, t});

    std::vector<unsigned char> success(trials.size(), 0);
    parallel_for_index(trials.size(), [&](std::size_t i) {
        const auto& [cell_index, trial] = trials[i];
        const PhaseCell& cell = grid.cells[cell_index];
        ProblemSpec spec;
        spec.rows = rows;
        spec.cols = cols;
        spec.rank = cell.rank;
        spec.sample_count = cell.sample_count;
        spec.seed = seed;
        const std::uint64_t trial_seed =
            derive_seed(seed, cell_index, 0, static_cast<std::uint64_t>(trial));
        const BenchmarkRecord rec =
            detail::run_trial(spec, Algorithm::Asvt, trial, trial_seed, cfg);
        if (rec.note.empty() && rec.relative_error < grid.success_threshold) success[i] = 1;
    });
    for (std::size_t i = 0; i < trials.size(); ++i)
        if (success[i]) ++grid.cells[trials[i].cell_index].successes;

    return grid;
}

} // namespace lowrank
