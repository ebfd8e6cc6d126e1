#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "lowrank/errors.hpp"
#include "lowrank/linalg.hpp"
#include "lowrank/operators.hpp"

namespace lowrank {

enum class ScheduleMode { Explicit, AutoScale };

/// Exponentially decaying threshold tau_k = scale_b * exp(-decay_a * k).
///
/// In AutoScale mode the scale is resolved at solve start from the data:
/// scale_b = 1.01 * sigma_max(A*(b)), so the schedule starts just above the
/// spectrum of the back-projected measurements, and decay_a (when not given)
/// is chosen so the threshold reaches the stopping tolerance by max_iters.
struct ThresholdSchedule {
    ScheduleMode mode = ScheduleMode::AutoScale;
    double scale_b = 0.0;
    std::optional<double> decay_a{};

    void validate() const {
        if (mode == ScheduleMode::Explicit) {
            if (!(scale_b > 0.0))
                throw ParameterError("ThresholdSchedule: explicit scale_b must be positive");
            if (!decay_a.has_value())
                throw ParameterError("ThresholdSchedule: explicit mode requires decay_a");
        }
        if (decay_a.has_value() && !(*decay_a >= 0.0))
            throw ParameterError("ThresholdSchedule: decay_a must be non-negative");
    }
};

/// Threshold for iteration k >= 1. The schedule must be resolved (explicit).
inline double threshold_at(const ThresholdSchedule& s, int k) {
    if (s.mode != ScheduleMode::Explicit)
        throw StateError("threshold_at: schedule not resolved (auto_scale)");
    if (k < 1) throw ParameterError("threshold_at: iteration index must be >= 1");
    s.validate();
    return s.scale_b * std::exp(-(*s.decay_a) * static_cast<double>(k));
}

struct SolverConfig {
    ThresholdSchedule schedule{};
    double step_size = 1.0;
    /// Optional per-iteration step sizes; when shorter than the run, the
    /// last entry is reused. Empty means the constant step_size.
    std::vector<double> step_sizes{};
    int max_iters = 200;
    /// Stopping tolerance epsilon. Unset: 1e-4 * ||A*(b)||_F.
    std::optional<double> tolerance{};
    /// Fixed threshold for the SVT baseline. Unset: 5 * sqrt(n1 * n2).
    std::optional<double> svt_tau{};
    /// Compare iterate change against tolerance * ||X_k||_F instead.
    bool relative_tolerance = false;

    void validate() const {
        schedule.validate();
        if (max_iters < 1) throw ParameterError("SolverConfig: max_iters must be >= 1");
        if (!(step_size > 0.0)) throw ParameterError("SolverConfig: step_size must be positive");
        for (double d : step_sizes)
            if (!(d > 0.0)) throw ParameterError("SolverConfig: step sizes must be positive");
        if (tolerance.has_value() && !(*tolerance >= 0.0))
            throw ParameterError("SolverConfig: tolerance must be non-negative");
        if (svt_tau.has_value() && !(*svt_tau > 0.0))
            throw ParameterError("SolverConfig: svt_tau must be positive");
    }

    double step_at(int k) const {
        if (step_sizes.empty()) return step_size;
        const auto i = std::min<std::size_t>(static_cast<std::size_t>(k - 1), step_sizes.size() - 1);
        return step_sizes[i];
    }
};

struct IterationStat {
    double threshold;  ///< tau_k used by this iteration
    double change;     ///< e = ||X_k - X_{k-1}||_F
    double residual;   ///< ||b - A(X_k)||_2
    double wall_ms;
};

struct SolveResult {
    Matrix x_hat;
    int iterations_run = 0;
    bool converged = false;
    std::vector<IterationStat> trace{};
    double resolved_scale_b = 0.0;
    double resolved_decay_a = 0.0;
    double resolved_tolerance = 0.0;
    double resolved_svt_tau = 0.0;
};

namespace detail {

enum class SpectrumMap { Hard, Soft };

/// What the correction delta_k * A*(b - A(X_k)) is applied to. The SVT
/// baseline accumulates it on Y across iterations; the adaptive solver
/// applies it to the thresholded iterate itself, so spurious directions
/// below the threshold are wiped each pass instead of piling up in Y and
/// eventually crossing the decaying threshold.
enum class UpdateBase { Accumulated, Iterate };

/// Map the spectrum and rebuild from the surviving leading factors.
/// Singular values are sorted descending so survivors form a prefix.
inline Matrix map_spectrum(const SvdFactors& f, double tau, SpectrumMap mode) {
    const Index p = f.sigma.size();
    Vector mapped(p);
    Index keep = 0;
    for (Index i = 0; i < p; ++i) {
        const double s = f.sigma(i);
        const double v = mode == SpectrumMap::Hard ? (s < tau ? 0.0 : s)
                                                   : std::max(s - tau, 0.0);
        mapped(i) = v;
        if (v > 0.0) keep = i + 1;
    }
    if (keep == 0) return Matrix::Zero(f.u.rows(), f.v.rows());
    return f.u.leftCols(keep) * mapped.head(keep).asDiagonal() * f.v.leftCols(keep).transpose();
}

struct ResolvedRun {
    double scale_b = 0.0;
    double decay_a = 0.0;
    double tolerance = 0.0;
    double svt_tau = 0.0;
    double back_projection_norm = 0.0;  // ||A*(b)||_F, scales the divergence guard
};

inline ResolvedRun resolve_run(const AffineMap& op, const Vector& b, const SolverConfig& cfg,
                               bool adaptive) {
    cfg.validate();
    if (b.size() != op.output_dim())
        throw ShapeError("solve: measurement vector length " + std::to_string(b.size()) +
                         " does not match operator output dimension " +
                         std::to_string(op.output_dim()));
    if (!b.allFinite()) throw ParameterError("solve: measurement vector has non-finite entries");

    const Matrix back = op.adjoint(b);
    ResolvedRun r;
    r.back_projection_norm = back.norm();
    r.tolerance = cfg.tolerance.value_or(1e-4 * r.back_projection_norm);

    if (adaptive) {
        if (cfg.schedule.mode == ScheduleMode::Explicit) {
            r.scale_b = cfg.schedule.scale_b;
            r.decay_a = *cfg.schedule.decay_a;
        } else {
            // The first thresholded state is delta_1 * A*(b); the ladder must
            // start just above that spectrum or large steps let spurious
            // directions through on the very first pass.
            const double sigma_max =
                r.back_projection_norm > 0.0 ? cfg.step_at(1) * svd(back).sigma(0) : 0.0;
            r.scale_b = sigma_max > 0.0 ? 1.01 * sigma_max : 1.0;
            if (cfg.schedule.decay_a.has_value()) {
                r.decay_a = *cfg.schedule.decay_a;
            } else {
                // Aim the schedule at the stopping scale by the last iteration;
                // floor the target so a zero tolerance stays well defined.
                const double target = std::max(r.tolerance, r.scale_b * 1e-16);
                r.decay_a = std::max(0.0, std::log(r.scale_b / target) /
                                              static_cast<double>(cfg.max_iters));
            }
        }
    } else {
        r.svt_tau = cfg.svt_tau.value_or(
            5.0 * std::sqrt(static_cast<double>(op.input_rows()) *
                            static_cast<double>(op.input_cols())));
    }
    return r;
}

/// Shared fixed-point loop of both solvers. TauFn yields tau_k for k >= 1.
template <class TauFn>
SolveResult iterate_thresholding(const AffineMap& op, const Vector& b, const SolverConfig& cfg,
                                 const ResolvedRun& run, SpectrumMap mode, UpdateBase base,
                                 TauFn tau_of) {
    using clock = std::chrono::steady_clock;

    Matrix y = Matrix::Zero(op.input_rows(), op.input_cols());
    Matrix x = y;
    Matrix x_prev = y;

    SolveResult result;
    result.resolved_scale_b = run.scale_b;
    result.resolved_decay_a = run.decay_a;
    result.resolved_tolerance = run.tolerance;
    result.resolved_svt_tau = run.svt_tau;
    result.trace.reserve(static_cast<std::size_t>(cfg.max_iters));

    const double guard = 1e12 * run.back_projection_norm;

    for (int k = 1; k <= cfg.max_iters; ++k) {
        const auto t0 = clock::now();
        const double tau = tau_of(k);

        SvdFactors f;
        try {
            f = svd(y);
        } catch (const NumericalError& err) {
            throw NumericalError(std::string(err.what()) + " at iteration " + std::to_string(k), k);
        }
        x = map_spectrum(f, tau, mode);

        const Vector residual = b - op.apply(x);
        const Matrix y_step = cfg.step_at(k) * op.adjoint(residual);
        if (base == UpdateBase::Iterate)
            y = x + y_step;
        else
            y += y_step;

        if (!y.allFinite() || (guard > 0.0 && y.norm() > guard))
            throw DivergenceError("solve: iterate diverged at iteration " + std::to_string(k), k);

        const double change = (x - x_prev).norm();
        const double elapsed_ms =
            std::chrono::duration<double, std::milli>(clock::now() - t0).count();
        result.trace.push_back({tau, change, residual.norm(), elapsed_ms});

        // Stop when the whole solver state (X, Y) is stationary. Testing X
        // alone would also trip on iterations where the threshold still masks
        // every update (X pinned at zero while Y absorbs the data), so the Y
        // increment must be small too.
        const double scale = cfg.relative_tolerance ? run.tolerance * x.norm() : run.tolerance;
        if (change <= scale && y_step.norm() <= scale) {
            result.converged = true;
            x_prev = x;
            break;
        }
        x_prev.swap(x);
    }

    result.x_hat = std::move(x_prev);
    result.iterations_run = static_cast<int>(result.trace.size());
    return result;
}

} // namespace detail

/// Keep singular values >= tau unchanged, zero the rest (strict-less-than).
inline Matrix hard_threshold(const Matrix& x, double tau) {
    if (!(tau >= 0.0)) throw ParameterError("hard_threshold: tau must be non-negative");
    return detail::map_spectrum(svd(x), tau, detail::SpectrumMap::Hard);
}

/// Shrink every singular value by tau, clamping at zero.
inline Matrix soft_threshold(const Matrix& x, double tau) {
    if (!(tau >= 0.0)) throw ParameterError("soft_threshold: tau must be non-negative");
    return detail::map_spectrum(svd(x), tau, detail::SpectrumMap::Soft);
}

/// Adaptive singular value thresholding: X_k = hard_threshold(Y_{k-1}, tau_k)
/// with tau_k = b * exp(-a k) and Y_k = X_k + delta_k * A*(b - A(X_k)).
/// Basing the correction on the thresholded iterate keeps the method stable:
/// a Y that instead accumulated every correction collects sampling-noise
/// directions that the decaying threshold eventually admits, after which the
/// iterate degenerates into a fit of the raw observations.
inline SolveResult asvt_solve(const AffineMap& op, const Vector& b, const SolverConfig& cfg) {
    const auto run = detail::resolve_run(op, b, cfg, /*adaptive=*/true);
    return detail::iterate_thresholding(
        op, b, cfg, run, detail::SpectrumMap::Hard, detail::UpdateBase::Iterate,
        [&run](int k) { return run.scale_b * std::exp(-run.decay_a * static_cast<double>(k)); });
}

/// Fixed-threshold baseline: X_k = soft_threshold(Y_{k-1}, tau) with the
/// accumulated update Y_k = Y_{k-1} + delta_k * A*(b - A(X_k)) and the same
/// stopping rule as asvt_solve.
inline SolveResult svt_solve(const AffineMap& op, const Vector& b, const SolverConfig& cfg) {
    const auto run = detail::resolve_run(op, b, cfg, /*adaptive=*/false);
    return detail::iterate_thresholding(op, b, cfg, run, detail::SpectrumMap::Soft,
                                        detail::UpdateBase::Accumulated,
                                        [&run](int) { return run.svt_tau; });
}

} // namespace lowrank
