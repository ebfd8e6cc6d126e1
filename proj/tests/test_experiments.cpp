#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

#include "lowrank/experiments.hpp"
#include "oracles.hpp"

using lowrank::Algorithm;
using lowrank::Index;
using lowrank::Matrix;
using lowrank::ProblemSpec;
using lowrank::SolverConfig;

namespace {

ProblemSpec small_spec(std::uint64_t seed) {
    ProblemSpec spec;
    spec.rows = 24;
    spec.cols = 24;
    spec.rank = 2;
    spec.sample_fraction = 0.6;
    spec.seed = seed;
    return spec;
}

SolverConfig fast_config() {
    SolverConfig cfg;
    cfg.max_iters = 80;
    return cfg;
}

} // namespace

TEST_CASE("generate_low_rank produces the requested rank", "[experiments]") {
    const Matrix full = lowrank::generate_low_rank(6, 9, 6, 1);
    const auto f = lowrank::svd(full);
    CHECK(lowrank::numerical_rank(f.sigma, 1e-9 * f.sigma(0)) == 6);

    const Matrix m = lowrank::generate_low_rank(30, 20, 4, 2);
    const auto g = lowrank::svd(m);
    CHECK(lowrank::numerical_rank(g.sigma, 1e-9 * g.sigma(0)) == 4);
}

TEST_CASE("rank-1 matrices have vanishing 2x2 minors", "[experiments]") {
    const Matrix m = lowrank::generate_low_rank(10, 8, 1, 3);
    const double scale = m.cwiseAbs().maxCoeff();
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 1; j < m.cols(); ++j)
            for (Index k = 0; k < i; ++k)
                for (Index l = 0; l < j; ++l) {
                    const double minor = m(k, l) * m(i, j) - m(k, j) * m(i, l);
                    CHECK(std::abs(minor) <= 1e-10 * scale * scale);
                }
}

TEST_CASE("generate_low_rank is deterministic per seed", "[experiments]") {
    const Matrix a = lowrank::generate_low_rank(12, 12, 3, 99);
    const Matrix b = lowrank::generate_low_rank(12, 12, 3, 99);
    const Matrix c = lowrank::generate_low_rank(12, 12, 3, 100);
    CHECK((a - b).norm() == 0.0);
    CHECK((a - c).norm() > 0.0);
}

TEST_CASE("sample_observations covers edge sizes", "[experiments]") {
    const auto all = lowrank::sample_observations(3, 4, 12, 7);
    CHECK(all.size() == 12);
    std::vector<bool> hit(12, false);
    for (const auto& [i, j] : all.entries()) hit[static_cast<std::size_t>(i * 4 + j)] = true;
    for (bool h : hit) CHECK(h);

    const auto one = lowrank::sample_observations(5, 5, 1, 8);
    CHECK(one.size() == 1);

    CHECK_THROWS_AS(lowrank::sample_observations(3, 3, 0, 1), lowrank::ParameterError);
    CHECK_THROWS_AS(lowrank::sample_observations(3, 3, 10, 1), lowrank::ParameterError);
}

TEST_CASE("sample_observations is uniform over cells", "[experiments][slow]") {
    // inclusion frequency of each cell over many seeds stays within five
    // standard errors of m / (n1 n2)
    const Index n = 50;
    const Index m = 500;
    const int seeds = 10000;
    std::vector<int> counts(static_cast<std::size_t>(n * n), 0);
    for (int s = 0; s < seeds; ++s) {
        const auto obs = lowrank::sample_observations(n, n, m, 777000 + static_cast<unsigned>(s));
        for (const auto& [i, j] : obs.entries()) ++counts[static_cast<std::size_t>(i * n + j)];
    }
    const double p = static_cast<double>(m) / static_cast<double>(n * n);
    const double se = std::sqrt(p * (1.0 - p) / seeds);
    int worst_violations = 0;
    for (int c : counts) {
        const double freq = static_cast<double>(c) / seeds;
        if (std::abs(freq - p) > 5.0 * se) ++worst_violations;
    }
    CHECK(worst_violations == 0);
}

TEST_CASE("relative error definition", "[experiments]") {
    const Matrix x = oracle::random_matrix(4, 4, 10);
    CHECK(lowrank::relative_error(x, x) == 0.0);
    CHECK(lowrank::relative_error(x, Matrix::Zero(4, 4)) == Catch::Approx(1.0));
    Matrix d34 = Matrix::Zero(2, 2), d30 = Matrix::Zero(2, 2);
    d34(0, 0) = 3;
    d34(1, 1) = 4;
    d30(0, 0) = 3;
    CHECK(lowrank::relative_error(d34, d30) == Catch::Approx(0.8));
    CHECK_THROWS_AS(lowrank::relative_error(Matrix::Zero(2, 2), x), lowrank::ShapeError);
    CHECK_THROWS_AS(lowrank::relative_error(Matrix::Zero(4, 4), x), lowrank::ParameterError);
}

TEST_CASE("degrees of freedom", "[experiments]") {
    CHECK(lowrank::degrees_of_freedom(10, 10, 0) == 0);
    CHECK(lowrank::degrees_of_freedom(80, 80, 4) == 624);
    CHECK(lowrank::degrees_of_freedom(80, 80, 10) == 1500);
    CHECK_THROWS_AS(lowrank::degrees_of_freedom(4, 4, 5), lowrank::ParameterError);
}

TEST_CASE("run_benchmark is deterministic and ordered", "[experiments]") {
    const std::vector<ProblemSpec> specs{small_spec(42), small_spec(43)};
    const std::vector<Algorithm> algs{Algorithm::Asvt, Algorithm::Svt};
    const auto r1 = lowrank::run_benchmark(specs, algs, fast_config(), 2);
    const auto r2 = lowrank::run_benchmark(specs, algs, fast_config(), 2);
    REQUIRE(r1.size() == 8);

    // spec-major, then algorithm, then trial
    CHECK(r1[0].algorithm == Algorithm::Asvt);
    CHECK(r1[0].trial == 0);
    CHECK(r1[1].trial == 1);
    CHECK(r1[2].algorithm == Algorithm::Svt);
    CHECK(r1[4].spec.seed == 43);

    for (std::size_t i = 0; i < r1.size(); ++i) {
        CHECK(r1[i].trial_seed == r2[i].trial_seed);
        CHECK(r1[i].iterations == r2[i].iterations);
        CHECK(r1[i].relative_error == r2[i].relative_error);
        CHECK(r1[i].converged == r2[i].converged);
    }

    // both algorithms see the same instance within a trial
    CHECK(r1[0].trial_seed == r1[2].trial_seed);
    CHECK(r1[1].trial_seed == r1[3].trial_seed);
}

TEST_CASE("records are independent of harness parallelism", "[experiments]") {
    const std::vector<ProblemSpec> specs{small_spec(3131)};
    const std::vector<Algorithm> algs{Algorithm::Asvt, Algorithm::Svt};

    setenv("LOWRANK_THREADS", "1", 1);
    const auto serial = lowrank::run_benchmark(specs, algs, fast_config(), 3);
    setenv("LOWRANK_THREADS", "2", 1);
    const auto parallel = lowrank::run_benchmark(specs, algs, fast_config(), 3);
    unsetenv("LOWRANK_THREADS");

    REQUIRE(serial.size() == parallel.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
        CHECK(serial[i].trial_seed == parallel[i].trial_seed);
        CHECK(serial[i].iterations == parallel[i].iterations);
        CHECK(serial[i].relative_error == parallel[i].relative_error);
    }
}

TEST_CASE("benchmark relative error is recomputed from the ground truth", "[experiments]") {
    const std::vector<ProblemSpec> specs{small_spec(77)};
    const auto recs = lowrank::run_benchmark(specs, {Algorithm::Asvt}, fast_config(), 1);
    REQUIRE(recs.size() == 1);
    const auto& rec = recs[0];
    REQUIRE(rec.note.empty());

    // replay the trial by hand from the recorded seed
    const auto problem = lowrank::detail::make_trial_problem(rec.spec, rec.trial_seed);
    const auto result = lowrank::asvt_solve(problem.op, problem.measurements, fast_config());
    CHECK(rec.relative_error ==
          Catch::Approx(lowrank::relative_error(problem.truth, result.x_hat)).margin(1e-15));
}

TEST_CASE("singleton sweep equals the matching benchmark row", "[experiments]") {
    const ProblemSpec base = small_spec(4242);
    SolverConfig cfg = fast_config();
    const auto sweep = lowrank::run_sweep(base, lowrank::SweepParameter::StepSize, {1.0}, cfg, 2);
    const auto bench = lowrank::run_benchmark({base}, {Algorithm::Asvt}, cfg, 2);
    REQUIRE(sweep.size() == bench.size());
    for (std::size_t i = 0; i < sweep.size(); ++i) {
        CHECK(sweep[i].trial_seed == bench[i].trial_seed);
        CHECK(sweep[i].iterations == bench[i].iterations);
        CHECK(sweep[i].relative_error == bench[i].relative_error);
    }
}

TEST_CASE("sweep preserves input order and shares instances across values", "[experiments]") {
    const ProblemSpec base = small_spec(11);
    const auto recs =
        lowrank::run_sweep(base, lowrank::SweepParameter::StepSize, {0.5, 1.0}, fast_config(), 2);
    REQUIRE(recs.size() == 4);
    CHECK(recs[0].trial == 0);
    CHECK(recs[1].trial == 1);
    CHECK(recs[2].trial == 0);
    // same trial index, same instance, different swept value
    CHECK(recs[0].trial_seed == recs[2].trial_seed);
    CHECK(recs[0].iterations != recs[2].iterations);
    CHECK_THROWS_AS(
        lowrank::run_sweep(base, lowrank::SweepParameter::StepSize, {}, fast_config(), 1),
        lowrank::ParameterError);
}

TEST_CASE("phase transition grid at a tiny scale", "[experiments][slow]") {
    SolverConfig cfg;
    cfg.max_iters = 120;
    const std::vector<double> sampling{0.3, 1.0};
    const std::vector<double> freedom{0.2, 1.0};
    const auto grid = lowrank::run_phase_transition(16, 16, sampling, freedom, 6, 1e-3, cfg, 303);

    REQUIRE(grid.cells.size() == 4);
    for (const auto& cell : grid.cells) {
        CHECK(cell.success_rate() >= 0.0);
        CHECK(cell.success_rate() <= 1.0);
        if (cell.trials > 0) {
            CHECK(cell.rank >= 1);
            CHECK(cell.freedom == lowrank::degrees_of_freedom(16, 16, cell.rank));
        }
    }

    // full sampling with a rank-1-ish cell recovers every time
    const auto& easy = grid.at(0, 1);  // freedom 0.2, sampling 1.0
    CHECK(easy.sample_count == 256);
    CHECK(easy.success_rate() == 1.0);

    // m < d_r cells never succeed
    for (const auto& cell : grid.cells)
        if (cell.trials > 0 && cell.sample_count < cell.freedom) CHECK(cell.successes == 0);

    // deterministic repeat
    const auto again = lowrank::run_phase_transition(16, 16, sampling, freedom, 6, 1e-3, cfg, 303);
    for (std::size_t i = 0; i < grid.cells.size(); ++i)
        CHECK(grid.cells[i].successes == again.cells[i].successes);
}

TEST_CASE("phase transition rejects bad axes", "[experiments]") {
    SolverConfig cfg;
    CHECK_THROWS_AS(lowrank::run_phase_transition(8, 8, {}, {0.5}, 1, 1e-3, cfg, 1),
                    lowrank::ParameterError);
    CHECK_THROWS_AS(lowrank::run_phase_transition(8, 8, {0.5}, {1.5}, 1, 1e-3, cfg, 1),
                    lowrank::ParameterError);
    CHECK_THROWS_AS(lowrank::run_phase_transition(8, 8, {0.5}, {0.5}, 0, 1e-3, cfg, 1),
                    lowrank::ParameterError);
}

TEST_CASE("derive_seed is a pure function with independent streams", "[experiments]") {
    CHECK(lowrank::derive_seed(1, 2, 3, 4) == lowrank::derive_seed(1, 2, 3, 4));
    CHECK(lowrank::derive_seed(1, 2, 3, 4) != lowrank::derive_seed(1, 2, 3, 5));
    CHECK(lowrank::derive_seed(1, 2, 3, 4) != lowrank::derive_seed(2, 2, 3, 4));
    CHECK(lowrank::derive_seed(1, 2, 3, 4) != lowrank::derive_seed(1, 3, 3, 4));
}

TEST_CASE("problem spec validation", "[experiments]") {
    ProblemSpec spec = small_spec(1);
    spec.rank = 30;
    CHECK_THROWS_AS(spec.validate(), lowrank::ParameterError);
    spec = small_spec(1);
    spec.sample_count = 10;  // both count and fraction set
    CHECK_THROWS_AS(spec.validate(), lowrank::ParameterError);
    spec = small_spec(1);
    spec.sample_fraction = 1.5;
    CHECK_THROWS_AS(spec.validate(), lowrank::ParameterError);
}
