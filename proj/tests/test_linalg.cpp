#include <catch2/catch_amalgamated.hpp>

#include "lowrank/linalg.hpp"
#include "lowrank/experiments.hpp"
#include "oracles.hpp"

using lowrank::Matrix;
using lowrank::Vector;

namespace {

Matrix diag2(double a, double b) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return m;
}

Matrix rank1_example() {
    Matrix m(2, 2);
    m << 1, 2, 2, 4;
    return m;
}

} // namespace

TEST_CASE("svd of a diagonal matrix", "[linalg]") {
    const auto f = lowrank::svd(diag2(3, 1));
    REQUIRE(f.sigma.size() == 2);
    CHECK(f.sigma(0) == Catch::Approx(3.0).margin(1e-12));
    CHECK(f.sigma(1) == Catch::Approx(1.0).margin(1e-12));
    CHECK((lowrank::reconstruct(f) - diag2(3, 1)).norm() < 1e-10);
}

TEST_CASE("svd of the zero matrix", "[linalg]") {
    const auto f = lowrank::svd(Matrix::Zero(4, 4));
    REQUIRE(f.sigma.size() == 4);
    for (int i = 0; i < 4; ++i) CHECK(f.sigma(i) == 0.0);
    CHECK(lowrank::reconstruct(f).norm() == 0.0);
}

TEST_CASE("svd of a rank-1 outer product matches the 2x2 oracle", "[linalg]") {
    const auto [hi, lo] = oracle::singular_values_2x2(1, 2, 2, 4);
    REQUIRE(hi == Catch::Approx(5.0).margin(1e-12));
    REQUIRE(lo == Catch::Approx(0.0).margin(1e-12));

    const auto f = lowrank::svd(rank1_example());
    CHECK(f.sigma(0) == Catch::Approx(5.0).margin(1e-10));
    CHECK(f.sigma(1) == Catch::Approx(0.0).margin(1e-10));
    CHECK((lowrank::reconstruct(f) - rank1_example()).norm() < 1e-8);
}

TEST_CASE("svd factors are orthonormal and reconstruct the input", "[linalg]") {
    const Matrix m = oracle::random_matrix(17, 9, 71);
    const auto f = lowrank::svd(m);
    REQUIRE(f.u.cols() == 9);
    REQUIRE(f.v.cols() == 9);
    CHECK((f.u.transpose() * f.u - Matrix::Identity(9, 9)).norm() < 1e-10);
    CHECK((f.v.transpose() * f.v - Matrix::Identity(9, 9)).norm() < 1e-10);
    for (int i = 1; i < f.sigma.size(); ++i) CHECK(f.sigma(i) <= f.sigma(i - 1));
    CHECK((lowrank::reconstruct(f) - m).norm() <= 1e-8 * m.norm());
}

TEST_CASE("reconstruct round trips and rejects inconsistent factors", "[linalg]") {
    const auto f = lowrank::svd(diag2(3, 1));
    CHECK((lowrank::reconstruct(f) - diag2(3, 1)).norm() < 1e-12);

    lowrank::SvdFactors zeroed = f;
    zeroed.sigma.setZero();
    CHECK(lowrank::reconstruct(zeroed).norm() == 0.0);

    lowrank::SvdFactors bad = f;
    bad.sigma = Vector::Ones(3);
    CHECK_THROWS_AS(lowrank::reconstruct(bad), lowrank::ShapeError);
}

TEST_CASE("frobenius norm", "[linalg]") {
    CHECK(lowrank::frobenius_norm(Matrix::Zero(3, 5)) == 0.0);
    CHECK(lowrank::frobenius_norm(diag2(3, 4)) == Catch::Approx(5.0).margin(1e-14));
    CHECK(lowrank::frobenius_norm(rank1_example()) == Catch::Approx(5.0).margin(1e-14));
}

TEST_CASE("nuclear norm", "[linalg]") {
    CHECK(lowrank::nuclear_norm(diag2(3, 1)) == Catch::Approx(4.0).margin(1e-12));
    CHECK(lowrank::nuclear_norm(Matrix::Zero(3, 3)) == 0.0);
    CHECK(lowrank::nuclear_norm(rank1_example()) == Catch::Approx(5.0).margin(1e-10));
}

TEST_CASE("frobenius norm squared equals the sum of squared singular values", "[linalg]") {
    std::mt19937 shape_gen(2024);
    std::uniform_int_distribution<int> dim(1, 50);
    for (int t = 0; t < 40; ++t) {
        const Matrix m = oracle::random_matrix(dim(shape_gen), dim(shape_gen), 100 + t);
        const auto f = lowrank::svd(m);
        const double frob2 = lowrank::frobenius_norm(m) * lowrank::frobenius_norm(m);
        CHECK(frob2 == Catch::Approx(f.sigma.squaredNorm()).epsilon(1e-8));
    }
}

TEST_CASE("svd reconstruct round trip over many random matrices", "[linalg]") {
    std::mt19937 shape_gen(7);
    std::uniform_int_distribution<int> dim(1, 12);
    for (int t = 0; t < 1000; ++t) {
        const Matrix m = oracle::random_matrix(dim(shape_gen), dim(shape_gen), 5000 + t);
        const auto f = lowrank::svd(m);
        const double scale = std::max(m.norm(), 1e-300);
        REQUIRE((lowrank::reconstruct(f) - m).norm() <= 1e-8 * scale);
    }
}

TEST_CASE("norm ordering: nuclear >= frobenius >= spectral", "[linalg]") {
    for (int t = 0; t < 25; ++t) {
        const Matrix m = oracle::random_matrix(8, 6, 900 + t);
        const auto f = lowrank::svd(m);
        const double nuc = lowrank::nuclear_norm(m);
        const double frob = lowrank::frobenius_norm(m);
        CHECK(nuc >= frob - 1e-10);
        CHECK(frob >= f.sigma(0) - 1e-10);
    }
}

TEST_CASE("singular values above cutoff count the constructed rank", "[linalg]") {
    for (int r = 1; r <= 5; ++r) {
        const Matrix m = lowrank::generate_low_rank(20, 15, r, 40 + static_cast<unsigned>(r));
        const auto f = lowrank::svd(m);
        CHECK(lowrank::numerical_rank(f.sigma, 1e-9 * f.sigma(0)) == r);
    }
}

TEST_CASE("svd rejects empty shapes", "[linalg]") {
    CHECK_THROWS_AS(lowrank::svd(Matrix(0, 3)), lowrank::ShapeError);
}
