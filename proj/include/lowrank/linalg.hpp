#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <string>

#include "lowrank/errors.hpp"

namespace lowrank {

/// The universal dense array currency. Storage is Eigen's; the row-major
/// convention referenced by file formats and vec() applies to the logical
/// entry order only.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline double frobenius_norm(const Matrix& m) { return m.norm(); }

/// Thin SVD of a real matrix: u is n1 x p, v is n2 x p, sigma holds the
/// p = min(n1, n2) singular values sorted descending.
struct SvdFactors {
    Matrix u;
    Vector sigma;
    Matrix v;
};

inline SvdFactors svd(const Matrix& m) {
    if (m.rows() < 1 || m.cols() < 1)
        throw ShapeError("svd: matrix must have positive dimensions");
    Eigen::BDCSVD<Matrix> dec(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (dec.info() != Eigen::Success)
        throw NumericalError("svd did not converge for " + std::to_string(m.rows()) +
                             "x" + std::to_string(m.cols()) + " matrix");
    return SvdFactors{dec.matrixU(), dec.singularValues(), dec.matrixV()};
}

inline Matrix reconstruct(const SvdFactors& f) {
    if (f.u.cols() != f.sigma.size() || f.v.cols() != f.sigma.size())
        throw ShapeError("reconstruct: factor dimensions are inconsistent");
    return f.u * f.sigma.asDiagonal() * f.v.transpose();
}

inline double nuclear_norm(const Matrix& m) { return svd(m).sigma.sum(); }

/// Count of singular values above an absolute cutoff.
inline Index numerical_rank(const Vector& sigma, double cutoff = 1e-10) {
    Index r = 0;
    for (Index i = 0; i < sigma.size(); ++i)
        if (sigma(i) > cutoff) ++r;
    return r;
}

} // namespace lowrank
