#pragma once

#include <cstdint>
#include <unordered_set>
#include <utility>
#include <vector>

#include "lowrank/errors.hpp"
#include "lowrank/linalg.hpp"

namespace lowrank {

/// Index set of observed entries for matrix completion. Indices are
/// zero-based, unique, and kept in their listed order; that order defines
/// the layout of every measurement vector built from this set.
class ObservationSet {
public:
    ObservationSet(Index rows, Index cols, std::vector<std::pair<Index, Index>> entries)
        : rows_(rows), cols_(cols), entries_(std::move(entries)) {
        if (rows_ < 1 || cols_ < 1)
            throw ParameterError("ObservationSet: dimensions must be positive");
        if (entries_.empty())
            throw ParameterError("ObservationSet: at least one observation required");
        if (static_cast<std::uint64_t>(entries_.size()) >
            static_cast<std::uint64_t>(rows_) * static_cast<std::uint64_t>(cols_))
            throw ParameterError("ObservationSet: more entries than matrix cells");
        std::unordered_set<std::uint64_t> seen;
        seen.reserve(entries_.size());
        for (const auto& [i, j] : entries_) {
            if (i < 0 || i >= rows_ || j < 0 || j >= cols_)
                throw ParameterError("ObservationSet: index (" + std::to_string(i) + "," +
                                     std::to_string(j) + ") out of range");
            const auto key = static_cast<std::uint64_t>(i) * static_cast<std::uint64_t>(cols_) +
                             static_cast<std::uint64_t>(j);
            if (!seen.insert(key).second)
                throw ParameterError("ObservationSet: duplicate index (" + std::to_string(i) +
                                     "," + std::to_string(j) + ")");
        }
    }

    Index rows() const noexcept { return rows_; }
    Index cols() const noexcept { return cols_; }
    Index size() const noexcept { return static_cast<Index>(entries_.size()); }
    const std::vector<std::pair<Index, Index>>& entries() const noexcept { return entries_; }

private:
    Index rows_;
    Index cols_;
    std::vector<std::pair<Index, Index>> entries_;
};

/// Linear measurement map A : R^{n1 x n2} -> R^m together with its adjoint.
/// Implementations must satisfy <apply(X), y> == <X, adjoint(y)>_F.
class AffineMap {
public:
    virtual ~AffineMap() = default;

    virtual Index input_rows() const = 0;
    virtual Index input_cols() const = 0;
    virtual Index output_dim() const = 0;

    virtual Vector apply(const Matrix& x) const = 0;
    virtual Matrix adjoint(const Vector& y) const = 0;

protected:
    void check_input(const Matrix& x) const {
        if (x.rows() != input_rows() || x.cols() != input_cols())
            throw ShapeError("AffineMap::apply: expected " + std::to_string(input_rows()) +
                             "x" + std::to_string(input_cols()) + " input, got " +
                             std::to_string(x.rows()) + "x" + std::to_string(x.cols()));
    }
    void check_output(const Vector& y) const {
        if (y.size() != output_dim())
            throw ShapeError("AffineMap::adjoint: expected length " +
                             std::to_string(output_dim()) + " vector, got " +
                             std::to_string(y.size()));
    }
};

/// Entry-sampling operator of matrix completion: apply extracts the observed
/// entries in the set's listed order, adjoint scatters them back with zeros
/// elsewhere, so adjoint(apply(.)) is the orthogonal projector onto Omega.
class SamplingOperator final : public AffineMap {
public:
    explicit SamplingOperator(ObservationSet obs) : obs_(std::move(obs)) {}

    Index input_rows() const override { return obs_.rows(); }
    Index input_cols() const override { return obs_.cols(); }
    Index output_dim() const override { return obs_.size(); }

    Vector apply(const Matrix& x) const override {
        check_input(x);
        Vector out(obs_.size());
        Index k = 0;
        for (const auto& [i, j] : obs_.entries()) out(k++) = x(i, j);
        return out;
    }

    Matrix adjoint(const Vector& y) const override {
        check_output(y);
        Matrix out = Matrix::Zero(obs_.rows(), obs_.cols());
        Index k = 0;
        for (const auto& [i, j] : obs_.entries()) out(i, j) = y(k++);
        return out;
    }

    const ObservationSet& observations() const noexcept { return obs_; }

private:
    ObservationSet obs_;
};

/// General dense operator: apply is a * vec(X) with vec taken row-major,
/// adjoint reshapes a^T * y back into an n1 x n2 matrix.
class DenseOperator final : public AffineMap {
public:
    DenseOperator(Matrix a, Index rows, Index cols)
        : a_(std::move(a)), rows_(rows), cols_(cols) {
        if (rows_ < 1 || cols_ < 1)
            throw ParameterError("DenseOperator: dimensions must be positive");
        if (a_.cols() != rows_ * cols_)
            throw ShapeError("DenseOperator: matrix has " + std::to_string(a_.cols()) +
                             " columns, expected n1*n2 = " + std::to_string(rows_ * cols_));
        if (a_.rows() < 1)
            throw ShapeError("DenseOperator: measurement matrix must have rows");
    }

    Index input_rows() const override { return rows_; }
    Index input_cols() const override { return cols_; }
    Index output_dim() const override { return a_.rows(); }

    Vector apply(const Matrix& x) const override {
        check_input(x);
        return a_ * vec_row_major(x);
    }

    Matrix adjoint(const Vector& y) const override {
        check_output(y);
        const Vector z = a_.transpose() * y;
        Matrix out(rows_, cols_);
        for (Index i = 0; i < rows_; ++i)
            for (Index j = 0; j < cols_; ++j) out(i, j) = z(i * cols_ + j);
        return out;
    }

private:
    static Vector vec_row_major(const Matrix& x) {
        Vector v(x.size());
        for (Index i = 0; i < x.rows(); ++i)
            for (Index j = 0; j < x.cols(); ++j) v(i * x.cols() + j) = x(i, j);
        return v;
    }

    Matrix a_;
    Index rows_;
    Index cols_;
};

inline SamplingOperator make_sampling_operator(ObservationSet obs) {
    return SamplingOperator(std::move(obs));
}

inline DenseOperator make_dense_operator(Matrix a, Index rows, Index cols) {
    return DenseOperator(std::move(a), rows, cols);
}

} // namespace lowrank
