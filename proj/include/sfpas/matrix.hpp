#pragma once

#include "sfpas/exact_scalar.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <utility>
#include <vector>

namespace sfpas {

namespace detail {
template <class T>
bool entry_is_zero(const T& x) {
    return is_zero(x);
}
}  // namespace detail

/// Dense row-major matrix over an exact ring (Rational, ExactScalar,
/// polynomials). The float side of the library uses Eigen::MatrixXcd.
template <class T>
class DenseMatrix {
public:
    using value_type = T;

    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<T> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_) throw std::invalid_argument("DenseMatrix: entry count mismatch");
    }
    DenseMatrix(std::initializer_list<std::initializer_list<T>> rows) {
        rows_ = rows.size();
        cols_ = rows_ ? rows.begin()->size() : 0;
        data_.reserve(rows_ * cols_);
        for (const auto& row : rows) {
            if (row.size() != cols_) throw std::invalid_argument("DenseMatrix: ragged initializer");
            data_.insert(data_.end(), row.begin(), row.end());
        }
    }

    static DenseMatrix identity(std::size_t n) {
        DenseMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1);
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    const std::vector<T>& data() const { return data_; }

    bool is_zero() const {
        return std::all_of(data_.begin(), data_.end(), [](const T& x) { return detail::entry_is_zero(x); });
    }

    DenseMatrix transpose() const {
        DenseMatrix t(cols_, rows_);
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
        return t;
    }

    DenseMatrix column(std::size_t c) const {
        DenseMatrix v(rows_, 1);
        for (std::size_t r = 0; r < rows_; ++r) v(r, 0) = (*this)(r, c);
        return v;
    }

    DenseMatrix select_columns(const std::vector<std::size_t>& cols) const {
        DenseMatrix out(rows_, cols.size());
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t k = 0; k < cols.size(); ++k) out(r, k) = (*this)(r, cols[k]);
        return out;
    }

    /// [A | B]
    DenseMatrix hstack(const DenseMatrix& other) const {
        if (other.rows_ != rows_) throw std::invalid_argument("hstack: row count mismatch");
        DenseMatrix out(rows_, cols_ + other.cols_);
        for (std::size_t r = 0; r < rows_; ++r) {
            for (std::size_t c = 0; c < cols_; ++c) out(r, c) = (*this)(r, c);
            for (std::size_t c = 0; c < other.cols_; ++c) out(r, cols_ + c) = other(r, c);
        }
        return out;
    }

    DenseMatrix& operator+=(const DenseMatrix& o) {
        check_same_shape(o);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }
    DenseMatrix& operator-=(const DenseMatrix& o) {
        check_same_shape(o);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }
    DenseMatrix& operator*=(const T& s) {
        for (auto& x : data_) x *= s;
        return *this;
    }

    friend DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b) { return a += b; }
    friend DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b) { return a -= b; }
    friend DenseMatrix operator*(DenseMatrix a, const T& s) { return a *= s; }
    friend DenseMatrix operator*(const T& s, DenseMatrix a) { return a *= s; }
    friend DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b) {
        if (a.cols_ != b.rows_) throw std::invalid_argument("matrix product: inner dimension mismatch");
        DenseMatrix out(a.rows_, b.cols_);
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t k = 0; k < a.cols_; ++k) {
                const T& aik = a(i, k);
                if (detail::entry_is_zero(aik)) continue;
                for (std::size_t j = 0; j < b.cols_; ++j) out(i, j) += aik * b(k, j);
            }
        return out;
    }
    friend bool operator==(const DenseMatrix& a, const DenseMatrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    void check_same_shape(const DenseMatrix& o) const {
        if (o.rows_ != rows_ || o.cols_ != cols_) throw std::invalid_argument("matrix shape mismatch");
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

using ExactMatrix = DenseMatrix<ExactScalar>;
using RationalMatrix = DenseMatrix<Rational>;
using FloatMatrix = Eigen::MatrixXcd;

inline ExactMatrix adjoint(const ExactMatrix& m) {
    ExactMatrix t(m.cols(), m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) t(c, r) = m(r, c).conj();
    return t;
}

inline FloatMatrix adjoint(const FloatMatrix& m) { return m.adjoint(); }

inline ExactMatrix to_exact(const RationalMatrix& m) {
    ExactMatrix out(m.rows(), m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = ExactScalar(m(r, c));
    return out;
}

inline FloatMatrix to_float(const ExactMatrix& m) {
    FloatMatrix out(static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols()));
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c)
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = m(r, c).to_complex();
    return out;
}

// ---------------------------------------------------------------------------
// Exact elimination

/// Rank by fraction-free (Bareiss) elimination over an integral domain.
/// Pivot: first nonzero entry of the current column at or below the current
/// row, columns scanned left to right.
template <class T>
std::size_t bareiss_rank(DenseMatrix<T> a) {
    const std::size_t rows = a.rows(), cols = a.cols();
    T prev(1);
    std::size_t rank = 0;
    for (std::size_t c = 0; c < cols && rank < rows; ++c) {
        std::size_t p = rank;
        while (p < rows && is_zero(a(p, c))) ++p;
        if (p == rows) continue;
        if (p != rank)
            for (std::size_t j = 0; j < cols; ++j) std::swap(a(p, j), a(rank, j));
        for (std::size_t i = rank + 1; i < rows; ++i) {
            for (std::size_t j = c + 1; j < cols; ++j) {
                T num = a(rank, c) * a(i, j) - a(i, c) * a(rank, j);
                a(i, j) = num / prev;
            }
            a(i, c) = T{};
        }
        prev = a(rank, c);
        ++rank;
    }
    return rank;
}

/// Determinant of a square matrix by Bareiss elimination.
template <class T>
T bareiss_determinant(DenseMatrix<T> a) {
    const std::size_t n = a.rows();
    if (a.cols() != n) throw std::invalid_argument("determinant: matrix not square");
    if (n == 0) return T(1);
    T prev(1);
    bool negate = false;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        std::size_t p = k;
        while (p < n && is_zero(a(p, k))) ++p;
        if (p == n) return T{};
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(p, j), a(k, j));
            negate = !negate;
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            for (std::size_t j = k + 1; j < n; ++j) {
                T num = a(k, k) * a(i, j) - a(i, k) * a(k, j);
                a(i, j) = num / prev;
            }
            a(i, k) = T{};
        }
        prev = a(k, k);
    }
    T det = a(n - 1, n - 1);
    return negate ? T{} - det : det;
}

/// Reduced row echelon form over a field; returns pivot columns.
template <class T>
std::vector<std::size_t> rref_in_place(DenseMatrix<T>& a) {
    std::vector<std::size_t> pivots;
    std::size_t row = 0;
    for (std::size_t c = 0; c < a.cols() && row < a.rows(); ++c) {
        std::size_t p = row;
        while (p < a.rows() && is_zero(a(p, c))) ++p;
        if (p == a.rows()) continue;
        if (p != row)
            for (std::size_t j = 0; j < a.cols(); ++j) std::swap(a(p, j), a(row, j));
        T inv = T(1) / a(row, c);
        for (std::size_t j = c; j < a.cols(); ++j) a(row, j) *= inv;
        for (std::size_t i = 0; i < a.rows(); ++i) {
            if (i == row || is_zero(a(i, c))) continue;
            T factor = a(i, c);
            for (std::size_t j = c; j < a.cols(); ++j) a(i, j) -= factor * a(row, j);
        }
        pivots.push_back(c);
        ++row;
    }
    return pivots;
}

inline std::size_t rank_exact(const ExactMatrix& a) { return bareiss_rank(a); }
inline std::size_t rank_exact(const RationalMatrix& a) { return bareiss_rank(a); }

/// Basis of the right kernel, one column vector per free column of the
/// RREF (free entry set to 1). Empty iff the matrix is injective.
template <class T>
std::vector<DenseMatrix<T>> kernel_basis(const DenseMatrix<T>& a) {
    DenseMatrix<T> r = a;
    const auto pivots = rref_in_place(r);
    std::vector<bool> is_pivot(a.cols(), false);
    for (auto p : pivots) is_pivot[p] = true;
    std::vector<DenseMatrix<T>> basis;
    for (std::size_t free = 0; free < a.cols(); ++free) {
        if (is_pivot[free]) continue;
        DenseMatrix<T> v(a.cols(), 1);
        v(free, 0) = T(1);
        for (std::size_t k = 0; k < pivots.size(); ++k) v(pivots[k], 0) = T{} - r(k, free);
        basis.push_back(std::move(v));
    }
    return basis;
}

/// Columns of `a` at its pivot positions: a basis of the column space.
template <class T>
DenseMatrix<T> column_space_basis(const DenseMatrix<T>& a) {
    DenseMatrix<T> r = a;
    return a.select_columns(rref_in_place(r));
}

/// Packs a list of column vectors into one matrix with `rows` rows.
template <class T>
DenseMatrix<T> columns_to_matrix(const std::vector<DenseMatrix<T>>& cols, std::size_t rows) {
    DenseMatrix<T> out(rows, cols.size());
    for (std::size_t k = 0; k < cols.size(); ++k)
        for (std::size_t r = 0; r < rows; ++r) out(r, k) = cols[k](r, 0);
    return out;
}

/// Orthogonal projector onto the column span of `basis` (columns assumed
/// linearly independent): B (B^* B)^{-1} B^*.
inline ExactMatrix orthogonal_projector(const ExactMatrix& basis) {
    const std::size_t k = basis.cols();
    if (k == 0) return ExactMatrix(basis.rows(), basis.rows());
    ExactMatrix gram = adjoint(basis) * basis;
    // Invert the Gram matrix through RREF of [G | I].
    ExactMatrix aug = gram.hstack(ExactMatrix::identity(k));
    const auto piv = rref_in_place(aug);
    if (piv.size() != k || piv.back() >= k) throw std::invalid_argument("projector: dependent basis");
    ExactMatrix inv(k, k);
    for (std::size_t r = 0; r < k; ++r)
        for (std::size_t c = 0; c < k; ++c) inv(r, c) = aug(r, k + c);
    return basis * inv * adjoint(basis);
}

// ---------------------------------------------------------------------------
// Float Hermitian eigen-decomposition

struct HermitianEigen {
    std::vector<double> eigenvalues;  // ascending
    FloatMatrix eigenvectors;         // columns, orthonormal
};

/// Eigen-decomposition of a Hermitian matrix. Rejects inputs whose
/// anti-Hermitian part exceeds tol * max(1, ||H||).
inline HermitianEigen hermitian_eigen(const FloatMatrix& h, double tol = 1e-12) {
    if (h.rows() != h.cols()) throw std::invalid_argument("hermitian_eigen: matrix not square");
    const double scale = std::max(1.0, h.norm());
    if ((h - h.adjoint()).norm() > tol * scale)
        throw std::invalid_argument("hermitian_eigen: matrix is not Hermitian within tolerance");
    HermitianEigen out;
    if (h.rows() == 0) return out;
    Eigen::SelfAdjointEigenSolver<FloatMatrix> solver(h);
    if (solver.info() != Eigen::Success) throw LimitExceeded("hermitian_eigen: no convergence");
    const auto& ev = solver.eigenvalues();
    out.eigenvalues.assign(ev.data(), ev.data() + ev.size());
    out.eigenvectors = solver.eigenvectors();
    return out;
}

/// Tuple of Hermitian blocks, one per symmetry factor. `Matrix` is
/// ExactMatrix or FloatMatrix.
template <class Matrix>
struct HermitianTuple {
    std::vector<Matrix> blocks;
};

using ExactHermitianTuple = HermitianTuple<ExactMatrix>;
using FloatHermitianTuple = HermitianTuple<FloatMatrix>;

inline bool is_hermitian(const ExactMatrix& m) { return m.rows() == m.cols() && adjoint(m) == m; }

inline bool is_hermitian(const FloatMatrix& m, double rel_tol = 1e-12) {
    return m.rows() == m.cols() && (m - m.adjoint()).norm() <= rel_tol * std::max(1.0, m.norm());
}

}  // namespace sfpas
