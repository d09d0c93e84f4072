#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "wspec/core.hpp"
#include "wspec/rng.hpp"

namespace wspec {

/// Minimal dense row-major real matrix.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* row(std::size_t i) { return data_.data() + i * cols_; }
    const double* row(std::size_t i) const { return data_.data() + i * cols_; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    bool operator==(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw DomainError("matmul: inner dimensions differ");
    Matrix c(a.rows(), b.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* ci = c.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            const double* bk = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
        }
    }
    return c;
}

inline Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

/// X * X^T using symmetry (only the lower triangle is computed).
inline Matrix gram_rows(const Matrix& x) {
    Matrix g(x.rows(), x.rows(), 0.0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double* xi = x.row(i);
        for (std::size_t j = 0; j <= i; ++j) {
            const double* xj = x.row(j);
            double acc = 0.0;
            for (std::size_t k = 0; k < x.cols(); ++k) acc += xi[k] * xj[k];
            g(i, j) = acc;
            g(j, i) = acc;
        }
    }
    return g;
}

inline double max_abs(const Matrix& a) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) m = std::max(m, std::abs(a(i, j)));
    return m;
}

inline bool is_symmetric(const Matrix& a, double rel_tol = 1e-12) {
    if (a.rows() != a.cols()) return false;
    const double scale = std::max(max_abs(a), 1e-300);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = i + 1; j < a.cols(); ++j)
            if (std::abs(a(i, j) - a(j, i)) > rel_tol * scale) return false;
    return true;
}

/// True when every off-diagonal entry is exactly zero.
inline bool is_diagonal(const Matrix& a) {
    if (a.rows() != a.cols()) return false;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (i != j && a(i, j) != 0.0) return false;
    return true;
}

inline Matrix gaussian_matrix(std::size_t rows, std::size_t cols, RandomSource& rng) {
    Matrix g(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) g(i, j) = rng.gaussian();
    return g;
}

/// Haar-distributed random orthogonal matrix: orthonormalize a square
/// standard-Gaussian matrix by modified Gram-Schmidt. The column norms used
/// as pivots are positive, which fixes the sign convention; one
/// re-orthogonalization pass keeps the columns orthogonal to ~1e-14.
inline Matrix haar_orthogonal(std::size_t n, RandomSource& rng) {
    if (n < 1) throw DomainError("haar_orthogonal needs n >= 1");
    Matrix a = gaussian_matrix(n, n, rng);
    // column-major Gram-Schmidt on a row-major store; n stays modest
    for (std::size_t j = 0; j < n; ++j) {
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t k = 0; k < j; ++k) {
                double dot = 0.0;
                for (std::size_t i = 0; i < n; ++i) dot += a(i, k) * a(i, j);
                for (std::size_t i = 0; i < n; ++i) a(i, j) -= dot * a(i, k);
            }
        }
        double norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) norm += a(i, j) * a(i, j);
        norm = std::sqrt(norm);
        if (!(norm > 0.0)) throw DomainError("degenerate Gaussian draw in haar_orthogonal");
        for (std::size_t i = 0; i < n; ++i) a(i, j) /= norm;
    }
    return a;
}

}  // namespace wspec
