#pragma once

#include <algorithm>
#include <cmath>
#include <tuple>
#include <vector>

#include "kaleido/error.hpp"
#include "kaleido/scalar.hpp"

namespace kaleido {

struct Vector {
    std::vector<Scalar> entries;

    Vector() = default;
    explicit Vector(std::size_t len) : entries(len, Scalar{}) {}
    Vector(std::initializer_list<Scalar> list) : entries(list) {}

    std::size_t len() const { return entries.size(); }
    Scalar& operator[](std::size_t i) { return entries[i]; }
    const Scalar& operator[](std::size_t i) const { return entries[i]; }

    static Vector basis(std::size_t len, std::size_t j) {
        Vector v(len);
        v[j] = Scalar{1.0, 0.0};
        return v;
    }
};

inline double norm2_squared(const Vector& v) {
    double s = 0.0;
    for (const auto& z : v.entries) s += std::norm(z);
    return s;
}

inline Scalar inner_product(const Vector& a, const Vector& b) {
    if (a.len() != b.len()) throw DimensionMismatch("inner_product: length mismatch");
    Scalar s{};
    for (std::size_t i = 0; i < a.len(); ++i) s += a[i] * b[i];
    return s;
}

struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<Scalar> entries;  // row-major

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), entries(r * c, Scalar{}) {}

    Scalar& at(std::size_t i, std::size_t j) { return entries[i * cols + j]; }
    const Scalar& at(std::size_t i, std::size_t j) const { return entries[i * cols + j]; }

    static DenseMatrix identity(std::size_t n) {
        DenseMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m.at(i, i) = Scalar{1.0, 0.0};
        return m;
    }

    void check_finite(const char* where) const {
        for (const auto& z : entries) ensure_finite(z, where);
    }
};

// Coordinate triple of a sparse matrix.
struct Triple {
    std::size_t row = 0;
    std::size_t col = 0;
    Scalar value{};
};

// Listing representation; triples are kept sorted row-major, duplicates and
// explicit zeros are rejected.
struct SparseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<Triple> triples;

    SparseMatrix() = default;
    SparseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c) {}
    SparseMatrix(std::size_t r, std::size_t c, std::vector<Triple> ts)
        : rows(r), cols(c), triples(std::move(ts)) {
        normalize();
    }

    std::size_t nnz() const { return triples.size(); }

    void add(std::size_t r, std::size_t c, Scalar v) {
        triples.push_back({r, c, v});
    }

    // Sorts row-major and enforces the invariants.
    void normalize() {
        std::sort(triples.begin(), triples.end(), [](const Triple& a, const Triple& b) {
            return std::tie(a.row, a.col) < std::tie(b.row, b.col);
        });
        for (std::size_t i = 0; i < triples.size(); ++i) {
            const Triple& t = triples[i];
            if (t.row >= rows || t.col >= cols)
                throw InvalidArgument("sparse triple index out of range");
            if (t.value == Scalar{}) throw InvalidArgument("sparse triple stores a zero value");
            ensure_finite(t.value, "sparse matrix");
            if (i > 0 && triples[i - 1].row == t.row && triples[i - 1].col == t.col)
                throw InvalidArgument("duplicate sparse triple");
        }
    }
};

inline DenseMatrix densify(const SparseMatrix& s) {
    DenseMatrix m(s.rows, s.cols);
    for (const auto& t : s.triples) m.at(t.row, t.col) = t.value;
    return m;
}

// y[i] = sum_j W[i,j]*x[j], summed in ascending column order so that sparse
// and dense evaluations of the same matrix agree exactly.
inline Vector dense_mvm(const DenseMatrix& w, const Vector& x) {
    if (w.cols != x.len()) throw DimensionMismatch("dense_mvm: shape mismatch");
    Vector y(w.rows);
    for (std::size_t i = 0; i < w.rows; ++i) {
        Scalar acc{};
        for (std::size_t j = 0; j < w.cols; ++j) acc += w.at(i, j) * x[j];
        ensure_finite(acc, "dense_mvm");
        y[i] = acc;
    }
    return y;
}

inline Vector sparse_mvm(const SparseMatrix& s, const Vector& x) {
    if (s.cols != x.len()) throw DimensionMismatch("sparse_mvm: shape mismatch");
    Vector y(s.rows);
    for (const auto& t : s.triples) y[t.row] += t.value * x[t.col];
    for (const auto& z : y.entries) ensure_finite(z, "sparse_mvm");
    return y;
}

inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols != b.rows) throw DimensionMismatch("matmul: inner dimensions disagree");
    DenseMatrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t k = 0; k < a.cols; ++k) {
            Scalar aik = a.at(i, k);
            if (aik == Scalar{}) continue;
            for (std::size_t j = 0; j < b.cols; ++j) c.at(i, j) += aik * b.at(k, j);
        }
    return c;
}

inline DenseMatrix transpose(const DenseMatrix& a) {
    DenseMatrix t(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) t.at(j, i) = a.at(i, j);
    return t;
}

inline DenseMatrix conjugate_transpose(const DenseMatrix& a) {
    DenseMatrix t(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) t.at(j, i) = std::conj(a.at(i, j));
    return t;
}

inline DenseMatrix subtract(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows != b.rows || a.cols != b.cols)
        throw DimensionMismatch("subtract: shape mismatch");
    DenseMatrix c(a.rows, a.cols);
    for (std::size_t i = 0; i < a.entries.size(); ++i) c.entries[i] = a.entries[i] - b.entries[i];
    return c;
}

// Residual L*W - W*R of a displacement operator pair.
inline DenseMatrix displacement_residual(const DenseMatrix& w, const DenseMatrix& l,
                                         const DenseMatrix& r) {
    if (w.rows != w.cols || l.rows != l.cols || r.rows != r.cols || l.rows != w.rows ||
        r.rows != w.rows)
        throw DimensionMismatch("displacement_residual: operands must be square and same size");
    return subtract(matmul(l, w), matmul(w, r));
}

inline double frobenius_norm(const DenseMatrix& a) {
    double s = 0.0;
    for (const auto& z : a.entries) s += std::norm(z);
    return std::sqrt(s);
}

inline double frobenius_distance(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows != b.rows || a.cols != b.cols)
        throw DimensionMismatch("frobenius_distance: shape mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.entries.size(); ++i) s += std::norm(a.entries[i] - b.entries[i]);
    return std::sqrt(s);
}

inline double frobenius_distance_rel(const DenseMatrix& a, const DenseMatrix& b) {
    return frobenius_distance(a, b) / std::max(1.0, frobenius_norm(a));
}

// Rank by elimination with per-column row pivoting; a pivot counts while its
// magnitude stays above tol * (largest initial entry magnitude).
inline std::size_t numeric_rank(const DenseMatrix& m, double tol = 1e-9) {
    if (tol <= 0.0) throw InvalidArgument("numeric_rank: tol must be positive");
    DenseMatrix a = m;
    double scale = 0.0;
    for (const auto& z : a.entries) scale = std::max(scale, std::abs(z));
    if (scale == 0.0) return 0;
    const double threshold = tol * scale;

    std::vector<bool> used_row(a.rows, false);
    std::size_t rank = 0;
    for (std::size_t j = 0; j < a.cols; ++j) {
        std::size_t pivot_row = a.rows;
        double best = threshold;
        for (std::size_t i = 0; i < a.rows; ++i) {
            if (used_row[i]) continue;
            double mag = std::abs(a.at(i, j));
            if (mag > best) {
                best = mag;
                pivot_row = i;
            }
        }
        if (pivot_row == a.rows) continue;
        used_row[pivot_row] = true;
        ++rank;
        Scalar p = a.at(pivot_row, j);
        for (std::size_t i = 0; i < a.rows; ++i) {
            if (used_row[i] || a.at(i, j) == Scalar{}) continue;
            Scalar f = a.at(i, j) / p;
            for (std::size_t k = j; k < a.cols; ++k) a.at(i, k) -= f * a.at(pivot_row, k);
        }
    }
    return rank;
}

}  // namespace kaleido
