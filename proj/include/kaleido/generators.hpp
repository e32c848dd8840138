#pragma once

#include <cmath>
#include <numbers>

#include "kaleido/matrix.hpp"

namespace kaleido {

// F[i,j] = w^(i*j) with w = exp(-2*pi*I/n); n must be a power of two so the
// matrix stays available to the butterfly pipeline downstream.
inline DenseMatrix gen_fourier(std::size_t n) {
    if (!is_power_of_two(n)) throw InvalidArgument("gen_fourier: n must be a power of two");
    DenseMatrix f(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            std::size_t k = (i * j) % n;
            double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
            f.at(i, j) = std::polar(1.0, angle);
        }
    return f;
}

// V[i,j] = a[i]^j with 0^0 = 1.
inline DenseMatrix gen_vandermonde(const Vector& a, std::size_t n) {
    for (std::size_t i = 0; i < a.len(); ++i)
        for (std::size_t j = i + 1; j < a.len(); ++j)
            if (a[i] == a[j]) throw InvalidArgument("gen_vandermonde: points must be distinct");
    DenseMatrix v(a.len(), n);
    for (std::size_t i = 0; i < a.len(); ++i) {
        Scalar p{1.0, 0.0};
        for (std::size_t j = 0; j < n; ++j) {
            v.at(i, j) = p;
            p *= a[i];
        }
    }
    v.check_finite("gen_vandermonde");
    return v;
}

// C[i,j] = 1 / (s[i] - t[j]).
inline DenseMatrix gen_cauchy(const Vector& s, const Vector& t) {
    for (std::size_t i = 0; i < s.len(); ++i)
        for (std::size_t j = i + 1; j < s.len(); ++j)
            if (s[i] == s[j]) throw InvalidArgument("gen_cauchy: s entries must be distinct");
    for (std::size_t i = 0; i < t.len(); ++i)
        for (std::size_t j = i + 1; j < t.len(); ++j)
            if (t[i] == t[j]) throw InvalidArgument("gen_cauchy: t entries must be distinct");
    for (std::size_t i = 0; i < s.len(); ++i)
        for (std::size_t j = 0; j < t.len(); ++j)
            if (s[i] == t[j]) throw InvalidArgument("gen_cauchy: s and t must not intersect");
    DenseMatrix c(s.len(), t.len());
    for (std::size_t i = 0; i < s.len(); ++i)
        for (std::size_t j = 0; j < t.len(); ++j) c.at(i, j) = Scalar{1.0, 0.0} / (s[i] - t[j]);
    c.check_finite("gen_cauchy");
    return c;
}

// Superdiagonal shift: Z[i,j] = 1 iff i = j-1.
inline SparseMatrix gen_shift(std::size_t n) {
    if (n < 1) throw InvalidArgument("gen_shift: n must be at least 1");
    SparseMatrix z(n, n);
    for (std::size_t i = 0; i + 1 < n; ++i) z.add(i, i + 1, Scalar{1.0, 0.0});
    z.normalize();
    return z;
}

inline DenseMatrix gen_lowrank(const DenseMatrix& l, const DenseMatrix& r) {
    return matmul(l, r);
}

inline DenseMatrix diag_matrix(const Vector& d) {
    DenseMatrix m(d.len(), d.len());
    for (std::size_t i = 0; i < d.len(); ++i) m.at(i, i) = d[i];
    return m;
}

}  // namespace kaleido
