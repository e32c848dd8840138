#pragma once

#include <cstdint>
#include <vector>

#include "kaleido/matrix.hpp"

namespace kaleido {

// Block diagonal matrix of n/k butterfly factors [[D1,D2],[D3,D4]], each D a
// (k/2)-diagonal. Diagonals are stored block-major: entry j of block b lives
// at index b*(k/2)+j, so exactly 2n coefficients in total.
struct ButterflyFactorMatrix {
    std::size_t n = 2;
    std::size_t k = 2;
    std::vector<Scalar> d1, d2, d3, d4;

    ButterflyFactorMatrix() = default;
    ButterflyFactorMatrix(std::size_t n_, std::size_t k_) : n(n_), k(k_) {
        if (!is_power_of_two(n) || !is_power_of_two(k) || k < 2 || k > n || n % k != 0)
            throw InvalidArgument("butterfly factor: bad sizes");
        d1.assign(n / 2, Scalar{});
        d2.assign(n / 2, Scalar{});
        d3.assign(n / 2, Scalar{});
        d4.assign(n / 2, Scalar{});
    }

    static ButterflyFactorMatrix identity(std::size_t n, std::size_t k) {
        ButterflyFactorMatrix f(n, k);
        for (std::size_t i = 0; i < n / 2; ++i) {
            f.d1[i] = Scalar{1.0, 0.0};
            f.d4[i] = Scalar{1.0, 0.0};
        }
        return f;
    }

    // The conjugate transpose swaps the off-diagonal roles and conjugates;
    // the result is again a butterfly factor matrix of the same shape.
    ButterflyFactorMatrix conjugate_transpose() const {
        ButterflyFactorMatrix t(n, k);
        for (std::size_t i = 0; i < n / 2; ++i) {
            t.d1[i] = std::conj(d1[i]);
            t.d2[i] = std::conj(d3[i]);
            t.d3[i] = std::conj(d2[i]);
            t.d4[i] = std::conj(d4[i]);
        }
        return t;
    }
};

// Applies y = F*x; 2n multiply-adds, 4 per block pair.
inline Vector factor_mvm(const ButterflyFactorMatrix& f, const Vector& x,
                         std::uint64_t* mul_adds = nullptr) {
    if (x.len() != f.n) throw DimensionMismatch("factor_mvm: length mismatch");
    Vector y(f.n);
    const std::size_t half = f.k / 2;
    for (std::size_t b = 0; b < f.n / f.k; ++b) {
        const std::size_t base = b * f.k;
        for (std::size_t j = 0; j < half; ++j) {
            const std::size_t idx = b * half + j;
            const Scalar top = x[base + j];
            const Scalar bot = x[base + half + j];
            y[base + j] = f.d1[idx] * top + f.d2[idx] * bot;
            y[base + half + j] = f.d3[idx] * top + f.d4[idx] * bot;
            if (mul_adds) *mul_adds += 4;
        }
    }
    return y;
}

// Product of factor matrices at block sizes n, n/2, ..., 2, stored in that
// order. Size 1 is the empty product (identity).
struct ButterflyMatrix {
    std::size_t n = 1;
    std::vector<ButterflyFactorMatrix> factors;

    ButterflyMatrix() = default;
    explicit ButterflyMatrix(std::size_t n_) : n(n_) {
        if (!is_power_of_two(n)) throw InvalidArgument("butterfly: n must be a power of two");
    }

    static ButterflyMatrix identity(std::size_t n) {
        ButterflyMatrix b(n);
        for (std::size_t k = n; k >= 2; k /= 2)
            b.factors.push_back(ButterflyFactorMatrix::identity(n, k));
        return b;
    }

    void check() const {
        std::size_t expect = n;
        if (factors.size() != (n == 1 ? 0 : log2_exact(n)))
            throw InvalidArgument("butterfly: wrong factor count");
        for (const auto& f : factors) {
            if (f.n != n || f.k != expect) throw InvalidArgument("butterfly: bad factor shape");
            expect /= 2;
        }
    }

    ButterflyMatrix conjugate() const {
        ButterflyMatrix b(n);
        for (const auto& f : factors) {
            ButterflyFactorMatrix c = f;
            for (std::size_t i = 0; i < f.n / 2; ++i) {
                c.d1[i] = std::conj(f.d1[i]);
                c.d2[i] = std::conj(f.d2[i]);
                c.d3[i] = std::conj(f.d3[i]);
                c.d4[i] = std::conj(f.d4[i]);
            }
            b.factors.push_back(std::move(c));
        }
        return b;
    }
};

// y = B*x, applying the smallest block size first.
inline Vector butterfly_mvm(const ButterflyMatrix& b, const Vector& x,
                            std::uint64_t* mul_adds = nullptr) {
    if (x.len() != b.n) throw DimensionMismatch("butterfly_mvm: length mismatch");
    Vector v = x;
    for (std::size_t i = b.factors.size(); i-- > 0;) v = factor_mvm(b.factors[i], v, mul_adds);
    return v;
}

// y = B^* x. The conjugate transpose reverses the factor order, so the stored
// order is already the application order.
inline Vector butterfly_mvm_conj_transpose(const ButterflyMatrix& b, const Vector& x,
                                           std::uint64_t* mul_adds = nullptr) {
    if (x.len() != b.n) throw DimensionMismatch("butterfly_mvm: length mismatch");
    Vector v = x;
    for (const auto& f : b.factors) v = factor_mvm(f.conjugate_transpose(), v, mul_adds);
    return v;
}

inline DenseMatrix densify(const ButterflyMatrix& b) {
    DenseMatrix m(b.n, b.n);
    for (std::size_t j = 0; j < b.n; ++j) {
        Vector col = butterfly_mvm(b, Vector::basis(b.n, j));
        for (std::size_t i = 0; i < b.n; ++i) m.at(i, j) = col[i];
    }
    return m;
}

inline DenseMatrix densify(const ButterflyFactorMatrix& f) {
    DenseMatrix m(f.n, f.n);
    for (std::size_t j = 0; j < f.n; ++j) {
        Vector col = factor_mvm(f, Vector::basis(f.n, j));
        for (std::size_t i = 0; i < f.n; ++i) m.at(i, j) = col[i];
    }
    return m;
}

// One hierarchy stage acting as b1 * b2^*.
struct KMatrixStage {
    ButterflyMatrix b1;
    ButterflyMatrix b2;

    static KMatrixStage identity(std::size_t size) {
        return {ButterflyMatrix::identity(size), ButterflyMatrix::identity(size)};
    }
};

// n x n matrix represented as the upper-left corner of a width-w product of
// stages over an en-dimensional space: pad with zeros, run every stage
// (stages[0] first), truncate back to n.
struct KMatrix {
    std::size_t n = 1;
    std::size_t e = 1;
    std::vector<KMatrixStage> stages;

    KMatrix() = default;
    KMatrix(std::size_t n_, std::size_t e_, std::vector<KMatrixStage> stages_)
        : n(n_), e(e_), stages(std::move(stages_)) {
        check();
    }

    std::size_t width() const { return stages.size(); }
    std::size_t stage_size() const { return n * e; }

    void check() const {
        if (!is_power_of_two(n) || !is_power_of_two(e))
            throw InvalidArgument("kmatrix: n and e must be powers of two");
        if (stages.empty()) throw InvalidArgument("kmatrix: width must be at least 1");
        for (const auto& st : stages) {
            if (st.b1.n != n * e || st.b2.n != n * e)
                throw InvalidArgument("kmatrix: stage size mismatch");
            st.b1.check();
            st.b2.check();
        }
    }
};

inline Vector kmatrix_mvm(const KMatrix& k, const Vector& x, std::uint64_t* mul_adds = nullptr) {
    if (x.len() != k.n) throw DimensionMismatch("kmatrix_mvm: length mismatch");
    Vector v(k.stage_size());
    for (std::size_t i = 0; i < k.n; ++i) v[i] = x[i];
    for (const auto& st : k.stages) {
        v = butterfly_mvm_conj_transpose(st.b2, v, mul_adds);
        v = butterfly_mvm(st.b1, v, mul_adds);
    }
    Vector y(k.n);
    for (std::size_t i = 0; i < k.n; ++i) y[i] = v[i];
    return y;
}

inline DenseMatrix kmatrix_densify(const KMatrix& k) {
    DenseMatrix m(k.n, k.n);
    for (std::size_t j = 0; j < k.n; ++j) {
        Vector col = kmatrix_mvm(k, Vector::basis(k.n, j));
        for (std::size_t i = 0; i < k.n; ++i) m.at(i, j) = col[i];
    }
    return m;
}

// 2w butterflies, log2(ne) factors each, 2ne coefficients per factor.
inline std::size_t param_count(const KMatrix& k) {
    std::size_t ne = k.stage_size();
    return 4 * k.width() * ne * (ne == 1 ? 0 : log2_exact(ne));
}

inline ButterflyMatrix random_butterfly(std::size_t n, double sigma, Rng& rng) {
    ButterflyMatrix b(n);
    for (std::size_t k = n; k >= 2; k /= 2) {
        ButterflyFactorMatrix f(n, k);
        for (std::size_t i = 0; i < n / 2; ++i) {
            f.d1[i] = rng.next_scalar(sigma);
            f.d2[i] = rng.next_scalar(sigma);
            f.d3[i] = rng.next_scalar(sigma);
            f.d4[i] = rng.next_scalar(sigma);
        }
        b.factors.push_back(std::move(f));
    }
    return b;
}

// Seeded initialization with scale sigma = (ne)^(-1/2), which keeps densified
// entries O(1) after the log(ne) factor products.
inline KMatrix random_kmatrix(std::size_t n, std::size_t w, std::size_t e, std::uint64_t seed) {
    if (!is_power_of_two(n) || !is_power_of_two(e))
        throw InvalidArgument("random_kmatrix: n and e must be powers of two");
    if (w < 1) throw InvalidArgument("random_kmatrix: width must be at least 1");
    Rng rng(seed);
    double sigma = 1.0 / std::sqrt(static_cast<double>(n * e));
    std::vector<KMatrixStage> stages;
    for (std::size_t i = 0; i < w; ++i) {
        KMatrixStage st;
        st.b1 = random_butterfly(n * e, sigma, rng);
        st.b2 = random_butterfly(n * e, sigma, rng);
        stages.push_back(std::move(st));
    }
    return KMatrix(n, e, std::move(stages));
}

}  // namespace kaleido
