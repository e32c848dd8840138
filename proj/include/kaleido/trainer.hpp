#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kaleido/butterfly.hpp"

namespace kaleido {

enum class Nonlinearity { Identity, Relu };

struct TrainConfig {
    double eta = 0.01;
    double eps = 0.0;
    std::size_t max_iters = 100;
    std::uint64_t seed = 0;
    Nonlinearity g = Nonlinearity::Identity;

    void check() const {
        if (!(eta > 0.0) || !is_finite(eta)) throw InvalidArgument("train: eta must be positive");
        if (!(eps >= 0.0)) throw InvalidArgument("train: eps must be non-negative");
        if (max_iters < 1) throw InvalidArgument("train: max_iters must be at least 1");
    }
};

struct TrainSample {
    Vector x;
    Vector y;
};

struct TrainState {
    KMatrix model;
    std::size_t iter = 0;
    std::vector<double> loss_history;  // length iter + 1
};

namespace detail {

inline bool is_real(const Vector& v) {
    for (const auto& z : v.entries)
        if (z.imag() != 0.0) return false;
    return true;
}

inline void check_data(const KMatrix& k, const std::vector<TrainSample>& data, Nonlinearity g) {
    for (const auto& s : data) {
        if (s.x.len() != k.n || s.y.len() != k.n)
            throw DimensionMismatch("train: sample dimensions must match the model");
        if (g == Nonlinearity::Relu && (!is_real(s.x) || !is_real(s.y)))
            throw InvalidArgument("train: relu requires real-valued data");
    }
}

inline Scalar apply_g(Scalar z, Nonlinearity g) {
    if (g == Nonlinearity::Identity) return z;
    return Scalar{std::max(0.0, z.real()), 0.0};
}

// Subgradient at 0 is 0.
inline double apply_g_prime(Scalar z, Nonlinearity g) {
    if (g == Nonlinearity::Identity) return 1.0;
    return z.real() > 0.0 ? 1.0 : 0.0;
}

}  // namespace detail

// Unnormalized squared-residual error over the sample list.
inline double loss(const KMatrix& k, const std::vector<TrainSample>& data,
                   Nonlinearity g = Nonlinearity::Identity) {
    detail::check_data(k, data, g);
    double total = 0.0;
    for (const auto& s : data) {
        Vector u = kmatrix_mvm(k, s.x);
        for (std::size_t i = 0; i < u.len(); ++i)
            total += std::norm(s.y[i] - detail::apply_g(u[i], g));
    }
    if (!is_finite(total)) throw NonFinite("loss: non-finite value");
    return total;
}

// Flat parameter order: stage, then b1 before b2, then factors in stored
// order, then d1..d4 block-major, each coefficient as (re, im).
inline std::vector<double> flatten_parameters(const KMatrix& k) {
    std::vector<double> theta;
    theta.reserve(2 * param_count(k));
    auto push_butterfly = [&](const ButterflyMatrix& b) {
        for (const auto& f : b.factors)
            for (const auto* d : {&f.d1, &f.d2, &f.d3, &f.d4})
                for (const Scalar& z : *d) {
                    theta.push_back(z.real());
                    theta.push_back(z.imag());
                }
    };
    for (const auto& st : k.stages) {
        push_butterfly(st.b1);
        push_butterfly(st.b2);
    }
    return theta;
}

inline KMatrix unflatten_parameters(const KMatrix& shape, const std::vector<double>& theta) {
    KMatrix k = shape;
    std::size_t pos = 0;
    auto fill_butterfly = [&](ButterflyMatrix& b) {
        for (auto& f : b.factors)
            for (auto* d : {&f.d1, &f.d2, &f.d3, &f.d4})
                for (Scalar& z : *d) {
                    z = Scalar{theta[pos], theta[pos + 1]};
                    pos += 2;
                }
    };
    for (auto& st : k.stages) {
        fill_butterfly(st.b1);
        fill_butterfly(st.b2);
    }
    if (pos != theta.size()) throw InvalidArgument("unflatten: parameter count mismatch");
    return k;
}

namespace detail {

// Effective 2x2 coefficients of a factor as applied (b2 factors act through
// their conjugate transpose, which swaps the off-diagonal roles).
struct AppliedFactor {
    const ButterflyFactorMatrix* f = nullptr;
    bool conjugated = false;

    Scalar a(std::size_t i) const { return conjugated ? std::conj(f->d1[i]) : f->d1[i]; }
    Scalar b(std::size_t i) const { return conjugated ? std::conj(f->d3[i]) : f->d2[i]; }
    Scalar c(std::size_t i) const { return conjugated ? std::conj(f->d2[i]) : f->d3[i]; }
    Scalar d(std::size_t i) const { return conjugated ? std::conj(f->d4[i]) : f->d4[i]; }
};

// Factor applications of the full stage chain in execution order, paired
// with the flat index of each factor's parameter block.
inline std::vector<std::pair<AppliedFactor, std::size_t>> applied_sequence(const KMatrix& k) {
    std::vector<std::pair<AppliedFactor, std::size_t>> seq;
    const std::size_t coeffs = k.stage_size() / 2;  // per diagonal array
    const std::size_t per_factor = 4 * 2 * coeffs;  // doubles per factor
    const std::size_t factors = k.stages.empty() ? 0 : k.stages[0].b1.factors.size();
    for (std::size_t s = 0; s < k.stages.size(); ++s) {
        const KMatrixStage& st = k.stages[s];
        const std::size_t stage_base = s * 2 * factors * per_factor;
        // b2^* runs first, in stored factor order.
        for (std::size_t i = 0; i < st.b2.factors.size(); ++i)
            seq.push_back({AppliedFactor{&st.b2.factors[i], true},
                           stage_base + (factors + i) * per_factor});
        // then b1, smallest block first (reverse stored order).
        for (std::size_t i = st.b1.factors.size(); i-- > 0;)
            seq.push_back({AppliedFactor{&st.b1.factors[i], false}, stage_base + i * per_factor});
    }
    return seq;
}

inline Vector apply_factor(const AppliedFactor& af, const Vector& x) {
    const ButterflyFactorMatrix& f = *af.f;
    Vector y(f.n);
    const std::size_t half = f.k / 2;
    for (std::size_t blk = 0; blk < f.n / f.k; ++blk) {
        const std::size_t base = blk * f.k;
        for (std::size_t j = 0; j < half; ++j) {
            const std::size_t idx = blk * half + j;
            y[base + j] = af.a(idx) * x[base + j] + af.b(idx) * x[base + half + j];
            y[base + half + j] = af.c(idx) * x[base + j] + af.d(idx) * x[base + half + j];
        }
    }
    return y;
}

}  // namespace detail

// Gradient of the loss over the flat (re, im) parameter vector: one forward
// pass per sample caching every intermediate vector, then a reverse sweep
// that pushes the residual adjoint through the transposed factors and
// collects, per coefficient, adjoint(output slot) * cached input(source
// slot). Samples accumulate sequentially in index order.
inline std::vector<double> loss_gradient(const KMatrix& k, const std::vector<TrainSample>& data,
                                         Nonlinearity g = Nonlinearity::Identity) {
    detail::check_data(k, data, g);
    const std::size_t size = k.stage_size();
    auto seq = detail::applied_sequence(k);
    std::vector<double> grad(2 * param_count(k), 0.0);

    for (const auto& sample : data) {
        // Forward, caching the input of every factor application.
        std::vector<Vector> cache;
        cache.reserve(seq.size() + 1);
        Vector v(size);
        for (std::size_t i = 0; i < k.n; ++i) v[i] = sample.x[i];
        for (const auto& [af, base] : seq) {
            cache.push_back(v);
            v = detail::apply_factor(af, v);
        }

        // Residual adjoint: lambda_i = -conj(y_i - g(u_i)) * g'(u_i).
        Vector lambda(size);
        for (std::size_t i = 0; i < k.n; ++i) {
            Scalar u = v[i];
            Scalar rho = sample.y[i] - detail::apply_g(u, g);
            lambda[i] = -std::conj(rho) * detail::apply_g_prime(u, g);
        }

        // Reverse sweep.
        for (std::size_t step = seq.size(); step-- > 0;) {
            const auto& [af, base] = seq[step];
            const ButterflyFactorMatrix& f = *af.f;
            const Vector& in = cache[step];
            const std::size_t half = f.k / 2;
            const std::size_t coeffs = size / 2;
            Vector prev(size);
            for (std::size_t blk = 0; blk < f.n / f.k; ++blk) {
                const std::size_t off = blk * f.k;
                for (std::size_t j = 0; j < half; ++j) {
                    const std::size_t idx = blk * half + j;
                    const Scalar lt = lambda[off + j];
                    const Scalar lb = lambda[off + half + j];
                    const Scalar it = in[off + j];
                    const Scalar ib = in[off + half + j];

                    // Adjoints of the applied coefficients.
                    Scalar adj_a = lt * it, adj_b = lt * ib, adj_c = lb * it, adj_d = lb * ib;
                    // Map back to the stored diagonals: conjugated
                    // application conjugates the adjoint and swaps the
                    // off-diagonal roles again.
                    Scalar g1, g2, g3, g4;
                    if (af.conjugated) {
                        g1 = std::conj(adj_a);
                        g3 = std::conj(adj_b);
                        g2 = std::conj(adj_c);
                        g4 = std::conj(adj_d);
                    } else {
                        g1 = adj_a;
                        g2 = adj_b;
                        g3 = adj_c;
                        g4 = adj_d;
                    }
                    auto emit = [&](std::size_t which, Scalar adj) {
                        const std::size_t at = base + which * 2 * coeffs + 2 * idx;
                        grad[at] += 2.0 * adj.real();
                        grad[at + 1] += -2.0 * adj.imag();
                    };
                    emit(0, g1);
                    emit(1, g2);
                    emit(2, g3);
                    emit(3, g4);

                    // lambda through the transposed applied factor.
                    prev[off + j] = af.a(idx) * lt + af.c(idx) * lb;
                    prev[off + half + j] = af.b(idx) * lt + af.d(idx) * lb;
                }
            }
            lambda = std::move(prev);
        }
    }
    return grad;
}

// One plain gradient-descent step; records the post-update loss. Any
// non-finite value during the update or the follow-up loss evaluation is a
// divergence.
inline TrainState gd_step(const TrainState& state, const std::vector<TrainSample>& data,
                          const TrainConfig& config) {
    config.check();
    try {
        std::vector<double> theta = flatten_parameters(state.model);
        std::vector<double> grad = loss_gradient(state.model, data, config.g);
        for (std::size_t i = 0; i < theta.size(); ++i) {
            theta[i] -= config.eta * grad[i];
            if (!is_finite(theta[i])) throw NonFinite("parameter overflow");
        }
        TrainState next;
        next.model = unflatten_parameters(state.model, theta);
        next.iter = state.iter + 1;
        next.loss_history = state.loss_history;
        next.loss_history.push_back(loss(next.model, data, config.g));
        return next;
    } catch (const NonFinite&) {
        throw DivergedError("training diverged at iteration " + std::to_string(state.iter));
    }
}

inline TrainState train(const std::vector<TrainSample>& data, std::size_t n, std::size_t w,
                        std::size_t e, const TrainConfig& config) {
    config.check();
    TrainState state;
    state.model = random_kmatrix(n, w, e, config.seed);
    state.loss_history.push_back(loss(state.model, data, config.g));
    while (state.loss_history.back() >= config.eps && state.iter < config.max_iters)
        state = gd_step(state, data, config);
    return state;
}

// Basis probe set: fitting these to zero loss is exact densified equality.
inline std::vector<TrainSample> matrix_probe_data(const DenseMatrix& w) {
    if (w.rows != w.cols) throw NonSquare("matrix_probe_data: matrix must be square");
    std::vector<TrainSample> data;
    for (std::size_t j = 0; j < w.cols; ++j) {
        Vector x = Vector::basis(w.cols, j);
        data.push_back({x, dense_mvm(w, x)});
    }
    return data;
}

inline TrainState train(const DenseMatrix& target, std::size_t n, std::size_t w, std::size_t e,
                        const TrainConfig& config) {
    if (target.rows != n || target.cols != n)
        throw DimensionMismatch("train: target must be n x n");
    return train(matrix_probe_data(target), n, w, e, config);
}

}  // namespace kaleido
