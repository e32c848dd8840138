#pragma once

#include <numbers>
#include <vector>

#include "kaleido/matrix.hpp"

namespace kaleido {

// Two-input gates only; subtraction is a linear combination with a negative
// coefficient, constants live in the coefficients.
struct Gate {
    enum class Kind { Input, LinComb, Mul };

    Kind kind = Kind::Input;
    std::size_t slot = 0;  // Input
    Scalar alpha{};        // LinComb: alpha*src1 + beta*src2
    Scalar beta{};
    std::size_t src1 = 0;
    std::size_t src2 = 0;

    static Gate input(std::size_t slot) {
        Gate g;
        g.kind = Kind::Input;
        g.slot = slot;
        return g;
    }
    static Gate lin(Scalar alpha, std::size_t src1, Scalar beta, std::size_t src2) {
        Gate g;
        g.kind = Kind::LinComb;
        g.alpha = alpha;
        g.beta = beta;
        g.src1 = src1;
        g.src2 = src2;
        return g;
    }
    static Gate mul(std::size_t src1, std::size_t src2) {
        Gate g;
        g.kind = Kind::Mul;
        g.src1 = src1;
        g.src2 = src2;
        return g;
    }
};

// DAG of gates in topological index order; the first n_inputs gates are the
// inputs in slot order.
struct Circuit {
    std::size_t n_inputs = 0;
    std::vector<Gate> gates;
    std::vector<std::size_t> outputs;

    static Circuit with_inputs(std::size_t n) {
        Circuit c;
        c.n_inputs = n;
        for (std::size_t i = 0; i < n; ++i) c.gates.push_back(Gate::input(i));
        return c;
    }

    std::size_t add_lin(Scalar alpha, std::size_t src1, Scalar beta, std::size_t src2) {
        gates.push_back(Gate::lin(alpha, src1, beta, src2));
        return gates.size() - 1;
    }
    std::size_t add_mul(std::size_t src1, std::size_t src2) {
        gates.push_back(Gate::mul(src1, src2));
        return gates.size() - 1;
    }

    // Non-input gate count.
    std::size_t size() const { return gates.size() - n_inputs; }

    // Longest chain of non-input gates in the DAG.
    std::size_t depth() const {
        std::vector<std::size_t> d(gates.size(), 0);
        std::size_t best = 0;
        for (std::size_t i = n_inputs; i < gates.size(); ++i) {
            const Gate& g = gates[i];
            d[i] = 1 + std::max(d[g.src1], d[g.src2]);
            best = std::max(best, d[i]);
        }
        return best;
    }
};

inline void validate(const Circuit& c) {
    if (c.gates.size() < c.n_inputs) throw BadInputPrefix("circuit: missing input gates");
    for (std::size_t i = 0; i < c.n_inputs; ++i) {
        const Gate& g = c.gates[i];
        if (g.kind != Gate::Kind::Input || g.slot != i)
            throw BadInputPrefix("circuit: first gates must be inputs in slot order");
    }
    for (std::size_t i = c.n_inputs; i < c.gates.size(); ++i) {
        const Gate& g = c.gates[i];
        if (g.kind == Gate::Kind::Input)
            throw BadInputPrefix("circuit: input gate after the input prefix");
        if (g.src1 >= i || g.src2 >= i)
            throw ForwardReference("circuit: gate references a later or same id");
    }
    if (c.outputs.empty()) throw EmptyOutputs("circuit: no output gates");
    for (std::size_t id : c.outputs)
        if (id >= c.gates.size()) throw ForwardReference("circuit: output id out of range");
}

inline bool is_linear(const Circuit& c) {
    for (const Gate& g : c.gates)
        if (g.kind == Gate::Kind::Mul) return false;
    return true;
}

// Forward pass; returns values of every gate.
inline std::vector<Scalar> evaluate_all(const Circuit& c, const Vector& x) {
    if (x.len() != c.n_inputs) throw DimensionMismatch("evaluate: input length mismatch");
    std::vector<Scalar> val(c.gates.size());
    for (std::size_t i = 0; i < c.gates.size(); ++i) {
        const Gate& g = c.gates[i];
        switch (g.kind) {
            case Gate::Kind::Input: val[i] = x[g.slot]; break;
            case Gate::Kind::LinComb: val[i] = g.alpha * val[g.src1] + g.beta * val[g.src2]; break;
            case Gate::Kind::Mul: val[i] = val[g.src1] * val[g.src2]; break;
        }
        ensure_finite(val[i], "circuit evaluation");
    }
    return val;
}

inline Vector evaluate(const Circuit& c, const Vector& x) {
    std::vector<Scalar> val = evaluate_all(c, x);
    Vector y(c.outputs.size());
    for (std::size_t i = 0; i < c.outputs.size(); ++i) y[i] = val[c.outputs[i]];
    return y;
}

// Expands a linear circuit to its m x n matrix by evaluating basis vectors.
inline DenseMatrix densify(const Circuit& c) {
    if (!is_linear(c)) throw NonLinearCircuit("densify: circuit has multiplication gates");
    DenseMatrix w(c.outputs.size(), c.n_inputs);
    for (std::size_t j = 0; j < c.n_inputs; ++j) {
        Vector col = evaluate(c, Vector::basis(c.n_inputs, j));
        for (std::size_t i = 0; i < col.len(); ++i) w.at(i, j) = col[i];
    }
    return w;
}

// (size including inputs, depth).
inline std::pair<std::size_t, std::size_t> metrics(const Circuit& c) {
    return {c.gates.size(), c.depth()};
}

// Radix-2 decimation-in-time FFT circuit: n*log2(n) gates in log2(n) layers.
// The bit-reversal reordering is wired into which input gates the first layer
// reads, so the layered structure matches the butterfly factorization.
inline Circuit build_fft(std::size_t n) {
    if (!is_power_of_two(n)) throw InvalidArgument("build_fft: n must be a power of two");
    Circuit c = Circuit::with_inputs(n);
    std::size_t levels = log2_exact(n);
    std::vector<std::size_t> cur(n);
    for (std::size_t j = 0; j < n; ++j) cur[j] = bit_reverse(j, levels);
    for (std::size_t level = 1; level <= levels; ++level) {
        std::size_t m = std::size_t{1} << level;
        std::size_t half = m / 2;
        std::vector<std::size_t> next(n);
        for (std::size_t base = 0; base < n; base += m) {
            for (std::size_t k = 0; k < half; ++k) {
                double angle =
                    -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(m);
                Scalar tw = std::polar(1.0, angle);
                std::size_t even = cur[base + k];
                std::size_t odd = cur[base + half + k];
                next[base + k] = c.add_lin(Scalar{1.0, 0.0}, even, tw, odd);
                next[base + half + k] = c.add_lin(Scalar{1.0, 0.0}, even, -tw, odd);
            }
        }
        cur = std::move(next);
    }
    c.outputs = cur;
    return c;
}

// Naive row-sum circuit for a dense matrix; densify inverts it exactly.
inline Circuit build_from_dense(const DenseMatrix& w) {
    if (w.cols == 0 || w.rows == 0)
        throw InvalidArgument("build_from_dense: matrix must be non-empty");
    Circuit c = Circuit::with_inputs(w.cols);
    for (std::size_t i = 0; i < w.rows; ++i) {
        std::size_t acc;
        if (w.cols == 1) {
            acc = c.add_lin(w.at(i, 0), 0, Scalar{}, 0);
        } else {
            acc = c.add_lin(w.at(i, 0), 0, w.at(i, 1), 1);
            for (std::size_t j = 2; j < w.cols; ++j)
                acc = c.add_lin(Scalar{1.0, 0.0}, acc, w.at(i, j), j);
        }
        c.outputs.push_back(acc);
    }
    return c;
}

}  // namespace kaleido
