#pragma once

#include <algorithm>
#include <vector>

#include "kaleido/circuit.hpp"

namespace kaleido {

// A linear circuit compiled to a chain of square sparse factors plus a
// truncating selector. Applying the factors (factors[0] first) to the
// zero-padded input reproduces every gate value; the selector rows pick out
// the outputs.
struct SparseProduct {
    std::size_t n_inputs = 0;
    std::size_t n_outputs = 0;
    std::size_t inner_dim = 0;                // padded power of two
    std::vector<SparseMatrix> factors;        // one per circuit layer
    std::vector<std::size_t> selector;        // output row indices, length n_outputs
};

// One factor per depth layer: identity rows carry the already-computed
// prefix, gate rows combine two earlier slots, remaining rows stay zero.
// Gates are laid out by longest-path layer so every source sits strictly
// below the current layer's identity prefix.
inline SparseProduct compile_to_sparse_product(const Circuit& c) {
    if (!is_linear(c)) throw NonLinearCircuit("compile: circuit has multiplication gates");
    validate(c);
    {
        std::vector<std::size_t> sorted = c.outputs;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw InvalidArgument("compile: duplicate output gates are not representable");
    }

    const std::size_t n = c.n_inputs;
    const std::size_t total = c.gates.size();
    std::vector<std::size_t> layer(total, 0);
    std::size_t d = 0;
    for (std::size_t i = n; i < total; ++i) {
        const Gate& g = c.gates[i];
        layer[i] = 1 + std::max(layer[g.src1], layer[g.src2]);
        d = std::max(d, layer[i]);
    }

    // Slot assignment: inputs first, then gates grouped by layer in id order.
    std::vector<std::size_t> slot(total);
    std::vector<std::size_t> layer_width(d + 1, 0);
    for (std::size_t i = 0; i < n; ++i) slot[i] = i;
    std::size_t next_slot = n;
    for (std::size_t k = 1; k <= d; ++k)
        for (std::size_t i = n; i < total; ++i)
            if (layer[i] == k) {
                slot[i] = next_slot++;
                ++layer_width[k];
            }

    const std::size_t s = total;
    const std::size_t s_prime = next_power_of_two(s);

    SparseProduct p;
    p.n_inputs = n;
    p.n_outputs = c.outputs.size();
    p.inner_dim = s_prime;

    std::size_t z = n;  // slots filled before the current layer
    for (std::size_t k = 1; k <= d; ++k) {
        SparseMatrix w(s_prime, s_prime);
        for (std::size_t i = 0; i < z; ++i) w.add(i, i, Scalar{1.0, 0.0});
        for (std::size_t i = n; i < total; ++i) {
            if (layer[i] != k) continue;
            const Gate& g = c.gates[i];
            if (g.src1 == g.src2) {
                Scalar sum = g.alpha + g.beta;
                if (sum != Scalar{}) w.add(slot[i], slot[g.src1], sum);
            } else {
                if (g.alpha != Scalar{}) w.add(slot[i], slot[g.src1], g.alpha);
                if (g.beta != Scalar{}) w.add(slot[i], slot[g.src2], g.beta);
            }
        }
        w.normalize();
        p.factors.push_back(std::move(w));
        z += layer_width[k];
    }

    for (std::size_t id : c.outputs) p.selector.push_back(slot[id]);
    return p;
}

inline Vector product_mvm(const SparseProduct& p, const Vector& x) {
    if (x.len() != p.n_inputs) throw DimensionMismatch("product_mvm: input length mismatch");
    Vector v(p.inner_dim);
    for (std::size_t i = 0; i < x.len(); ++i) v[i] = x[i];
    for (const SparseMatrix& w : p.factors) v = sparse_mvm(w, v);
    Vector y(p.selector.size());
    for (std::size_t i = 0; i < p.selector.size(); ++i) y[i] = v[p.selector[i]];
    return y;
}

inline DenseMatrix product_densify(const SparseProduct& p) {
    DenseMatrix m(p.n_outputs, p.n_inputs);
    for (std::size_t j = 0; j < p.n_inputs; ++j) {
        Vector col = product_mvm(p, Vector::basis(p.n_inputs, j));
        for (std::size_t i = 0; i < col.len(); ++i) m.at(i, j) = col[i];
    }
    return m;
}

}  // namespace kaleido
