#pragma once

#include <vector>

#include "kaleido/circuit.hpp"

namespace kaleido {

struct GradientResult {
    Vector grad;               // d f / d x[i], one complex entry per input slot
    std::size_t op_count = 0;  // multiply-accumulate operations of the reverse sweep
};

// Unit costs for the size audit. Forward: 3 per linear gate (two multiplies,
// one add), 1 per multiplication gate. Reverse: 4 per non-input gate (two
// multiply-accumulate contributions).
inline std::size_t forward_op_count(const Circuit& c) {
    std::size_t ops = 0;
    for (std::size_t i = c.n_inputs; i < c.gates.size(); ++i)
        ops += c.gates[i].kind == Gate::Kind::LinComb ? 3 : 1;
    return ops;
}

inline std::size_t reverse_op_count(const Circuit& c) { return 4 * c.size(); }

// Reverse sweep over the gate list: seed the single output with adjoint 1,
// then walk ids downward pushing each gate's adjoint into its two sources.
// For a linear gate the local derivative is the coefficient, for a
// multiplication gate it is the other operand's forward value.
inline GradientResult backprop(const Circuit& c, const Vector& a) {
    if (c.outputs.size() != 1) throw MultiOutput("backprop: circuit must have a single output");
    std::vector<Scalar> val = evaluate_all(c, a);

    std::vector<Scalar> d(c.gates.size(), Scalar{});
    d[c.outputs[0]] = Scalar{1.0, 0.0};
    std::size_t ops = 0;
    for (std::size_t i = c.gates.size(); i-- > c.n_inputs;) {
        const Gate& g = c.gates[i];
        if (g.kind == Gate::Kind::LinComb) {
            d[g.src1] += g.alpha * d[i];
            d[g.src2] += g.beta * d[i];
        } else {
            d[g.src1] += val[g.src2] * d[i];
            d[g.src2] += val[g.src1] * d[i];
        }
        ops += 4;
    }

    GradientResult res;
    res.grad = Vector(c.n_inputs);
    for (std::size_t i = 0; i < c.n_inputs; ++i) res.grad[i] = d[i];
    res.op_count = ops;
    return res;
}

// (forward ops, reverse ops) under the unit costs above; the suite asserts
// reverse <= 6*forward + 4*outputs.
inline std::pair<std::size_t, std::size_t> gradient_op_audit(const Circuit& c) {
    if (c.outputs.size() != 1)
        throw MultiOutput("gradient_op_audit: circuit must have a single output");
    return {forward_op_count(c), reverse_op_count(c)};
}

// Appends an inner-product chain computing <z, outputs>; the result is a
// single-output circuit, adding at most 2m gates.
inline Circuit scalarize(const Circuit& c, const Vector& z) {
    if (!is_linear(c)) throw NonLinearCircuit("scalarize: circuit has multiplication gates");
    if (z.len() != c.outputs.size())
        throw DimensionMismatch("scalarize: weight length must equal output count");
    Circuit out = c;
    std::size_t acc;
    if (z.len() == 1) {
        acc = out.add_lin(z[0], c.outputs[0], Scalar{}, c.outputs[0]);
    } else {
        acc = out.add_lin(z[0], c.outputs[0], z[1], c.outputs[1]);
        for (std::size_t k = 2; k < z.len(); ++k)
            acc = out.add_lin(Scalar{1.0, 0.0}, acc, z[k], c.outputs[k]);
    }
    out.outputs = {acc};
    return out;
}

// Computes W^T * y for the linear map W of the circuit, as the gradient of
// x -> <y, Wx>. The map is linear so the gradient is constant; it is taken at
// the zero vector.
inline Vector transpose_apply(const Circuit& c, const Vector& y) {
    Circuit sc = scalarize(c, y);
    GradientResult g = backprop(sc, Vector(c.n_inputs));
    return g.grad;
}

}  // namespace kaleido
