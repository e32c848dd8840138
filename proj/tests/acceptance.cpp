// Acceptance suite: one line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "kaleido/autodiff.hpp"
#include "kaleido/generators.hpp"
#include "kaleido/kfactor.hpp"
#include "kaleido/trainer.hpp"
#include "test_util.hpp"

using namespace kaleido;
using testutil::CircuitSpec;

namespace {

Scalar re(double x) { return Scalar{x, 0.0}; }

struct Runner {
    int failures = 0;

    void run(int id, const std::string& name, double time_budget_s,
             const std::function<std::string()>& body) {
        auto start = std::chrono::steady_clock::now();
        std::string detail;
        bool ok = true;
        try {
            detail = body();
        } catch (const std::exception& e) {
            ok = false;
            detail = std::string("exception: ") + e.what();
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                          .count();
        if (ok && time_budget_s > 0 && secs > time_budget_s) {
            ok = false;
            detail += " [over time budget]";
        }
        if (!ok) ++failures;
        std::printf("%s %2d %-24s %s (%.2fs, budget %.0fs)\n", ok ? "PASS" : "FAIL", id,
                    name.c_str(), detail.c_str(), secs, time_budget_s);
        std::fflush(stdout);
    }
};

struct Check {
    bool ok = true;
    std::string why;
    void require(bool cond, const std::string& msg) {
        if (!cond && ok) {
            ok = false;
            why = msg;
        }
    }
    std::string finish(const std::string& detail) {
        if (!ok) throw Error(why);
        return detail;
    }
};

std::string fmt(const char* pattern, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, v);
    return buf;
}

}  // namespace

int main() {
    Runner r;

    // 1. Fourier circuit correctness and exact size/depth accounting.
    r.run(1, "fft-correctness", 1.0, [] {
        Check c;
        double worst = 0.0;
        for (std::size_t n : {2u, 4u, 8u, 16u, 32u, 64u}) {
            Circuit fft = build_fft(n);
            double dist = frobenius_distance_rel(gen_fourier(n), densify(fft));
            worst = std::max(worst, dist);
            c.require(dist <= 1e-10, "fft densification off at n=" + std::to_string(n));
            auto [s, d] = metrics(fft);
            std::size_t logn = log2_exact(n);
            c.require(s == n + n * logn && d == logn,
                      "size/depth wrong at n=" + std::to_string(n));
        }
        return c.finish("max_rel=" + fmt("%.2e", worst) + " tol=1e-10, sizes exact");
    });

    // 2. Circuit -> product of d+1 sparse factors, structure and value.
    r.run(2, "sparse-product-compile", 30.0, [] {
        Check c;
        Rng rng(1002);
        double worst = 0.0;
        int tested = 0;
        for (int trial = 0; trial < 100; ++trial) {
            CircuitSpec spec;
            spec.n_inputs = 2 + rng.next_index(15);
            spec.layers = 1 + rng.next_index(12);
            spec.per_layer = 2 + rng.next_index(40);
            Circuit circ = testutil::random_circuit(spec, rng);
            auto [s, d] = metrics(circ);
            c.require(s <= 512 && d <= 12, "generator exceeded the size/depth caps");
            ++tested;
            SparseProduct p = compile_to_sparse_product(circ);
            c.require(p.factors.size() == d, "factor count != depth");
            c.require(s <= p.inner_dim && p.inner_dim < 2 * s, "padding outside [s, 2s)");
            for (const auto& f : p.factors)
                c.require(f.nnz() <= 2 * p.inner_dim, "factor too dense");
            double dist = frobenius_distance_rel(densify(circ), product_densify(p));
            worst = std::max(worst, dist);
            c.require(dist <= 1e-9, "product densification off");
        }
        c.require(tested == 100, "fewer than 100 circuits tested");
        return c.finish("100 circuits, max_rel=" + fmt("%.2e", worst) + " tol=1e-9");
    });

    // 3. Gradient circuit: finite-difference agreement and size audit.
    r.run(3, "baur-strassen", 30.0, [] {
        Check c;
        Rng rng(1003);
        double worst = 0.0;
        int tested = 0;
        for (int trial = 0; trial < 100; ++trial) {
            CircuitSpec spec;
            spec.n_inputs = 2 + rng.next_index(6);
            spec.layers = 1 + rng.next_index(7);
            spec.per_layer = 2 + rng.next_index(25);
            spec.mul_prob = 0.3;
            spec.n_outputs = 1;
            Circuit circ = testutil::random_circuit(spec, rng);
            c.require(metrics(circ).first <= 200, "generator exceeded the size cap");
            ++tested;
            Vector a = testutil::random_vector(spec.n_inputs, rng);
            GradientResult g = backprop(circ, a);
            auto [fwd, rev] = gradient_op_audit(circ);
            c.require(rev <= 6 * fwd + 4 * circ.outputs.size(), "op audit failed");
            const double h = 1e-5;
            for (std::size_t i = 0; i < spec.n_inputs; ++i) {
                Vector up = a, dn = a;
                up[i] += re(h);
                dn[i] -= re(h);
                Scalar fd = (evaluate(circ, up)[0] - evaluate(circ, dn)[0]) / re(2 * h);
                double err = std::abs(g.grad[i] - fd) / std::max(1.0, std::abs(fd));
                worst = std::max(worst, err);
                c.require(err <= 1e-6, "finite differences disagree");
            }
        }
        c.require(tested == 100, "fewer than 100 circuits tested");
        return c.finish("100 circuits, max_fd_err=" + fmt("%.2e", worst) + " tol=1e-6");
    });

    // 4. Transposed application via the scalarized gradient.
    r.run(4, "transposition", 30.0, [] {
        Check c;
        Rng rng(1004);
        double worst = 0.0;
        for (int trial = 0; trial < 50; ++trial) {
            CircuitSpec spec;
            spec.n_inputs = 2 + rng.next_index(7);
            spec.layers = 1 + rng.next_index(5);
            spec.per_layer = 2 + rng.next_index(10);
            spec.n_outputs = 1 + rng.next_index(spec.n_inputs);
            Circuit circ = testutil::random_circuit(spec, rng);
            std::size_t m = circ.outputs.size();
            Vector y = testutil::random_vector(m, rng);
            Vector got = transpose_apply(circ, y);
            Vector want = dense_mvm(transpose(densify(circ)), y);
            for (std::size_t i = 0; i < got.len(); ++i) {
                double err = std::abs(got[i] - want[i]) / std::max(1.0, std::abs(want[i]));
                worst = std::max(worst, err);
                c.require(err <= 1e-10, "transpose application off");
            }
            std::size_t ops = reverse_op_count(scalarize(circ, y));
            c.require(ops <= 6 * metrics(circ).first + 8 * spec.n_inputs,
                      "transpose op budget exceeded");
        }
        return c.finish("50 circuits, max_rel=" + fmt("%.2e", worst) +
                        " tol=1e-10, ops<=6s+8n");
    });

    // 5. Benes routing is exact on permutations.
    r.run(5, "benes-routing", 30.0, [] {
        Check c;
        std::size_t count = 0;
        std::vector<std::size_t> image{0, 1, 2, 3};
        do {
            Permutation p(4, image);
            c.require(frobenius_distance(kmatrix_densify(route_permutation(p)), densify(p)) ==
                          0.0,
                      "n=4 routing not exact");
            ++count;
        } while (std::next_permutation(image.begin(), image.end()));
        Rng rng(1005);
        for (std::size_t n : {8u, 16u, 32u, 64u}) {
            for (int trial = 0; trial < 100; ++trial) {
                Permutation p = testutil::random_permutation(n, rng);
                c.require(frobenius_distance(kmatrix_densify(route_permutation(p)),
                                             densify(p)) == 0.0,
                          "routing not exact at n=" + std::to_string(n));
                ++count;
            }
        }
        return c.finish(std::to_string(count) + " permutations, zero tolerance");
    });

    // 6. Step matrices realize as butterflies without conflicts.
    r.run(6, "step-matrices", 30.0, [] {
        Check c;
        Rng rng(1006);
        double worst = 0.0;
        for (std::size_t n : {4u, 8u, 16u, 32u, 64u}) {
            for (int trial = 0; trial < 200; ++trial) {
                StepMatrix h = testutil::random_step_matrix(n, rng);
                ButterflyMatrix b = step_to_butterfly(h);  // RoutingConflict would throw
                double dist = frobenius_distance_rel(densify(h), densify(b));
                worst = std::max(worst, dist);
                c.require(dist <= 1e-12, "step densification off at n=" + std::to_string(n));
            }
        }
        return c.finish("1000 matrices, max_rel=" + fmt("%.2e", worst) + " tol=1e-12");
    });

    // 7. Sparse matrices enter the hierarchy at the declared width/expansion.
    r.run(7, "sparse-to-kmatrix", 30.0, [] {
        Check c;
        Rng rng(1007);
        double worst = 0.0;
        for (std::size_t n : {4u, 8u, 16u}) {
            for (int trial = 0; trial < 20; ++trial) {
                SparseMatrix s = testutil::random_sparse(n, 1 + rng.next_index(n), rng);
                KMatrix k = nsparse_to_kmatrix(s);
                c.require(k.width() <= 5 && k.e == 1, "n-sparse shape wrong");
                double dist = frobenius_distance_rel(densify(s), kmatrix_densify(k));
                worst = std::max(worst, dist);
                c.require(dist <= 1e-9, "n-sparse densification off");
            }
        }
        for (int trial = 0; trial < 10; ++trial) {
            SparseMatrix s = testutil::random_sparse(8, 24, rng);
            KMatrix k = sparse_to_kmatrix(s);
            std::size_t chunks = (s.nnz() + 7) / 8;
            c.require(k.e == 4, "gadget expansion != 4");
            c.require(k.width() <= 8 * chunks, "gadget width over 8 per chunk");
            double dist = frobenius_distance_rel(densify(s), kmatrix_densify(k));
            worst = std::max(worst, dist);
            c.require(dist <= 1e-9, "gadget densification off");
        }
        return c.finish("width<=5 @e=1, gadget width<=8/chunk @e=4, max_rel=" +
                        fmt("%.2e", worst));
    });

    // 8. End-to-end pipeline on the order-8 transform circuit.
    r.run(8, "circuit-to-kmatrix", 5.0, [] {
        Check c;
        Circuit fft = build_fft(8);
        KMatrix k = circuit_to_kmatrix(fft);
        double dist = frobenius_distance_rel(gen_fourier(8), kmatrix_densify(k));
        c.require(dist <= 1e-8, "pipeline densification off");
        c.require(k.width() <= 12 * fft.depth(), "width over 12 per depth level");
        std::size_t ne = k.stage_size();
        c.require(param_count(k) == 4 * k.width() * ne * log2_exact(ne), "param count wrong");
        return c.finish("rel=" + fmt("%.2e", dist) + " tol=1e-8, width=" +
                        std::to_string(k.width()) + " e=" + std::to_string(k.e));
    });

    // 9. Displacement-rank fingerprints.
    r.run(9, "displacement-rank", 10.0, [] {
        Check c;
        Rng rng(1009);
        for (int trial = 0; trial < 20; ++trial) {
            std::size_t n = 2 + rng.next_index(15);
            Vector s(n), t(n);
            for (std::size_t i = 0; i < n; ++i) {
                s[i] = re(0.2 + static_cast<double>(i) + 0.5 * rng.next_unit());
                t[i] = re(-0.2 - static_cast<double>(i) - 0.5 * rng.next_unit());
            }
            DenseMatrix cau = gen_cauchy(s, t);
            DenseMatrix res = displacement_residual(cau, diag_matrix(s), diag_matrix(t));
            c.require(numeric_rank(res) == 1, "cauchy residual rank != 1");
        }
        std::size_t n = 9;
        Vector d(n);
        for (std::size_t i = 0; i < n; ++i) d[i] = re(1.0 + 0.7 * static_cast<double>(i));
        DenseMatrix z = densify(gen_shift(n));
        DenseMatrix res = displacement_residual(diag_matrix(d), z, z);
        DenseMatrix rescaled(n, n);
        for (std::size_t i = 0; i + 1 < n; ++i) rescaled.at(i, i + 1) = d[i + 1] - d[i];
        c.require(frobenius_distance(res, rescaled) < 1e-12, "shift residual structure off");
        c.require(numeric_rank(res) == n - 1, "shift residual rank != n-1");
        return c.finish("20 cauchy pairs rank 1; diag-vs-shift rank n-1");
    });

    // 10. Trainer: gradient oracle, regression target, determinism.
    r.run(10, "trainer", 10.0, [] {
        Check c;
        Rng rng(1010);
        double worst = 0.0;
        for (int draw = 0; draw < 50; ++draw) {
            std::size_t n = draw % 2 == 0 ? 4 : 8;
            KMatrix model = random_kmatrix(n, 1, 1, rng.next_u64());
            std::vector<TrainSample> data;
            for (int i = 0; i < 3; ++i) {
                Vector x = testutil::random_vector(n, rng);
                data.push_back({x, testutil::random_vector(n, rng)});
            }
            std::vector<double> theta = flatten_parameters(model);
            std::vector<double> grad = loss_gradient(model, data);
            const double h = 1e-5;
            for (std::size_t i = 0; i < theta.size(); i += 9) {
                std::vector<double> up = theta, dn = theta;
                up[i] += h;
                dn[i] -= h;
                double fd = (loss(unflatten_parameters(model, up), data) -
                             loss(unflatten_parameters(model, dn), data)) /
                            (2 * h);
                // relative above unit magnitude, absolute below: entries in
                // the finite-difference noise band cannot support a pure
                // relative comparison
                double err = std::abs(grad[i] - fd) / std::max(1.0, std::abs(fd));
                worst = std::max(worst, err);
                c.require(err <= 1e-6, "trainer gradient vs finite differences");
            }
        }

        DenseMatrix target(2, 2);
        target.at(0, 0) = re(2);
        target.at(1, 1) = re(3);
        TrainConfig cfg;
        cfg.eta = 0.05;
        cfg.eps = 0.0;
        cfg.max_iters = 500;
        cfg.seed = 42;
        TrainState fit_a = train(target, 2, 1, 1, cfg);
        double ratio = fit_a.loss_history.back() / fit_a.loss_history.front();
        c.require(ratio < 1e-4, "diag(2,3) regression ratio " + fmt("%.2e", ratio));
        TrainState fit_b = train(target, 2, 1, 1, cfg);
        c.require(fit_a.loss_history == fit_b.loss_history, "loss history not bitwise equal");
        return c.finish("fd_err=" + fmt("%.2e", worst) + ", regression ratio=" +
                        fmt("%.2e", ratio) + ", deterministic");
    });

    // 11. Multiply-add counter equals the closed form exactly.
    r.run(11, "mvm-op-count", 10.0, [] {
        Check c;
        Rng rng(1011);
        for (int trial = 0; trial < 20; ++trial) {
            std::size_t n = std::size_t{1} << (1 + rng.next_index(5));
            std::size_t w = 1 + rng.next_index(4);
            std::size_t e = std::size_t{1} << rng.next_index(3);
            KMatrix k = random_kmatrix(n, w, e, rng.next_u64());
            std::uint64_t ops = 0;
            kmatrix_mvm(k, testutil::random_vector(n, rng), &ops);
            std::size_t ne = n * e;
            c.require(ops == 4 * w * ne * log2_exact(ne),
                      "counter mismatch at n=" + std::to_string(n));
        }
        return c.finish("20 configurations, exact equality");
    });

    if (r.failures == 0) {
        std::printf("ALL %d CRITERIA PASSED\n", 11);
        return 0;
    }
    std::printf("%d CRITERIA FAILED\n", r.failures);
    return 1;
}
