#pragma once

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "kaleido/autodiff.hpp"
#include "kaleido/generators.hpp"
#include "kaleido/io.hpp"

namespace kaleido::cli {

// Exit codes: 0 success, 2 usage, 3 parse/format/domain, 4 verification
// failure, 5 divergence.
enum ExitCode : int {
    kOk = 0,
    kUsage = 2,
    kParse = 3,
    kVerifyFail = 4,
    kDiverged = 5,
};

namespace detail {

inline void write_output(const std::string& path, const std::string& content,
                         std::ostream& fallback) {
    if (path.empty()) {
        fallback << content;
        return;
    }
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path + "'");
    out << content;
}

inline Vector parse_list(const std::string& csv) {
    Vector v;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) throw ParseError("empty entry in list '" + csv + "'");
        v.entries.push_back(parse_scalar(tok));
    }
    if (v.entries.empty()) throw ParseError("empty list");
    return v;
}

// Densifies any representation that denotes a linear map.
inline DenseMatrix densify_any(const AnyObject& obj) {
    if (const auto* m = std::get_if<DenseMatrix>(&obj)) return *m;
    if (const auto* s = std::get_if<SparseMatrix>(&obj)) return densify(*s);
    if (const auto* c = std::get_if<Circuit>(&obj)) return densify(*c);
    if (const auto* p = std::get_if<SparseProduct>(&obj)) return product_densify(*p);
    if (const auto* k = std::get_if<KMatrix>(&obj)) return kmatrix_densify(*k);
    if (const auto* p = std::get_if<Permutation>(&obj)) return densify(*p);
    throw ParseError("file does not denote a linear map");
}

struct MvmResult {
    Vector y;
    std::uint64_t mul_adds = 0;
};

inline MvmResult mvm_any(const AnyObject& obj, const Vector& x) {
    MvmResult r;
    if (const auto* m = std::get_if<DenseMatrix>(&obj)) {
        r.y = dense_mvm(*m, x);
        r.mul_adds = m->rows * m->cols;
    } else if (const auto* s = std::get_if<SparseMatrix>(&obj)) {
        r.y = sparse_mvm(*s, x);
        r.mul_adds = s->nnz();
    } else if (const auto* c = std::get_if<Circuit>(&obj)) {
        r.y = evaluate(*c, x);
        r.mul_adds = forward_op_count(*c);
    } else if (const auto* p = std::get_if<SparseProduct>(&obj)) {
        r.y = product_mvm(*p, x);
        for (const auto& f : p->factors) r.mul_adds += f.nnz();
    } else if (const auto* k = std::get_if<KMatrix>(&obj)) {
        r.y = kmatrix_mvm(*k, x, &r.mul_adds);
    } else if (const auto* p = std::get_if<Permutation>(&obj)) {
        r.y = dense_mvm(densify(*p), x);
        r.mul_adds = p->n;
    } else {
        throw ParseError("file does not denote a linear map");
    }
    return r;
}

}  // namespace detail

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
    CLI::App app{"structured-matrix toolkit: circuits, sparse products, butterfly hierarchies"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "generate a reference matrix");
    std::string gen_kind, gen_points, gen_s, gen_t, gen_out;
    std::size_t gen_n = 0, gen_cols = 0;
    gen->add_option("kind", gen_kind, "fourier|vandermonde|cauchy|shift|identity")->required();
    gen->add_option("--n", gen_n, "matrix size");
    gen->add_option("--cols", gen_cols, "column count (vandermonde)");
    gen->add_option("--points", gen_points, "comma-separated points (vandermonde)");
    gen->add_option("--s", gen_s, "comma-separated s entries (cauchy)");
    gen->add_option("--t", gen_t, "comma-separated t entries (cauchy)");
    gen->add_option("-o,--out", gen_out, "output file (default stdout)");

    // compile
    auto* compile = app.add_subcommand("compile", "compile a linear circuit");
    std::string compile_in, compile_target = "sparseproduct", compile_out;
    compile->add_option("circuit", compile_in, "circuit file")->required();
    compile->add_option("--target", compile_target, "sparseproduct|kmatrix");
    compile->add_option("-o,--out", compile_out, "output file (default stdout)");

    // check
    auto* check = app.add_subcommand("check", "compare two representations by densification");
    std::string check_a, check_b;
    double check_tol = 1e-8;
    check->add_option("original", check_a, "reference file")->required();
    check->add_option("factorization", check_b, "candidate file")->required();
    check->add_option("--tol", check_tol, "relative Frobenius tolerance");

    // route
    auto* route = app.add_subcommand("route", "route a permutation through a Benes stage");
    std::string route_in, route_out;
    route->add_option("perm", route_in, "permutation file")->required();
    route->add_option("-o,--out", route_out, "output file (default stdout)");

    // train
    auto* train_cmd = app.add_subcommand("train", "fit a K-matrix by gradient descent");
    std::string train_in, train_out, train_csv;
    std::size_t train_n = 0, train_w = 1, train_e = 1, train_iters = 100;
    double train_eta = 0.01, train_eps = 0.0;
    std::uint64_t train_seed = 0;
    bool train_relu = false;
    train_cmd->add_option("target", train_in, "dense matrix or pairs file")->required();
    train_cmd->add_option("--n", train_n, "logical size")->required();
    train_cmd->add_option("--w", train_w, "width");
    train_cmd->add_option("--e", train_e, "expansion");
    train_cmd->add_option("--eta", train_eta, "learning rate");
    train_cmd->add_option("--eps", train_eps, "loss threshold");
    train_cmd->add_option("--iters", train_iters, "iteration cap");
    train_cmd->add_option("--seed", train_seed, "rng seed");
    train_cmd->add_flag("--relu", train_relu, "train with the relu nonlinearity");
    train_cmd->add_option("-o,--out", train_out, "model output file (default stdout)");
    train_cmd->add_option("--loss-csv", train_csv, "loss history CSV file");

    // mvm
    auto* mvm = app.add_subcommand("mvm", "apply an operator file to a vector file");
    std::string mvm_op, mvm_vec, mvm_out, mvm_format;
    bool mvm_count = false;
    mvm->add_option("operator", mvm_op, "operator file (any format)")->required();
    mvm->add_option("vector", mvm_vec, "vector file (dense, one column)")->required();
    mvm->add_flag("--count-ops", mvm_count, "print the multiply-add count");
    mvm->add_option("--format", mvm_format, "override header sniffing");
    mvm->add_option("-o,--out", mvm_out, "output file (default stdout)");

    // grad
    auto* grad = app.add_subcommand("grad", "gradient of a single-output circuit");
    std::string grad_circuit, grad_point, grad_out;
    grad->add_option("circuit", grad_circuit, "circuit file")->required();
    grad->add_option("point", grad_point, "evaluation point (dense vector file)")->required();
    grad->add_option("-o,--out", grad_out, "output file (default stdout)");

    // transpose
    auto* transpose_cmd = app.add_subcommand("transpose", "apply the transposed map of a circuit");
    std::string tr_circuit, tr_vec, tr_out;
    transpose_cmd->add_option("circuit", tr_circuit, "linear circuit file")->required();
    transpose_cmd->add_option("vector", tr_vec, "dense vector file")->required();
    transpose_cmd->add_option("-o,--out", tr_out, "output file (default stdout)");

    std::vector<const char*> argv;
    argv.push_back("kaleido");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsage;
    }

    try {
        if (*gen) {
            std::ostringstream body;
            if (gen_kind == "fourier") {
                write_dense(body, gen_fourier(gen_n));
            } else if (gen_kind == "vandermonde") {
                Vector pts = detail::parse_list(gen_points);
                write_dense(body, gen_vandermonde(pts, gen_cols ? gen_cols : pts.len()));
            } else if (gen_kind == "cauchy") {
                write_dense(body, gen_cauchy(detail::parse_list(gen_s), detail::parse_list(gen_t)));
            } else if (gen_kind == "shift") {
                write_sparse(body, gen_shift(gen_n));
            } else if (gen_kind == "identity") {
                SparseMatrix id(gen_n, gen_n);
                for (std::size_t i = 0; i < gen_n; ++i) id.add(i, i, Scalar{1.0, 0.0});
                id.normalize();
                write_sparse(body, id);
            } else {
                err << "usage error: unknown generator '" << gen_kind << "'\n";
                return kUsage;
            }
            detail::write_output(gen_out, body.str(), out);
            return kOk;
        }

        if (*compile) {
            auto obj = read_any_file(compile_in);
            const auto* c = std::get_if<Circuit>(&obj);
            if (!c) throw ParseError("compile expects a circuit file");
            SparseProduct p = compile_to_sparse_product(*c);
            auto [s, d] = metrics(*c);
            std::ostringstream body;
            if (compile_target == "sparseproduct") {
                write_sparse_product(body, p);
                out << "s=" << s << " d=" << d << " s'=" << p.inner_dim << "\n";
            } else if (compile_target == "kmatrix") {
                KMatrix k = circuit_to_kmatrix(*c);
                write_kmatrix(body, k);
                out << "s=" << s << " d=" << d << " s'=" << p.inner_dim << " width=" << k.width()
                    << " expansion=" << k.e << " params=" << param_count(k) << "\n";
            } else {
                err << "usage error: unknown compile target '" << compile_target << "'\n";
                return kUsage;
            }
            detail::write_output(compile_out, body.str(), out);
            return kOk;
        }

        if (*check) {
            DenseMatrix a = detail::densify_any(read_any_file(check_a));
            DenseMatrix b = detail::densify_any(read_any_file(check_b));
            double dist = frobenius_distance_rel(a, b);
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.17g", dist);
            out << "distance=" << buf << " tol=" << check_tol << "\n";
            return dist <= check_tol ? kOk : kVerifyFail;
        }

        if (*route) {
            auto obj = read_any_file(route_in);
            const auto* p = std::get_if<Permutation>(&obj);
            if (!p) throw ParseError("route expects a permutation file");
            std::ostringstream body;
            write_kmatrix(body, route_permutation(*p));
            detail::write_output(route_out, body.str(), out);
            return kOk;
        }

        if (*train_cmd) {
            TrainConfig cfg;
            cfg.eta = train_eta;
            cfg.eps = train_eps;
            cfg.max_iters = train_iters;
            cfg.seed = train_seed;
            cfg.g = train_relu ? Nonlinearity::Relu : Nonlinearity::Identity;
            auto obj = read_any_file(train_in);
            TrainState state;
            if (const auto* m = std::get_if<DenseMatrix>(&obj))
                state = train(*m, train_n, train_w, train_e, cfg);
            else if (const auto* data = std::get_if<std::vector<TrainSample>>(&obj))
                state = train(*data, train_n, train_w, train_e, cfg);
            else
                throw ParseError("train expects a dense matrix or pairs file");
            std::ostringstream body;
            write_kmatrix(body, state.model);
            detail::write_output(train_out, body.str(), out);
            if (!train_csv.empty()) {
                std::ostringstream csv;
                csv << "iter,loss\n";
                for (std::size_t i = 0; i < state.loss_history.size(); ++i) {
                    char buf[64];
                    std::snprintf(buf, sizeof buf, "%.17g", state.loss_history[i]);
                    csv << i << "," << buf << "\n";
                }
                detail::write_output(train_csv, csv.str(), out);
            }
            out << "iters=" << state.iter << " final_loss=" << state.loss_history.back() << "\n";
            return kOk;
        }

        if (*mvm) {
            auto op = read_any_file(mvm_op, mvm_format);
            auto vec_obj = read_any_file(mvm_vec);
            const auto* vm = std::get_if<DenseMatrix>(&vec_obj);
            if (!vm) throw ParseError("mvm expects a dense vector file");
            auto res = detail::mvm_any(op, dense_as_vector(*vm));
            std::ostringstream body;
            write_dense(body, vector_as_dense(res.y));
            detail::write_output(mvm_out, body.str(), out);
            if (mvm_count) out << "mul_adds=" << res.mul_adds << "\n";
            return kOk;
        }

        if (*grad) {
            auto obj = read_any_file(grad_circuit);
            const auto* c = std::get_if<Circuit>(&obj);
            if (!c) throw ParseError("grad expects a circuit file");
            auto pt_obj = read_any_file(grad_point);
            const auto* pm = std::get_if<DenseMatrix>(&pt_obj);
            if (!pm) throw ParseError("grad expects a dense vector file");
            GradientResult g = backprop(*c, dense_as_vector(*pm));
            std::ostringstream body;
            write_dense(body, vector_as_dense(g.grad));
            detail::write_output(grad_out, body.str(), out);
            out << "reverse_ops=" << g.op_count << "\n";
            return kOk;
        }

        if (*transpose_cmd) {
            auto obj = read_any_file(tr_circuit);
            const auto* c = std::get_if<Circuit>(&obj);
            if (!c) throw ParseError("transpose expects a circuit file");
            auto v_obj = read_any_file(tr_vec);
            const auto* vm = std::get_if<DenseMatrix>(&v_obj);
            if (!vm) throw ParseError("transpose expects a dense vector file");
            Vector y = transpose_apply(*c, dense_as_vector(*vm));
            std::ostringstream body;
            write_dense(body, vector_as_dense(y));
            detail::write_output(tr_out, body.str(), out);
            return kOk;
        }
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kParse;
    } catch (const DivergedError& e) {
        err << "error: " << e.what() << "\n";
        return kDiverged;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kParse;
    }
    err << "usage error: no subcommand\n";
    return kUsage;
}

}  // namespace kaleido::cli
