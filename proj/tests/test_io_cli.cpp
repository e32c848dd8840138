#include <catch2/catch_amalgamated.hpp>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "kaleido/cli.hpp"
#include "kaleido/generators.hpp"
#include "test_util.hpp"

using namespace kaleido;
namespace fs = std::filesystem;

namespace {
Scalar re(double x) { return Scalar{x, 0.0}; }

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / fs::path("kaleido_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name, const std::string& content = "") {
        fs::path p = path / name;
        if (!content.empty()) {
            std::ofstream out(p);
            out << content;
        }
        return p.string();
    }
};

int run_cli(const std::vector<std::string>& args, std::string* out_text = nullptr) {
    std::ostringstream out, err;
    int code = cli::run(args, out, err);
    if (out_text) *out_text = out.str() + err.str();
    return code;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}
}  // namespace

TEST_CASE("dense and sparse round-trip") {
    Rng rng(1);
    DenseMatrix m(3, 2);
    for (auto& z : m.entries) z = rng.next_scalar(1.0);
    std::ostringstream out;
    write_dense(out, m);
    std::istringstream in(out.str());
    auto obj = read_any(in);
    const auto& back = std::get<DenseMatrix>(obj);
    CHECK(frobenius_distance(m, back) == 0.0);

    SparseMatrix s = testutil::random_sparse(6, 9, rng);
    std::ostringstream sout;
    write_sparse(sout, s);
    std::istringstream sin(sout.str());
    const auto sback = std::get<SparseMatrix>(read_any(sin));
    CHECK(frobenius_distance(densify(s), densify(sback)) == 0.0);
}

TEST_CASE("sparse parser rejects bad files") {
    std::istringstream dup("sparse 2 2 2\n0 0 1\n0 0 2\n");
    CHECK_THROWS_AS(read_any(dup), ParseError);
    std::istringstream oob("sparse 2 2 1\n0 5 1\n");
    CHECK_THROWS_AS(read_any(oob), ParseError);
}

TEST_CASE("circuit round-trip and validation") {
    Rng rng(2);
    Circuit c = testutil::random_circuit({4, 3, 5, 0.3, 2, 0.7}, rng);
    std::ostringstream out;
    write_circuit(out, c);
    std::istringstream in(out.str());
    const auto back = std::get<Circuit>(read_any(in));
    Vector x = testutil::random_vector(4, rng);
    Vector a = evaluate(c, x), b = evaluate(back, x);
    for (std::size_t i = 0; i < a.len(); ++i) CHECK(a[i] == b[i]);

    std::istringstream fwd("inputs 2\ngate 2 lin 1 0 1 5\noutputs 2\n");
    CHECK_THROWS_AS(read_any(fwd), ParseError);
    std::istringstream gap("inputs 2\ngate 5 lin 1 0 1 1\noutputs 5\n");
    CHECK_THROWS_AS(read_any(gap), ParseError);
}

TEST_CASE("kmatrix and sparseproduct round-trip") {
    Rng rng(3);
    KMatrix k = random_kmatrix(4, 2, 2, 17);
    std::ostringstream out;
    write_kmatrix(out, k);
    std::istringstream in(out.str());
    const auto back = std::get<KMatrix>(read_any(in));
    CHECK(frobenius_distance(kmatrix_densify(k), kmatrix_densify(back)) == 0.0);

    Circuit c = build_fft(4);
    SparseProduct p = compile_to_sparse_product(c);
    std::ostringstream pout;
    write_sparse_product(pout, p);
    std::istringstream pin(pout.str());
    const auto pback = std::get<SparseProduct>(read_any(pin));
    CHECK(frobenius_distance(product_densify(p), product_densify(pback)) == 0.0);
}

TEST_CASE("pairs and perm round-trip") {
    Rng rng(4);
    std::vector<TrainSample> data;
    for (int i = 0; i < 3; ++i)
        data.push_back({testutil::random_vector(4, rng), testutil::random_vector(4, rng)});
    std::ostringstream out;
    write_pairs(out, data, 4, 4);
    std::istringstream in(out.str());
    const auto back = std::get<std::vector<TrainSample>>(read_any(in));
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 4; ++j) {
            CHECK(back[i].x[j] == data[i].x[j]);
            CHECK(back[i].y[j] == data[i].y[j]);
        }

    Permutation perm = testutil::random_permutation(8, rng);
    std::ostringstream pout;
    write_permutation(pout, perm);
    std::istringstream pin(pout.str());
    CHECK(std::get<Permutation>(read_any(pin)).image == perm.image);

    std::istringstream bad("perm 3\n0 0 2\n");
    CHECK_THROWS_AS(read_any(bad), ParseError);
}

TEST_CASE("cli gen") {
    TempDir dir;
    std::string out = dir.file("f4.txt");
    CHECK(run_cli({"gen", "fourier", "--n", "4", "-o", out}) == 0);
    const auto f = std::get<DenseMatrix>(read_any_file(out));
    CHECK(std::abs(f.at(1, 1) - Scalar{0, -1}) < 1e-15);

    std::string id = dir.file("id.txt");
    CHECK(run_cli({"gen", "identity", "--n", "2", "-o", id}) == 0);
    CHECK(std::get<SparseMatrix>(read_any_file(id)).nnz() == 2);

    std::string text;
    CHECK(run_cli({"gen", "cauchy", "--s", "1,2", "--t", "2,3"}, &text) != 0);
}

TEST_CASE("cli compile, check, route") {
    TempDir dir;
    std::string circ = dir.file("fft8.txt");
    {
        std::ofstream out(circ);
        write_circuit(out, build_fft(8));
    }
    std::string prod = dir.file("fft8.sp");
    std::string stats;
    CHECK(run_cli({"compile", circ, "--target", "sparseproduct", "-o", prod}, &stats) == 0);
    CHECK(stats.find("d=3") != std::string::npos);

    CHECK(run_cli({"check", circ, prod}) == 0);

    std::string km = dir.file("fft8.km");
    CHECK(run_cli({"compile", circ, "--target", "kmatrix", "-o", km}, &stats) == 0);
    CHECK(stats.find("width=") != std::string::npos);
    CHECK(run_cli({"check", circ, km, "--tol", "1e-8"}) == 0);

    // perturbed factorization fails the check with exit code 4
    KMatrix k = std::get<KMatrix>(read_any_file(km));
    k.stages[0].b1.factors[0].d1[0] += re(0.5);
    std::string bad = dir.file("bad.km");
    {
        std::ofstream out(bad);
        write_kmatrix(out, k);
    }
    CHECK(run_cli({"check", circ, bad}) == 4);

    // routing
    std::string perm = dir.file("rev.perm");
    {
        Permutation p(8);
        for (std::size_t i = 0; i < 8; ++i) p.image[i] = 7 - i;
        std::ofstream out(perm);
        write_permutation(out, p);
    }
    std::string routed = dir.file("rev.km");
    CHECK(run_cli({"route", perm, "-o", routed}) == 0);
    CHECK(run_cli({"check", perm, routed, "--tol", "0"}) == 0);

    std::string odd = dir.file("odd.perm", "perm 3\n0 1 2\n");
    CHECK(run_cli({"route", odd}) == 3);

    // a mul-gate circuit cannot compile
    std::string mul = dir.file("mul.txt", "inputs 2\ngate 2 mul 0 1\noutputs 2\n");
    CHECK(run_cli({"compile", mul}) == 3);
}

TEST_CASE("cli mvm and op counting") {
    TempDir dir;
    std::string id = dir.file("id.km");
    {
        std::ofstream out(id);
        write_kmatrix(out, KMatrix(4, 1, {KMatrixStage::identity(4)}));
    }
    std::string vec = dir.file("x.txt");
    {
        std::ofstream out(vec);
        write_dense(out, vector_as_dense({re(1), re(2), re(3), re(4)}));
    }
    std::string result = dir.file("y.txt");
    std::string text;
    CHECK(run_cli({"mvm", id, vec, "--count-ops", "-o", result}, &text) == 0);
    Vector y = dense_as_vector(std::get<DenseMatrix>(read_any_file(result)));
    for (std::size_t i = 0; i < 4; ++i) CHECK(y[i] == re(static_cast<double>(i + 1)));
    CHECK(text.find("mul_adds=32") != std::string::npos);  // 4*1*4*log2(4)

    // repeated runs are byte-identical
    std::string again = dir.file("y2.txt");
    CHECK(run_cli({"mvm", id, vec, "-o", again}) == 0);
    CHECK(slurp(result) == slurp(again));
}

TEST_CASE("cli train") {
    TempDir dir;
    std::string target = dir.file("diag.txt");
    {
        DenseMatrix t(2, 2);
        t.at(0, 0) = re(2);
        t.at(1, 1) = re(3);
        std::ofstream out(target);
        write_dense(out, t);
    }
    std::string model = dir.file("model.km");
    std::string csv = dir.file("loss.csv");
    CHECK(run_cli({"train", target, "--n", "2", "--w", "1", "--e", "1", "--eta", "0.05",
                   "--iters", "500", "--seed", "42", "-o", model, "--loss-csv", csv}) == 0);
    std::string history = slurp(csv);
    CHECK(history.substr(0, 10) == std::string("iter,loss\n"));

    // eps above the initial loss stops immediately
    std::string quick;
    CHECK(run_cli({"train", target, "--n", "2", "--eps", "1e9", "--seed", "1", "-o",
                   dir.file("m2.km")},
                  &quick) == 0);
    CHECK(quick.find("iters=0") != std::string::npos);

    CHECK(run_cli({"train", target, "--n", "2", "--eta", "nan", "-o", dir.file("m3.km")}) != 0);
}

TEST_CASE("cli grad and transpose") {
    TempDir dir;
    std::string circ = dir.file("c.txt", "inputs 2\ngate 2 lin 2 0 3 1\noutputs 2\n");
    std::string pt = dir.file("pt.txt");
    {
        std::ofstream out(pt);
        write_dense(out, vector_as_dense({re(1), re(1)}));
    }
    std::string g = dir.file("g.txt");
    CHECK(run_cli({"grad", circ, pt, "-o", g}) == 0);
    Vector grad = dense_as_vector(std::get<DenseMatrix>(read_any_file(g)));
    CHECK(grad[0] == re(2));
    CHECK(grad[1] == re(3));

    std::string w = dir.file("w.txt");
    {
        DenseMatrix m(2, 2);
        m.at(0, 0) = re(1);
        m.at(0, 1) = re(2);
        m.at(1, 0) = re(3);
        m.at(1, 1) = re(4);
        Circuit c = build_from_dense(m);
        std::ofstream out(w);
        write_circuit(out, c);
    }
    std::string y = dir.file("yv.txt");
    {
        std::ofstream out(y);
        write_dense(out, vector_as_dense({re(1), re(0)}));
    }
    std::string t = dir.file("t.txt");
    CHECK(run_cli({"transpose", w, y, "-o", t}) == 0);
    Vector ty = dense_as_vector(std::get<DenseMatrix>(read_any_file(t)));
    CHECK(std::abs(ty[0] - re(1)) < 1e-14);
    CHECK(std::abs(ty[1] - re(2)) < 1e-14);
}

TEST_CASE("cli usage errors") {
    CHECK(run_cli({}) == 2);
    CHECK(run_cli({"frobnicate"}) == 2);
    CHECK(run_cli({"gen", "nonsense", "--n", "4"}) == 2);
}

TEST_CASE("cli format override and vandermonde") {
    TempDir dir;
    std::string vand = dir.file("v.txt");
    CHECK(run_cli({"gen", "vandermonde", "--points", "2,3", "--cols", "3", "-o", vand}) == 0);
    const auto v = std::get<DenseMatrix>(read_any_file(vand));
    CHECK(v.at(0, 2) == re(4));
    CHECK(v.at(1, 2) == re(9));

    std::string vec = dir.file("x3.txt");
    {
        std::ofstream out(vec);
        write_dense(out, vector_as_dense({re(1), re(1), re(1)}));
    }
    // forcing the wrong format is a format error, exit 3
    CHECK(run_cli({"mvm", vand, vec, "--format", "kmatrix"}) == 3);
    CHECK(run_cli({"mvm", vand, vec, "--format", "dense"}) == 0);
}

TEST_CASE("cli identity circuit compiles to a bare selector") {
    TempDir dir;
    std::string circ = dir.file("id.txt", "inputs 2\noutputs 0 1\n");
    std::string stats;
    CHECK(run_cli({"compile", circ, "-o", dir.file("id.sp")}, &stats) == 0);
    CHECK(stats.find("d=0") != std::string::npos);
}

TEST_CASE("cli sparseproduct mvm agrees with circuit evaluation") {
    TempDir dir;
    Rng rng(7);
    Circuit c = testutil::random_linear_circuit(4, 2, 5, rng);
    std::string circ = dir.file("c.txt");
    {
        std::ofstream out(circ);
        write_circuit(out, c);
    }
    std::string prod = dir.file("c.sp");
    CHECK(run_cli({"compile", circ, "-o", prod}) == 0);
    Vector x = testutil::random_vector(4, rng);
    std::string vec = dir.file("x.txt");
    {
        std::ofstream out(vec);
        write_dense(out, vector_as_dense(x));
    }
    std::string via_prod = dir.file("yp.txt"), via_circ = dir.file("yc.txt");
    CHECK(run_cli({"mvm", prod, vec, "-o", via_prod}) == 0);
    CHECK(run_cli({"mvm", circ, vec, "-o", via_circ}) == 0);
    Vector a = dense_as_vector(std::get<DenseMatrix>(read_any_file(via_prod)));
    Vector b = dense_as_vector(std::get<DenseMatrix>(read_any_file(via_circ)));
    REQUIRE(a.len() == b.len());
    for (std::size_t i = 0; i < a.len(); ++i)
        CHECK(std::abs(a[i] - b[i]) <= 1e-12 * std::max(1.0, std::abs(b[i])));
}
