#pragma once

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "kaleido/circuit.hpp"
#include "kaleido/kfactor.hpp"
#include "kaleido/sparse_product.hpp"
#include "kaleido/trainer.hpp"

namespace kaleido {

// Scalars print as `re` or `re:im` with 17 significant digits so text files
// round-trip bit-exactly.
inline std::string format_scalar(const Scalar& z) {
    char buf[64];
    if (z.imag() == 0.0) {
        std::snprintf(buf, sizeof buf, "%.17g", z.real());
        return buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g:%.17g", z.real(), z.imag());
    return buf;
}

inline double parse_double(const std::string& tok) {
    std::size_t used = 0;
    double v;
    try {
        v = std::stod(tok, &used);
    } catch (const std::exception&) {
        throw ParseError("bad number: '" + tok + "'");
    }
    if (used != tok.size()) throw ParseError("bad number: '" + tok + "'");
    return v;
}

inline Scalar parse_scalar(const std::string& tok) {
    auto colon = tok.find(':');
    if (colon == std::string::npos) return Scalar{parse_double(tok), 0.0};
    return Scalar{parse_double(tok.substr(0, colon)), parse_double(tok.substr(colon + 1))};
}

namespace detail {

class LineReader {
  public:
    explicit LineReader(std::istream& in) : in_(in) {}

    // Next non-empty line split into tokens; false at end of input.
    bool next(std::vector<std::string>& tokens) {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            tokens.clear();
            std::istringstream ss(line);
            std::string tok;
            while (ss >> tok) tokens.push_back(tok);
            if (!tokens.empty()) return true;
        }
        return false;
    }

    std::vector<std::string> expect(const std::string& what) {
        std::vector<std::string> tokens;
        if (!next(tokens)) throw ParseError("unexpected end of input, expected " + what);
        return tokens;
    }

    std::size_t line_no() const { return line_no_; }

  private:
    std::istream& in_;
    std::size_t line_no_ = 0;
};

inline std::size_t parse_count(const std::string& tok) {
    for (char c : tok)
        if (c < '0' || c > '9') throw ParseError("bad count: '" + tok + "'");
    return static_cast<std::size_t>(std::stoull(tok));
}

}  // namespace detail

// --- dense -----------------------------------------------------------------

inline void write_dense(std::ostream& out, const DenseMatrix& m) {
    out << "dense " << m.rows << " " << m.cols << "\n";
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t j = 0; j < m.cols; ++j)
            out << (j ? " " : "") << format_scalar(m.at(i, j));
        out << "\n";
    }
}

inline DenseMatrix read_dense_body(detail::LineReader& r, const std::vector<std::string>& header) {
    if (header.size() != 3) throw ParseError("dense header needs rows and cols");
    DenseMatrix m(detail::parse_count(header[1]), detail::parse_count(header[2]));
    for (std::size_t i = 0; i < m.rows; ++i) {
        auto toks = r.expect("a dense matrix row");
        if (toks.size() != m.cols) throw ParseError("dense row has wrong entry count");
        for (std::size_t j = 0; j < m.cols; ++j) m.at(i, j) = parse_scalar(toks[j]);
    }
    m.check_finite("dense file");
    return m;
}

// --- sparse ----------------------------------------------------------------

inline void write_sparse(std::ostream& out, const SparseMatrix& m) {
    out << "sparse " << m.rows << " " << m.cols << " " << m.nnz() << "\n";
    for (const auto& t : m.triples)
        out << t.row << " " << t.col << " " << format_scalar(t.value) << "\n";
}

inline SparseMatrix read_sparse_body(detail::LineReader& r,
                                     const std::vector<std::string>& header) {
    if (header.size() != 4) throw ParseError("sparse header needs rows, cols, nnz");
    SparseMatrix m(detail::parse_count(header[1]), detail::parse_count(header[2]));
    std::size_t nnz = detail::parse_count(header[3]);
    for (std::size_t i = 0; i < nnz; ++i) {
        auto toks = r.expect("a sparse triple");
        if (toks.size() != 3) throw ParseError("sparse triple needs row, col, value");
        m.add(detail::parse_count(toks[0]), detail::parse_count(toks[1]), parse_scalar(toks[2]));
    }
    try {
        m.normalize();
    } catch (const InvalidArgument& e) {
        throw ParseError(std::string("sparse file: ") + e.what());
    }
    return m;
}

// --- circuit ---------------------------------------------------------------

inline void write_circuit(std::ostream& out, const Circuit& c) {
    out << "inputs " << c.n_inputs << "\n";
    for (std::size_t i = c.n_inputs; i < c.gates.size(); ++i) {
        const Gate& g = c.gates[i];
        if (g.kind == Gate::Kind::LinComb)
            out << "gate " << i << " lin " << format_scalar(g.alpha) << " " << g.src1 << " "
                << format_scalar(g.beta) << " " << g.src2 << "\n";
        else
            out << "gate " << i << " mul " << g.src1 << " " << g.src2 << "\n";
    }
    out << "outputs";
    for (std::size_t id : c.outputs) out << " " << id;
    out << "\n";
}

inline Circuit read_circuit_body(detail::LineReader& r, const std::vector<std::string>& header) {
    if (header.size() != 2) throw ParseError("inputs header needs a count");
    Circuit c = Circuit::with_inputs(detail::parse_count(header[1]));
    std::vector<std::string> toks;
    bool saw_outputs = false;
    while (r.next(toks)) {
        if (toks[0] == "gate") {
            if (toks.size() < 3) throw ParseError("gate line too short");
            std::size_t id = detail::parse_count(toks[1]);
            if (id != c.gates.size())
                throw ParseError("gate ids must be dense and ascending, expected " +
                                 std::to_string(c.gates.size()));
            if (toks[2] == "lin") {
                if (toks.size() != 7) throw ParseError("lin gate needs alpha src1 beta src2");
                c.add_lin(parse_scalar(toks[3]), detail::parse_count(toks[4]),
                          parse_scalar(toks[5]), detail::parse_count(toks[6]));
            } else if (toks[2] == "mul") {
                if (toks.size() != 5) throw ParseError("mul gate needs src1 src2");
                c.add_mul(detail::parse_count(toks[3]), detail::parse_count(toks[4]));
            } else {
                throw ParseError("unknown gate kind '" + toks[2] + "'");
            }
        } else if (toks[0] == "outputs") {
            for (std::size_t i = 1; i < toks.size(); ++i)
                c.outputs.push_back(detail::parse_count(toks[i]));
            saw_outputs = true;
            break;
        } else {
            throw ParseError("unexpected line in circuit file: '" + toks[0] + "'");
        }
    }
    if (!saw_outputs) throw ParseError("circuit file has no outputs line");
    try {
        validate(c);
    } catch (const Error& e) {
        throw ParseError(std::string("circuit file: ") + e.what());
    }
    return c;
}

// --- sparse product ----------------------------------------------------------

inline void write_sparse_product(std::ostream& out, const SparseProduct& p) {
    out << "sparseproduct " << p.n_inputs << " " << p.n_outputs << " " << p.inner_dim << " "
        << p.factors.size() << "\n";
    for (const auto& f : p.factors) write_sparse(out, f);
    out << "selector";
    for (std::size_t i : p.selector) out << " " << i;
    out << "\n";
}

inline SparseProduct read_sparse_product_body(detail::LineReader& r,
                                              const std::vector<std::string>& header) {
    if (header.size() != 5) throw ParseError("sparseproduct header needs n, m, s', d");
    SparseProduct p;
    p.n_inputs = detail::parse_count(header[1]);
    p.n_outputs = detail::parse_count(header[2]);
    p.inner_dim = detail::parse_count(header[3]);
    std::size_t d = detail::parse_count(header[4]);
    for (std::size_t k = 0; k < d; ++k) {
        auto toks = r.expect("a sparse factor header");
        if (toks.empty() || toks[0] != "sparse") throw ParseError("expected sparse factor");
        p.factors.push_back(read_sparse_body(r, toks));
        if (p.factors.back().rows != p.inner_dim || p.factors.back().cols != p.inner_dim)
            throw ParseError("sparse factor has wrong shape");
    }
    auto toks = r.expect("the selector line");
    if (toks[0] != "selector" || toks.size() != 1 + p.n_outputs)
        throw ParseError("selector line must list one slot per output");
    for (std::size_t i = 1; i < toks.size(); ++i) {
        std::size_t v = detail::parse_count(toks[i]);
        if (v >= p.inner_dim) throw ParseError("selector index out of range");
        p.selector.push_back(v);
    }
    return p;
}

// --- kmatrix -----------------------------------------------------------------

// Factor lines list D1, D2, D3, D4 per block in ascending block order.
inline void write_butterfly(std::ostream& out, const ButterflyMatrix& b) {
    out << "butterfly " << b.n << "\n";
    for (const auto& f : b.factors) {
        out << "factor " << f.k;
        const std::size_t half = f.k / 2;
        for (std::size_t blk = 0; blk < f.n / f.k; ++blk)
            for (const auto* d : {&f.d1, &f.d2, &f.d3, &f.d4})
                for (std::size_t j = 0; j < half; ++j)
                    out << " " << format_scalar((*d)[blk * half + j]);
        out << "\n";
    }
}

inline void write_kmatrix(std::ostream& out, const KMatrix& k) {
    out << "kmatrix " << k.n << " " << k.e << " " << k.width() << "\n";
    for (const auto& st : k.stages) {
        write_butterfly(out, st.b1);
        write_butterfly(out, st.b2);
    }
}

inline ButterflyMatrix read_butterfly(detail::LineReader& r) {
    auto header = r.expect("a butterfly header");
    if (header.size() != 2 || header[0] != "butterfly")
        throw ParseError("expected 'butterfly <n>'");
    std::size_t n = detail::parse_count(header[1]);
    ButterflyMatrix b(n);
    std::size_t expect_k = n;
    while (expect_k >= 2) {
        auto toks = r.expect("a factor line");
        if (toks.size() != 2 + 2 * n || toks[0] != "factor")
            throw ParseError("factor line needs k and 2n coefficients");
        if (detail::parse_count(toks[1]) != expect_k)
            throw ParseError("factor lines must descend from n to 2");
        ButterflyFactorMatrix f(n, expect_k);
        const std::size_t half = expect_k / 2;
        std::size_t pos = 2;
        for (std::size_t blk = 0; blk < n / expect_k; ++blk)
            for (auto* d : {&f.d1, &f.d2, &f.d3, &f.d4})
                for (std::size_t j = 0; j < half; ++j) (*d)[blk * half + j] = parse_scalar(toks[pos++]);
        b.factors.push_back(std::move(f));
        expect_k /= 2;
    }
    return b;
}

inline KMatrix read_kmatrix_body(detail::LineReader& r, const std::vector<std::string>& header) {
    if (header.size() != 4) throw ParseError("kmatrix header needs n, e, w");
    std::size_t n = detail::parse_count(header[1]);
    std::size_t e = detail::parse_count(header[2]);
    std::size_t w = detail::parse_count(header[3]);
    std::vector<KMatrixStage> stages;
    for (std::size_t i = 0; i < w; ++i) {
        KMatrixStage st;
        st.b1 = read_butterfly(r);
        st.b2 = read_butterfly(r);
        if (st.b1.n != n * e || st.b2.n != n * e) throw ParseError("stage size mismatch");
        stages.push_back(std::move(st));
    }
    try {
        return KMatrix(n, e, std::move(stages));
    } catch (const InvalidArgument& err) {
        throw ParseError(std::string("kmatrix file: ") + err.what());
    }
}

// --- permutation --------------------------------------------------------------

inline void write_permutation(std::ostream& out, const Permutation& p) {
    out << "perm " << p.n << "\n";
    for (std::size_t i = 0; i < p.n; ++i) out << (i ? " " : "") << p.image[i];
    if (p.n) out << "\n";
}

inline Permutation read_permutation_body(detail::LineReader& r,
                                         const std::vector<std::string>& header) {
    if (header.size() != 2) throw ParseError("perm header needs n");
    std::size_t n = detail::parse_count(header[1]);
    std::vector<std::size_t> image;
    while (image.size() < n) {
        auto toks = r.expect("permutation image entries");
        for (const auto& t : toks) image.push_back(detail::parse_count(t));
    }
    try {
        return Permutation(n, std::move(image));
    } catch (const InvalidArgument& e) {
        throw ParseError(std::string("perm file: ") + e.what());
    }
}

// --- training pairs ------------------------------------------------------------

inline void write_pairs(std::ostream& out, const std::vector<TrainSample>& data, std::size_t n,
                        std::size_t m) {
    out << "pairs " << data.size() << " " << n << " " << m << "\n";
    auto write_vec = [&](const Vector& v) {
        for (std::size_t i = 0; i < v.len(); ++i) out << (i ? " " : "") << format_scalar(v[i]);
        out << "\n";
    };
    for (const auto& s : data) {
        write_vec(s.x);
        write_vec(s.y);
    }
}

inline std::vector<TrainSample> read_pairs_body(detail::LineReader& r,
                                                const std::vector<std::string>& header) {
    if (header.size() != 4) throw ParseError("pairs header needs L, n, m");
    std::size_t count = detail::parse_count(header[1]);
    std::size_t n = detail::parse_count(header[2]);
    std::size_t m = detail::parse_count(header[3]);
    auto read_vec = [&](std::size_t len, const char* what) {
        auto toks = r.expect(what);
        if (toks.size() != len) throw ParseError(std::string(what) + ": wrong entry count");
        Vector v(len);
        for (std::size_t i = 0; i < len; ++i) v[i] = parse_scalar(toks[i]);
        return v;
    };
    std::vector<TrainSample> data;
    for (std::size_t l = 0; l < count; ++l) {
        TrainSample s;
        s.x = read_vec(n, "an x vector");
        s.y = read_vec(m, "a y vector");
        data.push_back(std::move(s));
    }
    return data;
}

// --- sniffing dispatcher ---------------------------------------------------------

using AnyObject = std::variant<DenseMatrix, SparseMatrix, Circuit, SparseProduct, KMatrix,
                               Permutation, std::vector<TrainSample>>;

// Dispatches on the header keyword; `force` overrides sniffing.
inline AnyObject read_any(std::istream& in, const std::string& force = "") {
    detail::LineReader r(in);
    auto header = r.expect("a format header");
    std::string kind = force.empty() ? header[0] : force;
    if (!force.empty() && header[0] != force)
        throw ParseError("file header '" + header[0] + "' does not match --format " + force);
    if (kind == "dense") return read_dense_body(r, header);
    if (kind == "sparse") return read_sparse_body(r, header);
    if (kind == "inputs") return read_circuit_body(r, header);
    if (kind == "sparseproduct") return read_sparse_product_body(r, header);
    if (kind == "kmatrix") return read_kmatrix_body(r, header);
    if (kind == "perm") return read_permutation_body(r, header);
    if (kind == "pairs") return read_pairs_body(r, header);
    throw ParseError("unknown format header '" + kind + "'");
}

inline AnyObject read_any_file(const std::string& path, const std::string& force = "") {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    return read_any(in, force);
}

// Vectors travel as single-column dense files.
inline DenseMatrix vector_as_dense(const Vector& v) {
    DenseMatrix m(v.len(), 1);
    for (std::size_t i = 0; i < v.len(); ++i) m.at(i, 0) = v[i];
    return m;
}

inline Vector dense_as_vector(const DenseMatrix& m) {
    if (m.cols == 1) {
        Vector v(m.rows);
        for (std::size_t i = 0; i < m.rows; ++i) v[i] = m.at(i, 0);
        return v;
    }
    if (m.rows == 1) {
        Vector v(m.cols);
        for (std::size_t j = 0; j < m.cols; ++j) v[j] = m.at(0, j);
        return v;
    }
    throw ParseError("expected a vector (dense file with one row or one column)");
}

}  // namespace kaleido
