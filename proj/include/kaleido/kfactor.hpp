#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "kaleido/butterfly.hpp"
#include "kaleido/sparse_product.hpp"

namespace kaleido {

struct Permutation {
    std::size_t n = 0;
    std::vector<std::size_t> image;  // input j lands at output image[j]

    Permutation() = default;
    explicit Permutation(std::size_t n_) : n(n_), image(n_) {
        for (std::size_t i = 0; i < n; ++i) image[i] = i;
    }
    Permutation(std::size_t n_, std::vector<std::size_t> img) : n(n_), image(std::move(img)) {
        check();
    }

    void check() const {
        if (image.size() != n) throw InvalidArgument("permutation: image length mismatch");
        std::vector<bool> seen(n, false);
        for (std::size_t v : image) {
            if (v >= n || seen[v]) throw InvalidArgument("permutation: image is not a bijection");
            seen[v] = true;
        }
    }

    Permutation inverse() const {
        Permutation p(n);
        for (std::size_t i = 0; i < n; ++i) p.image[image[i]] = i;
        return p;
    }
};

// Matrix with P*e_j = e_{image[j]}.
inline DenseMatrix densify(const Permutation& p) {
    DenseMatrix m(p.n, p.n);
    for (std::size_t j = 0; j < p.n; ++j) m.at(p.image[j], j) = Scalar{1.0, 0.0};
    return m;
}

// Apply a then b (matrix product densify(b) * densify(a)).
inline Permutation compose(const Permutation& b, const Permutation& a) {
    if (a.n != b.n) throw DimensionMismatch("compose: size mismatch");
    Permutation p(a.n);
    for (std::size_t j = 0; j < a.n; ++j) p.image[j] = b.image[a.image[j]];
    return p;
}

// Extends a partial injection (from -> to) to a full bijection on [0, n) by
// pairing the remaining sources and targets in ascending order.
inline Permutation complete_permutation(
    std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
    constexpr std::size_t npos = static_cast<std::size_t>(-1);
    std::vector<std::size_t> image(n, npos);
    std::vector<bool> taken(n, false);
    for (auto [from, to] : pairs) {
        if (from >= n || to >= n || image[from] != npos || taken[to])
            throw InvalidArgument("complete_permutation: inconsistent partial map");
        image[from] = to;
        taken[to] = true;
    }
    std::size_t next = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (image[i] != npos) continue;
        while (taken[next]) ++next;
        image[i] = next;
        taken[next] = true;
    }
    return Permutation(n, std::move(image));
}

namespace detail {

inline void set_swap(ButterflyFactorMatrix& f, std::size_t idx) {
    f.d1[idx] = Scalar{};
    f.d2[idx] = Scalar{1.0, 0.0};
    f.d3[idx] = Scalar{1.0, 0.0};
    f.d4[idx] = Scalar{};
}

// Routes sigma over lines [off, off+m) of a Benes network: the entry switch
// column goes into b2's block-size-m factor, the exit column into b1's, and
// the base column (m == 2) into b1's block-size-2 factor. Every loop starts
// at the lowest-index unrouted input and sends it through the upper
// subnetwork.
inline void route_rec(const std::vector<std::size_t>& sigma, std::size_t m, std::size_t off,
                      std::size_t n, ButterflyMatrix& b1, ButterflyMatrix& b2) {
    if (m <= 1) return;
    const std::size_t levels = log2_exact(n);
    if (m == 2) {
        if (sigma[0] == 1) set_swap(b1.factors[levels - 1], off / 2);
        return;
    }
    const std::size_t half = m / 2;
    std::vector<std::size_t> inv(m);
    for (std::size_t i = 0; i < m; ++i) inv[sigma[i]] = i;

    enum : int { kUnset = -1, kUpper = 0, kLower = 1 };
    std::vector<int> color(m, kUnset);
    for (std::size_t start = 0; start < m; ++start) {
        if (color[start] != kUnset) continue;
        std::size_t cur = start;
        color[cur] = kUpper;
        while (true) {
            std::size_t partner = (cur + half) % m;  // shares the entry switch
            if (color[partner] != kUnset) break;
            color[partner] = kLower;
            std::size_t next = inv[(sigma[partner] + half) % m];  // shares the exit switch
            if (color[next] != kUnset) break;
            color[next] = kUpper;
            cur = next;
        }
    }

    const std::size_t fidx = levels - log2_exact(m);
    const std::size_t base = (off / m) * half;
    for (std::size_t q = 0; q < half; ++q) {
        // Entry switch q straight iff its top line goes through the upper
        // subnetwork; exit switch q straight iff the value for output q
        // arrives on the upper line.
        if (color[q] == kLower) set_swap(b2.factors[fidx], base + q);
        if (color[inv[q]] == kLower) set_swap(b1.factors[fidx], base + q);
    }

    std::vector<std::size_t> upper(half), lower(half);
    for (std::size_t i = 0; i < m; ++i) {
        if (color[i] == kUpper)
            upper[i % half] = sigma[i] % half;
        else
            lower[i % half] = sigma[i] % half;
    }
    route_rec(upper, half, off, n, b1, b2);
    route_rec(lower, half, off + half, n, b1, b2);
}

}  // namespace detail

// One Benes stage realizing the permutation exactly, switch coefficients in
// {0,1}. The network has 2*log2(n)-1 switch columns while the stage has
// 2*log2(n) factor slots; b2's block-size-2 factor stays identity.
inline KMatrixStage route_permutation_stage(const Permutation& p) {
    if (!is_power_of_two(p.n)) throw InvalidArgument("route: n must be a power of two");
    KMatrixStage st = KMatrixStage::identity(p.n);
    detail::route_rec(p.image, p.n, 0, p.n, st.b1, st.b2);
    return st;
}

inline KMatrix route_permutation(const Permutation& p) {
    return KMatrix(p.n, 1, {route_permutation_stage(p)});
}

// Column entry of a horizontal step matrix.
struct StepEntry {
    std::size_t row = 0;
    Scalar value{};
};

// At most one nonzero per column; validate_step checks the monotone bounded
// offset between neighboring nonzero columns.
struct StepMatrix {
    std::size_t n = 0;
    std::vector<std::optional<StepEntry>> cols;

    StepMatrix() = default;
    explicit StepMatrix(std::size_t n_) : n(n_), cols(n_) {}

    void set(std::size_t row, std::size_t col, Scalar v) {
        if (row >= n || col >= n) throw InvalidArgument("step matrix: index out of range");
        if (cols[col]) throw InvalidArgument("step matrix: column already holds an entry");
        if (v == Scalar{}) return;
        cols[col] = StepEntry{row, v};
    }

    static StepMatrix diagonal(const Vector& d) {
        StepMatrix h(d.len());
        for (std::size_t i = 0; i < d.len(); ++i)
            if (d[i] != Scalar{}) h.set(i, i, d[i]);
        return h;
    }
};

inline DenseMatrix densify(const StepMatrix& h) {
    DenseMatrix m(h.n, h.n);
    for (std::size_t j = 0; j < h.n; ++j)
        if (h.cols[j]) m.at(h.cols[j]->row, j) = h.cols[j]->value;
    return m;
}

// For neighboring nonzero columns j1 < j2 with rows i1, i2 the offset i2-i1
// must lie in [0, j2-j1]; checking neighbors suffices because the offsets
// telescope.
inline void validate_step(const StepMatrix& h) {
    bool have_prev = false;
    std::size_t prev_col = 0, prev_row = 0;
    for (std::size_t j = 0; j < h.n; ++j) {
        if (!h.cols[j]) continue;
        std::size_t row = h.cols[j]->row;
        if (have_prev) {
            if (row < prev_row || row - prev_row > j - prev_col)
                throw StepViolation("step condition fails between columns " +
                                    std::to_string(prev_col) + " and " + std::to_string(j));
        }
        have_prev = true;
        prev_col = j;
        prev_row = row;
    }
}

namespace detail {

struct RoutedColumn {
    std::size_t col = 0;  // local column
    std::size_t row = 0;  // local row
    Scalar value{};
};

// Recursive split: each column descends to the child owning its half, at
// child row (row mod m/2); the block-size-m factor routes the child line to
// the demanded output row. Two same-half columns demanding one line with
// different outputs cannot happen for step inputs; it is asserted anyway.
inline void step_rec(const std::vector<RoutedColumn>& entries, std::size_t m, std::size_t off,
                     std::size_t n, ButterflyMatrix& out) {
    const std::size_t levels = log2_exact(n);
    if (m == 2) {
        ButterflyFactorMatrix& f = out.factors[levels - 1];
        const std::size_t idx = off / 2;
        f.d1[idx] = f.d2[idx] = f.d3[idx] = f.d4[idx] = Scalar{};
        for (const auto& en : entries) {
            Scalar& slot = en.row == 0 ? (en.col == 0 ? f.d1[idx] : f.d2[idx])
                                       : (en.col == 0 ? f.d3[idx] : f.d4[idx]);
            slot = en.value;
        }
        return;
    }
    const std::size_t half = m / 2;
    constexpr std::size_t unused = static_cast<std::size_t>(-1);
    std::vector<std::size_t> line_out(m, unused);
    std::vector<RoutedColumn> left, right;
    for (const auto& en : entries) {
        const bool is_right = en.col >= half;
        const std::size_t line = (is_right ? half : 0) + en.row % half;
        if (line_out[line] != unused && line_out[line] != en.row)
            throw RoutingConflict("step routing: line " + std::to_string(off + line) +
                                  " demanded for two different outputs");
        line_out[line] = en.row;
        if (is_right)
            right.push_back({en.col - half, en.row % half, en.value});
        else
            left.push_back({en.col, en.row % half, en.value});
    }

    ButterflyFactorMatrix& f = out.factors[levels - log2_exact(m)];
    const std::size_t base = (off / m) * half;
    for (std::size_t q = 0; q < half; ++q) {
        const std::size_t top = q, bot = q + half;
        auto coeff = [&](std::size_t out_row, std::size_t line) -> Scalar {
            if (line_out[line] != unused)
                return line_out[line] == out_row ? Scalar{1.0, 0.0} : Scalar{};
            return out_row == line ? Scalar{1.0, 0.0} : Scalar{};
        };
        f.d1[base + q] = coeff(top, top);
        f.d2[base + q] = coeff(top, bot);
        f.d3[base + q] = coeff(bot, top);
        f.d4[base + q] = coeff(bot, bot);
    }
    step_rec(left, half, off, n, out);
    step_rec(right, half, off + half, n, out);
}

}  // namespace detail

// Realizes a horizontal step matrix as a single butterfly matrix; the
// densification equals H exactly (routing coefficients are 0/1, values enter
// only at the block-size-2 leaves).
inline ButterflyMatrix step_to_butterfly(const StepMatrix& h) {
    if (!is_power_of_two(h.n) || h.n < 2)
        throw InvalidArgument("step_to_butterfly: n must be a power of two, at least 2");
    validate_step(h);
    ButterflyMatrix out = ButterflyMatrix::identity(h.n);
    std::vector<detail::RoutedColumn> entries;
    for (std::size_t j = 0; j < h.n; ++j)
        if (h.cols[j]) entries.push_back({j, h.cols[j]->row, h.cols[j]->value});
    detail::step_rec(entries, h.n, 0, h.n, out);
    return out;
}

// P1 * H * P2 * V * P3 decomposition of a matrix with at most n nonzeros;
// V is carried by its transpose, which is the step matrix the construction
// produces.
struct StepForm {
    Permutation p1;
    StepMatrix h;
    Permutation p2;
    StepMatrix v_transpose;
    Permutation p3;
};

inline DenseMatrix densify(const StepForm& sf) {
    DenseMatrix v = transpose(densify(sf.v_transpose));
    DenseMatrix m = matmul(densify(sf.p2), matmul(v, densify(sf.p3)));
    return matmul(densify(sf.p1), matmul(densify(sf.h), m));
}

// Row-major order feeds H (one column per triple, rows densely ranked);
// column-major order feeds V (a 0/1 selector that replicates each input
// coordinate into the triple positions that consume it); P2 aligns the two
// orders, P1/P3 restore original row and column indices.
inline StepForm sparse_to_step_form(const SparseMatrix& s) {
    const std::size_t n = s.rows;
    if (s.rows != s.cols) throw InvalidArgument("sparse_to_step_form: matrix must be square");
    if (s.nnz() > n) throw TooManyTriples("sparse_to_step_form: more than n nonzeros");

    std::vector<Triple> row_major = s.triples;  // already sorted row-major
    std::vector<Triple> col_major = s.triples;
    std::sort(col_major.begin(), col_major.end(), [](const Triple& a, const Triple& b) {
        return std::tie(a.col, a.row) < std::tie(b.col, b.row);
    });

    std::vector<std::size_t> rows_present, cols_present;
    for (const auto& t : row_major)
        if (rows_present.empty() || rows_present.back() != t.row) rows_present.push_back(t.row);
    for (const auto& t : col_major)
        if (cols_present.empty() || cols_present.back() != t.col) cols_present.push_back(t.col);
    auto rank_of = [](const std::vector<std::size_t>& sorted, std::size_t v) {
        return static_cast<std::size_t>(
            std::lower_bound(sorted.begin(), sorted.end(), v) - sorted.begin());
    };

    StepForm sf;
    sf.h = StepMatrix(n);
    for (std::size_t t = 0; t < row_major.size(); ++t)
        sf.h.set(rank_of(rows_present, row_major[t].row), t, row_major[t].value);

    sf.v_transpose = StepMatrix(n);
    for (std::size_t u = 0; u < col_major.size(); ++u)
        sf.v_transpose.set(rank_of(cols_present, col_major[u].col), u, Scalar{1.0, 0.0});

    std::vector<std::pair<std::size_t, std::size_t>> p3_pairs, p2_pairs, p1_pairs;
    for (std::size_t c : cols_present) p3_pairs.push_back({c, rank_of(cols_present, c)});
    for (std::size_t r : rows_present) p1_pairs.push_back({rank_of(rows_present, r), r});
    // Position of each triple in row-major order, keyed by (row, col).
    for (std::size_t u = 0; u < col_major.size(); ++u) {
        const Triple& t = col_major[u];
        std::size_t pos = static_cast<std::size_t>(
            std::lower_bound(row_major.begin(), row_major.end(), t,
                             [](const Triple& a, const Triple& b) {
                                 return std::tie(a.row, a.col) < std::tie(b.row, b.col);
                             }) -
            row_major.begin());
        p2_pairs.push_back({u, pos});
    }
    sf.p3 = complete_permutation(n, p3_pairs);
    sf.p2 = complete_permutation(n, p2_pairs);
    sf.p1 = complete_permutation(n, p1_pairs);
    return sf;
}

// At most n nonzeros -> width-5 product at expansion 1: three routed
// permutations around the two step-matrix butterflies. V has real 0/1
// entries, so (V^T)^* applied as a b2 block realizes V itself.
inline KMatrix nsparse_to_kmatrix(const SparseMatrix& s) {
    const std::size_t n = s.rows;
    if (s.rows != s.cols || !is_power_of_two(n) || n < 2)
        throw InvalidArgument("nsparse_to_kmatrix: need square n x n, n a power of two >= 2");
    StepForm sf = sparse_to_step_form(s);
    std::vector<KMatrixStage> stages;
    stages.push_back(route_permutation_stage(sf.p3));
    stages.push_back({ButterflyMatrix::identity(n), step_to_butterfly(sf.v_transpose)});
    stages.push_back(route_permutation_stage(sf.p2));
    stages.push_back({step_to_butterfly(sf.h), ButterflyMatrix::identity(n)});
    stages.push_back(route_permutation_stage(sf.p1));
    return KMatrix(n, 1, std::move(stages));
}

// Copies a butterfly into the dyadic block [off, off+m) of a size-target
// identity butterfly; coarser factors stay identity.
inline ButterflyMatrix embed_butterfly(const ButterflyMatrix& b, std::size_t target,
                                       std::size_t off) {
    if (off % std::max<std::size_t>(b.n, 1) != 0 || off + b.n > target)
        throw InvalidArgument("embed_butterfly: offset must be a multiple of the block size");
    ButterflyMatrix out = ButterflyMatrix::identity(target);
    const std::size_t shift = log2_exact(target) - log2_exact(std::max<std::size_t>(b.n, 1));
    for (std::size_t i = 0; i < b.factors.size(); ++i) {
        const ButterflyFactorMatrix& src = b.factors[i];
        ButterflyFactorMatrix& dst = out.factors[shift + i];
        for (std::size_t j = 0; j < b.n / 2; ++j) {
            dst.d1[off / 2 + j] = src.d1[j];
            dst.d2[off / 2 + j] = src.d2[j];
            dst.d3[off / 2 + j] = src.d3[j];
            dst.d4[off / 2 + j] = src.d4[j];
        }
    }
    return out;
}

inline KMatrixStage embed_stage(const KMatrixStage& st, std::size_t target, std::size_t off) {
    return {embed_butterfly(st.b1, target, off), embed_butterfly(st.b2, target, off)};
}

// Diagonal matrices are single-factor butterflies, hence valid stages.
inline KMatrixStage diagonal_stage(std::size_t size, const std::vector<Scalar>& diag) {
    KMatrixStage st = KMatrixStage::identity(size);
    ButterflyFactorMatrix& f = st.b1.factors.back();  // block size 2
    for (std::size_t q = 0; q < size / 2; ++q) {
        f.d1[q] = diag[2 * q];
        f.d2[q] = Scalar{};
        f.d3[q] = Scalar{};
        f.d4[q] = diag[2 * q + 1];
    }
    return st;
}

// Projector diag(I_n, 0) inserted between stage lists: it realizes the
// S^T S that appears when two corner-truncated products are chained.
inline KMatrixStage projector_stage(std::size_t size, std::size_t keep) {
    std::vector<Scalar> diag(size, Scalar{});
    for (std::size_t i = 0; i < keep; ++i) diag[i] = Scalar{1.0, 0.0};
    return diagonal_stage(size, diag);
}

// densify(result) == densify(k1) * densify(k2); width w1 + w2 + 1.
inline KMatrix kmatrix_product(const KMatrix& k1, const KMatrix& k2) {
    if (k1.n != k2.n) throw DimensionMismatch("kmatrix_product: logical sizes differ");
    const std::size_t n = k1.n;
    const std::size_t e = std::max(k1.e, k2.e);
    const std::size_t size = n * e;
    std::vector<KMatrixStage> stages;
    for (const auto& st : k2.stages)
        stages.push_back(k2.e == e ? st : embed_stage(st, size, 0));
    stages.push_back(projector_stage(size, n));
    for (const auto& st : k1.stages)
        stages.push_back(k1.e == e ? st : embed_stage(st, size, 0));
    return KMatrix(n, e, std::move(stages));
}

namespace detail {

// track0 = input, track1 spare, track2 work, track3 accumulator.
inline KMatrixStage copy_track0_to_track2(std::size_t n) {
    const std::size_t size = 4 * n;
    KMatrixStage st = KMatrixStage::identity(size);
    ButterflyFactorMatrix& f = st.b1.factors.front();  // block size 4n
    for (std::size_t q = 0; q < n; ++q) {
        f.d1[q] = Scalar{1.0, 0.0};  // keep track0
        f.d2[q] = Scalar{};
        f.d3[q] = Scalar{1.0, 0.0};  // overwrite track2 with track0
        f.d4[q] = Scalar{};
    }
    return st;
}

inline KMatrixStage add_track2_into_track3(std::size_t n) {
    const std::size_t size = 4 * n;
    KMatrixStage st = KMatrixStage::identity(size);
    // Block-size-2n factor: block 0 covers tracks 0-1 (identity), block 1
    // pairs track2 with track3.
    const std::size_t fidx = 1;
    ButterflyFactorMatrix& f = st.b1.factors[fidx];
    for (std::size_t q = 0; q < n; ++q) {
        f.d1[n + q] = Scalar{};  // zero track2
        f.d2[n + q] = Scalar{};
        f.d3[n + q] = Scalar{1.0, 0.0};  // track3 += track2
        f.d4[n + q] = Scalar{1.0, 0.0};
    }
    return st;
}

inline KMatrixStage swap_track0_track3(std::size_t n) {
    Permutation p(4 * n);
    for (std::size_t q = 0; q < n; ++q) {
        p.image[q] = 3 * n + q;
        p.image[3 * n + q] = q;
    }
    return route_permutation_stage(p);
}

}  // namespace detail

// Arbitrary sparsity at expansion 4. Triples are split row-major into
// ceil(s/n) chunks of at most n; each chunk is decomposed at expansion 1,
// applied on the work track, and folded into the accumulator track, so the
// width is at most 7*ceil(s/n) + 1.
inline KMatrix sparse_to_kmatrix(const SparseMatrix& s) {
    const std::size_t n = s.rows;
    if (s.rows != s.cols || !is_power_of_two(n) || n < 2)
        throw InvalidArgument("sparse_to_kmatrix: need square n x n, n a power of two >= 2");
    const std::size_t size = 4 * n;

    if (s.nnz() <= n) {
        KMatrix inner = nsparse_to_kmatrix(s);
        std::vector<KMatrixStage> stages;
        for (const auto& st : inner.stages) stages.push_back(embed_stage(st, size, 0));
        return KMatrix(n, 4, std::move(stages));
    }

    std::vector<KMatrixStage> stages;
    for (std::size_t start = 0; start < s.nnz(); start += n) {
        const std::size_t stop = std::min(start + n, s.nnz());
        SparseMatrix chunk(n, n);
        for (std::size_t i = start; i < stop; ++i)
            chunk.add(s.triples[i].row, s.triples[i].col, s.triples[i].value);
        chunk.normalize();

        stages.push_back(detail::copy_track0_to_track2(n));
        KMatrix applied = nsparse_to_kmatrix(chunk);
        for (const auto& st : applied.stages) stages.push_back(embed_stage(st, size, 2 * n));
        stages.push_back(detail::add_track2_into_track3(n));
    }
    stages.push_back(detail::swap_track0_track3(n));
    return KMatrix(n, 4, std::move(stages));
}

// Full pipeline for a square linear circuit: compile to a sparse product,
// lift every factor at the padded size, chain the lifts, route the selector,
// and rewrap the stage list at the original size.
inline KMatrix circuit_to_kmatrix(const Circuit& c) {
    if (!is_linear(c)) throw NonLinearCircuit("circuit_to_kmatrix: circuit has mul gates");
    const std::size_t n = c.n_inputs;
    if (c.outputs.size() != n || !is_power_of_two(n))
        throw NonSquare("circuit_to_kmatrix: need n inputs and n outputs, n a power of two");

    SparseProduct p = compile_to_sparse_product(c);
    const std::size_t sp = p.inner_dim;

    std::optional<KMatrix> acc;
    for (const SparseMatrix& w : p.factors) {
        KMatrix lifted = sparse_to_kmatrix(w);
        acc = acc ? kmatrix_product(lifted, *acc) : lifted;
    }

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t j = 0; j < p.selector.size(); ++j) pairs.push_back({p.selector[j], j});
    KMatrix selector = route_permutation(complete_permutation(sp, pairs));
    KMatrix total = acc ? kmatrix_product(selector, *acc) : selector;

    return KMatrix(n, total.stage_size() / n, std::move(total.stages));
}

}  // namespace kaleido
