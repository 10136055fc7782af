#pragma once

#include <functional>
#include <map>
#include <vector>

#include "sfd/mf.hpp"

namespace sfd {

// ---- flattened endomorphism space -------------------------------------------

// R_0-linear coordinates on End_R(E_R) truncated at the series order:
// one coordinate per (monomial, row subset, column subset).
template <class K>
struct FlatSpace {
    EndoCtx<K> ctx;
    std::vector<Mono> mons;
    std::map<Mono, int, MonoLess> mono_index;

    FlatSpace() = default;
    explicit FlatSpace(const EndoCtx<K>& c) : ctx(c) {
        mons = monomials_up_to(c.n, c.order);
        for (int i = 0; i < int(mons.size()); ++i) mono_index[mons[i]] = i;
    }

    int size() const { return int(mons.size()) * ctx.dim() * ctx.dim(); }
    int of(int mono, int row, int col) const {
        return (mono * ctx.dim() + row) * ctx.dim() + col;
    }
    int mono_of(int idx) const { return idx / (ctx.dim() * ctx.dim()); }
    int row_of(int idx) const { return (idx / ctx.dim()) % ctx.dim(); }
    int col_of(int idx) const { return idx % ctx.dim(); }

    // exterior grade |row| - |col|
    int grade_of(int idx) const {
        return subset_size(ctx.basis[row_of(idx)]) - subset_size(ctx.basis[col_of(idx)]);
    }
    int xdeg_of(int idx) const { return mons[mono_of(idx)].degree(); }
    int parity_of(int idx) const {
        return ((grade_of(idx)) % 2 + 2) % 2;
    }

    std::vector<std::pair<int, K>> to_flat(const Mat<K>& m) const {
        std::vector<std::pair<int, K>> v;
        for (int r = 0; r < ctx.dim(); ++r)
            for (int c = 0; c < ctx.dim(); ++c)
                for (const auto& [mono, coeff] : m.at(r, c).terms())
                    v.emplace_back(of(mono_index.at(mono), r, c), coeff);
        return v;
    }
    Mat<K> from_flat(const std::vector<std::pair<int, K>>& v) const {
        Mat<K> m(ctx);
        for (const auto& [idx, coeff] : v)
            m.at(row_of(idx), col_of(idx)).add_term(mons[mono_of(idx)], coeff);
        return m;
    }
};

// column-sparse linear operator on a flat space
template <class K>
struct SparseOp {
    int size = 0;
    std::vector<std::vector<std::pair<int, K>>> col;

    explicit SparseOp(int n = 0) : size(n), col(n) {}

    void add(int to, int from, const K& c) {
        if (c.is_zero()) return;
        col[from].emplace_back(to, c);
    }
    void compress() {
        for (auto& entries : col) {
            std::map<int, K> acc;
            for (auto& [to, c] : entries) {
                auto it = acc.find(to);
                if (it == acc.end()) acc[to] = c;
                else it->second += c;
            }
            entries.clear();
            for (auto& [to, c] : acc)
                if (!c.is_zero()) entries.emplace_back(to, c);
        }
    }
    std::vector<std::pair<int, K>> apply_vec(const std::vector<std::pair<int, K>>& v) const {
        std::map<int, K> acc;
        for (const auto& [idx, coeff] : v) {
            for (const auto& [to, c] : col[idx]) {
                auto it = acc.find(to);
                if (it == acc.end()) acc[to] = c * coeff;
                else it->second += c * coeff;
            }
        }
        std::vector<std::pair<int, K>> out;
        for (auto& [idx, c] : acc)
            if (!c.is_zero()) out.emplace_back(idx, c);
        return out;
    }
    SparseOp compose_with(const SparseOp& inner) const {
        // this . inner
        SparseOp r(size);
        for (int j = 0; j < size; ++j) {
            if (inner.col[j].empty()) continue;
            r.col[j] = apply_vec(inner.col[j]);
        }
        return r;
    }
    SparseOp operator+(const SparseOp& o) const {
        SparseOp r(size);
        for (int j = 0; j < size; ++j) {
            r.col[j] = col[j];
            r.col[j].insert(r.col[j].end(), o.col[j].begin(), o.col[j].end());
        }
        r.compress();
        return r;
    }
    SparseOp operator-() const {
        SparseOp r = *this;
        for (auto& entries : r.col)
            for (auto& [to, c] : entries) c = -c;
        return r;
    }
};

template <class K>
Mat<K> sparse_apply(const FlatSpace<K>& fs, const SparseOp<K>& op, const Mat<K>& m) {
    return fs.from_flat(op.apply_vec(fs.to_flat(m)));
}

// mu^1 of the endomorphism dg-algebra as a flat operator, restricted to the
// grade-g part of the squifferential: mu^1(e) = (-1)^{|e|} D_g e - e D_g
template <class K>
SparseOp<K> flat_mu1_part(const FlatSpace<K>& fs, const Mat<K>& dpart) {
    SparseOp<K> op(fs.size());
    int dim = fs.ctx.dim();
    int order = fs.ctx.order;
    for (int mi = 0; mi < int(fs.mons.size()); ++mi) {
        Mono alpha = fs.mons[mi];
        for (int r = 0; r < dim; ++r) {
            for (int c = 0; c < dim; ++c) {
                int from = fs.of(mi, r, c);
                int par = fs.parity_of(from);
                // D . e: column c picks up x^alpha * (column r of D)
                for (int r2 = 0; r2 < dim; ++r2) {
                    for (const auto& [beta, coeff] : dpart.at(r2, r).terms()) {
                        Mono m2 = alpha * beta;
                        if (m2.degree() > order) continue;
                        K val = par % 2 ? -coeff : coeff;
                        op.add(fs.of(fs.mono_index.at(m2), r2, c), from, val);
                    }
                }
                // e . D: row r spreads along row c of D
                for (int c2 = 0; c2 < dim; ++c2) {
                    for (const auto& [beta, coeff] : dpart.at(c, c2).terms()) {
                        Mono m2 = alpha * beta;
                        if (m2.degree() > order) continue;
                        op.add(fs.of(fs.mono_index.at(m2), r, c2), from, -coeff);
                    }
                }
            }
        }
    }
    op.compress();
    return op;
}

// ---- transfer data -----------------------------------------------------------

template <class K>
struct TransferData {
    MatrixFactorization<K> e0;
    FlatSpace<K> fs;
    std::vector<std::vector<Series<K>>> lambda;
    std::vector<Mat<K>> f;         // corrected cocycles f_i (odd)
    std::vector<Mat<K>> iota;      // iota(v_I) per basis subset, graded-lex
    SparseOp<K> eta;               // homotopy; absorbs the (id - iota pi) projection
    SparseOp<K> dmu1;              // flat mu^1 of end(E_0)
    SparseOp<K> proj;              // flat iota o pi
    int certified_order = 0;       // identities exact on inputs of x-degree <= this

    const EndoCtx<K>& ctx() const { return e0.ctx; }

    MV<K> pi(const Mat<K>& m) const {
        const EndoCtx<K>& c = e0.ctx;
        MV<K> out(c.n);
        for (int r = 0; r < c.dim(); ++r)
            out.set(c.basis[r], m.at(r, 0).coeff(Mono::one()));
        return out;
    }
    Mat<K> iota_of(const MV<K>& a) const {
        Mat<K> out(e0.ctx);
        for (const auto& [s, coeff] : a.coeffs()) {
            Mat<K> t = iota[e0.ctx.index.at(s)];
            for (auto& x : t.e) x = x.scaled(coeff);
            out += t;
        }
        return out;
    }
    Mat<K> eta_of(const Mat<K>& m) const { return sparse_apply(fs, eta, m); }
};

// f_i = v_i ^ . + sum_j lambda_ij v_j* -| .
template <class K>
std::vector<Mat<K>> build_cocycles(const MatrixFactorization<K>& e0,
                                   const std::vector<std::vector<Series<K>>>& lambda) {
    const EndoCtx<K>& c = e0.ctx;
    int n = c.n, order = c.order;
    std::vector<Mat<K>> out;
    for (int i = 1; i <= n; ++i) {
        Mat<K> fi = mat_from_action<K>(c, [&](Subset s) {
            auto a = MVR<K>::basis(n, s, Series<K>::constant(n, order, c.one));
            MVR<K> img = wedge(MVR<K>::basis(n, Subset(1) << (i - 1),
                                             Series<K>::constant(n, order, c.one)),
                               a);
            for (int j = 1; j <= n; ++j)
                img += contract_var(j, a).scaled(lambda[i - 1][j - 1]);
            return img;
        });
        // cocycle condition: d_E0 f_i + f_i d_E0 = 0
        Mat<K> check = mat_compose(e0.d, fi) + mat_compose(fi, e0.d);
        if (!check.is_zero())
            throw std::domain_error("build_cocycles: f_i is not a cocycle (splitting bug)");
        out.push_back(fi);
    }
    return out;
}

template <class K>
std::vector<Mat<K>> build_iota(const MatrixFactorization<K>& e0,
                               const std::vector<Mat<K>>& f) {
    const EndoCtx<K>& c = e0.ctx;
    std::vector<Mat<K>> iota;
    for (Subset s : c.basis) {
        Mat<K> m = mat_identity(c);
        for (int i : subset_indices(s)) m = mat_compose(m, f[i - 1]);
        iota.push_back(m);
    }
    return iota;
}

// ---- the homotopy eta --------------------------------------------------------

namespace detail {

// dense column-vector solve helpers on a list of flat coordinates
template <class K>
struct Position {
    std::vector<int> coords;            // flat indices at this (line, grade)
    std::map<int, int> local;           // flat index -> local position
};

}  // namespace detail

// Construct eta = eta_{-1} + eta_{-3} + ... with the required side
// conditions. eta_{-1} comes from a seeded splitting of the acyclic
// columns of d_1 on ker pi: on the R.id summand it reproduces the closed
// form eta_{-1}(x^a id) = -sum_i m_i(x^a) v_i* -| . of the canonical
// splitting maps. Identities hold exactly on inputs of x-degree < order
// (the truncation boundary cannot support an exact homotopy).
template <class K>
TransferData<K> build_transfer(const MatrixFactorization<K>& e0) {
    TransferData<K> td;
    td.e0 = e0;
    const EndoCtx<K>& c = td.e0.ctx;
    int n = c.n, order = c.order, dim = c.dim();
    K one = c.one;
    K zero = one.zero_like();
    td.fs = FlatSpace<K>(c);
    const FlatSpace<K>& fs = td.fs;

    td.lambda = splitting_lambda(td.e0.potential);
    td.f = build_cocycles(td.e0, td.lambda);
    td.iota = build_iota(td.e0, td.f);

    // graded parts of the squifferential and of mu^1
    Mat<K> dplus = mat_graded_part(c, td.e0.d, 1);
    Mat<K> dminus = td.e0.d - dplus;
    SparseOp<K> d1 = flat_mu1_part(fs, dplus);
    SparseOp<K> dm1 = flat_mu1_part(fs, dminus);

    // ker pi as flat coordinates: everything except (1, row, empty-col)
    std::vector<bool> in_c(fs.size(), true);
    for (int r = 0; r < dim; ++r) in_c[fs.of(0, r, 0)] = false;

    // positions on the line lambda = xdeg - grade, indexed by grade
    // seeds at grade -1: u_alpha = m_i(x^alpha) v_i* -| .  (single i = min support)
    auto contraction_mat = [&](int i) {
        return mat_from_action<K>(c, [&](Subset s) {
            return contract_var(i, MVR<K>::basis(n, s, Series<K>::constant(n, order, one)));
        });
    };
    std::vector<Mat<K>> contr;
    for (int i = 1; i <= n; ++i) contr.push_back(contraction_mat(i));

    SparseOp<K> eta1(fs.size());

    // d_1 shifts alpha + 1_J - 1_I by an even vector, so the per-variable
    // parities of that vector split each line into independent chains
    auto tau_of = [&](int idx) {
        int mi = fs.mono_of(idx);
        Subset row = c.basis[fs.row_of(idx)], col = c.basis[fs.col_of(idx)];
        int t = 0;
        for (int v = 1; v <= n; ++v) {
            int a = fs.mons[mi].exp(v, n) + ((row >> (v - 1)) & 1) - ((col >> (v - 1)) & 1);
            t |= (a & 1) << (v - 1);
        }
        return t;
    };
    auto tau_of_mono = [&](const Mono& alpha) {
        int t = 0;
        for (int v = 1; v <= n; ++v) t |= (alpha.exp(v, n) & 1) << (v - 1);
        return t;
    };

    for (int line = -n; line <= order + n; ++line) {
    for (int tau = 0; tau < (1 << n); ++tau) {
        // collect coordinates per grade within this chain
        std::map<int, detail::Position<K>> pos;
        for (int idx = 0; idx < fs.size(); ++idx) {
            if (!in_c[idx]) continue;
            int g = fs.grade_of(idx);
            int m = fs.xdeg_of(idx);
            if (m - g != line || tau_of(idx) != tau) continue;
            auto& p = pos[g];
            p.local[idx] = int(p.coords.size());
            p.coords.push_back(idx);
        }
        if (pos.empty()) continue;

        // candidate complement bases per grade: seeds first (grade -1), then
        // coordinate vectors in flat order
        std::map<int, std::vector<std::vector<std::pair<int, K>>>> cand;
        for (auto& [g, p] : pos) {
            auto& list = cand[g];
            if (g == -1 && line >= 1 && line <= order) {
                for (const Mono& alpha : monomials_of_degree(n, line)) {
                    if (tau_of_mono(alpha) != tau) continue;
                    int i = 0;
                    for (int v = n; v >= 1; --v)
                        if (alpha.exp(v, n) > 0) { i = v; break; }
                    Mono rest = alpha.div_var(i, n);
                    std::vector<std::pair<int, K>> vec;
                    const Mat<K>& cm = contr[i - 1];
                    for (int r = 0; r < dim; ++r)
                        for (int cc = 0; cc < dim; ++cc) {
                            K coeff = cm.at(r, cc).coeff(Mono::one());
                            if (!coeff.is_zero())
                                vec.emplace_back(fs.of(fs.mono_index.at(rest), r, cc), coeff);
                        }
                    list.push_back(std::move(vec));
                }
            }
            for (int i : p.coords) list.push_back({{i, one}});
        }

        // per grade: dense d1-matrix to the next grade, rref over the
        // candidate columns, pivot candidates span the complement W_g
        std::map<int, std::vector<int>> wpick;  // chosen candidate indices
        for (auto& [g, p] : pos) {
            auto next = pos.find(g + 1);
            auto& candidates = cand[g];
            if (next == pos.end()) { wpick[g] = {}; continue; }
            auto& np = next->second;
            std::vector<std::vector<K>> m(np.coords.size(),
                                          std::vector<K>(candidates.size(), zero));
            for (int j = 0; j < int(candidates.size()); ++j) {
                auto img = d1.apply_vec(candidates[j]);
                for (auto& [to, coeff] : img) {
                    auto it = np.local.find(to);
                    if (it == np.local.end()) continue;  // outside the window
                    m[it->second][j] = coeff;
                }
            }
            auto r = rref(m, int(candidates.size()));
            wpick[g] = r.pivot_col;
        }

        // homotopy H_g: C_g -> C_{g-1}, columns solved through the basis
        // [ d1(W_{g-1}) | W_g | junk completion ]
        for (auto& [g, p] : pos) {
            auto prev = pos.find(g - 1);
            if (prev == pos.end()) continue;
            auto& pp = prev->second;
            int dimg = int(p.coords.size());
            std::vector<std::vector<std::pair<int, K>>> basis_vecs;
            std::vector<std::vector<std::pair<int, K>>> preimages;
            for (int j : wpick[g - 1]) {
                basis_vecs.push_back(d1.apply_vec(cand[g - 1][j]));
                preimages.push_back(cand[g - 1][j]);
            }
            int nw = int(basis_vecs.size());
            for (int j : wpick[g]) basis_vecs.push_back(cand[g][j]);
            // greedy coordinate completion for truncation-boundary junk,
            // found in one pass as the extra pivot columns of [basis | id]
            if (int(basis_vecs.size()) < dimg) {
                int nb0 = int(basis_vecs.size());
                std::vector<std::vector<K>> probe(dimg, std::vector<K>(nb0 + dimg, zero));
                for (int j = 0; j < nb0; ++j)
                    for (auto& [to, coeff] : basis_vecs[j]) {
                        auto it = p.local.find(to);
                        if (it != p.local.end()) probe[it->second][j] = coeff;
                    }
                for (int i = 0; i < dimg; ++i) probe[i][nb0 + i] = one;
                auto r0 = rref(probe, nb0 + dimg);
                for (int pc : r0.pivot_col)
                    if (pc >= nb0) basis_vecs.push_back({{p.coords[pc - nb0], one}});
            }
            int nb = int(basis_vecs.size());
            if (nb != dimg)
                throw std::domain_error("build_transfer: homotopy basis mismatch");
            // invert the basis matrix
            std::vector<std::vector<K>> aug(dimg, std::vector<K>(nb + dimg, zero));
            for (int j = 0; j < nb; ++j)
                for (auto& [to, coeff] : basis_vecs[j]) {
                    auto it = p.local.find(to);
                    if (it != p.local.end()) aug[it->second][j] = coeff;
                }
            for (int i = 0; i < dimg; ++i) aug[i][nb + i] = one;
            auto r = rref(aug, nb);
            if (r.rank < dimg)
                throw std::domain_error("build_transfer: homotopy basis not invertible");
            // column i of the inverse = coefficients of e_i in the basis;
            // route the first nw coefficients through the preimages, negated
            for (int i = 0; i < dimg; ++i) {
                for (int bj = 0; bj < nw; ++bj) {
                    // inverse entry (bj, i)
                    K coeff = r.m[bj][nb + i];
                    if (coeff.is_zero()) continue;
                    for (auto& [to, pv] : preimages[bj]) eta1.add(to, p.coords[i], -(coeff * pv));
                }
            }
        }
    }
    }
    eta1.compress();

    // eta = eta_{-1} + theta_1 eta_{-1} + theta_2 eta_{-1} + ... with
    // theta_j = d_{-1} eta_{-2j+1} + eta_{-2j+1} d_{-1}. Because eta_{-1}
    // squares to zero by the splitting construction, every cross term of
    // eta^2 contains eta_{-1} theta_j eta_{-1} = 0, so the side conditions
    // already hold and no repair pass is needed.
    SparseOp<K> eta_total = eta1;
    SparseOp<K> etaj = eta1;
    for (int j = 1; j <= n; ++j) {
        SparseOp<K> theta = dm1.compose_with(etaj) + etaj.compose_with(dm1);
        etaj = theta.compose_with(eta1);
        bool empty = true;
        for (auto& col : etaj.col)
            if (!col.empty()) { empty = false; break; }
        if (empty) break;
        eta_total = eta_total + etaj;
    }
    // eta is zero on im iota: compose with (id - iota pi). The projector has
    // nonzero columns only at the (1, J, empty) coordinates, and (id - P)
    // lands in the ker-pi coordinate span, where eta1 is defined.
    SparseOp<K> projector(fs.size());
    for (int r = 0; r < dim; ++r) {
        int from = fs.of(0, r, 0);
        for (auto& [to, coeff] : fs.to_flat(td.iota[r])) projector.add(to, from, coeff);
    }
    projector.compress();
    td.proj = projector;

    for (int idx = 0; idx < fs.size(); ++idx)
        if (!in_c[idx]) eta_total.col[idx].clear();
    {
        // id - P
        SparseOp<K> idp = -projector;
        for (int idx = 0; idx < fs.size(); ++idx) idp.add(idx, idx, one);
        idp.compress();
        eta_total = eta_total.compose_with(idp);
    }

    td.dmu1 = d1 + dm1;
    td.eta = eta_total;

    // measure the exact certified window: the largest x-degree m0 such that
    // the homotopy identity holds on every column of degree <= m0. The
    // truncation boundary always breaks the top layer; quadratic parts of w
    // can cost one more through the theta corrections.
    {
        SparseOp<K> lhs = td.dmu1.compose_with(eta_total) + eta_total.compose_with(td.dmu1);
        int bad = order + 1;
        for (int idx = 0; idx < fs.size(); ++idx) {
            int m = fs.xdeg_of(idx);
            if (m >= bad) continue;
            std::map<int, K> acc;
            for (auto& [to, coeff] : lhs.col[idx]) acc[to] += coeff;
            for (auto& [to, coeff] : projector.col[idx]) acc[to] -= coeff;
            acc[idx] += one;
            for (auto& [to, coeff] : acc)
                if (!coeff.is_zero()) { bad = m; break; }
        }
        td.certified_order = bad - 1;
    }
    return td;
}

// For a potential known exactly as a polynomial: rebuild at increasing
// internal orders until the homotopy identities certify the wanted window.
template <class K>
TransferData<K> build_transfer_window(const Series<K>& w, const K& one, int want_window) {
    int deg = 0;
    for (const auto& [m, c] : w.terms()) deg = std::max(deg, m.degree());
    int buffer = std::max(0, deg - 2);
    for (;; ++buffer) {
        auto td = build_transfer(stabilize_skyscraper(w.extended(want_window + 1 + buffer), one));
        if (td.certified_order >= want_window) return td;
        if (buffer > want_window + 2 * deg + 4)
            throw std::domain_error("build_transfer_window: window did not certify");
    }
}

// exact verification of the transfer identities on the certified window
template <class K>
CheckReport check_transfer_data(const TransferData<K>& td, int window = -1) {
    CheckReport rep;
    if (window < 0) window = td.certified_order;
    rep.certified_order = window;
    const EndoCtx<K>& c = td.ctx();
    int dim = c.dim();
    const FlatSpace<K>& fs = td.fs;
    K one = c.one;

    // pi o iota = id
    for (int i = 0; i < dim; ++i) {
        MV<K> got = td.pi(td.iota[i]);
        if (got != MV<K>::basis(c.n, c.basis[i], one))
            rep.fail("pi(iota(v_I)) != v_I at " + subset_str(c.basis[i]));
    }

    // matrix identities on all flat inputs within the window:
    // mu^1 eta + eta mu^1 = iota pi - id, eta^2 = 0, pi eta = 0
    SparseOp<K> lhs = td.dmu1.compose_with(td.eta) + td.eta.compose_with(td.dmu1);
    SparseOp<K> etasq = td.eta.compose_with(td.eta);
    for (int idx = 0; idx < fs.size(); ++idx) {
        if (fs.xdeg_of(idx) > window) continue;
        std::map<int, K> acc;
        for (auto& [to, coeff] : lhs.col[idx]) acc[to] += coeff;
        for (auto& [to, coeff] : td.proj.col[idx]) acc[to] -= coeff;
        acc[idx] += one;
        bool bad = false;
        for (auto& [to, coeff] : acc)
            if (!coeff.is_zero()) bad = true;
        if (bad) rep.fail("homotopy identity fails at flat index " + std::to_string(idx));
        if (!etasq.col[idx].empty()) {
            bool nz = false;
            for (auto& [to, coeff] : etasq.col[idx])
                if (!coeff.is_zero()) nz = true;
            if (nz) rep.fail("eta^2 != 0 at flat index " + std::to_string(idx));
        }
        for (auto& [to, coeff] : td.eta.col[idx])
            if (!coeff.is_zero() && fs.mono_of(to) == 0 && fs.col_of(to) == 0)
                rep.fail("pi eta != 0 at flat index " + std::to_string(idx));
        if (!rep.ok && rep.failures.size() >= 16) return rep;
    }
    for (int i = 0; i < dim; ++i) {
        if (!td.eta_of(td.iota[i]).is_zero())
            rep.fail("eta iota != 0 at " + subset_str(c.basis[i]));
    }
    return rep;
}

// ---- minimal model -----------------------------------------------------------

template <class K>
struct Element {
    Mat<K> m;
    int parity = 0;
};

// general homotopy kernel on concrete elements; eta.p_1 is the identity
template <class K>
Element<K> markl_p(const TransferData<K>& td, const std::vector<Element<K>>& args);

template <class K>
Element<K> markl_eta_p(const TransferData<K>& td, const std::vector<Element<K>>& args) {
    if (args.size() == 1) return args[0];
    Element<K> p = markl_p(td, args);
    return {td.eta_of(p.m), 1 - p.parity};
}

template <class K>
Element<K> mu2_b0(const TransferData<K>& td, const Element<K>& g, const Element<K>& f) {
    Mat<K> gf = mat_compose(g.m, f.m);
    if (f.parity % 2) gf = -gf;
    return {gf, (g.parity + f.parity) % 2};
}

template <class K>
Element<K> markl_p(const TransferData<K>& td, const std::vector<Element<K>>& args) {
    int k = int(args.size());
    Element<K> total{Mat<K>(td.ctx()), 1};
    for (int j = 1; j <= k - 1; ++j) {
        std::vector<Element<K>> left(args.begin(), args.begin() + (k - j));
        std::vector<Element<K>> right(args.begin() + (k - j), args.end());
        Element<K> t = mu2_b0(td, markl_eta_p(td, left), markl_eta_p(td, right));
        total.m += t.m;
        total.parity = t.parity;
    }
    return total;
}

// minimal model tables mu^k = pi p_k iota^{(x)k} plus the projection morphism
template <class K>
struct MinimalModel {
    Deformation<K> algebra;
    // memoized eta p_j on iota-image tuples, keyed by packed tuple
    std::vector<std::map<uint64_t, Element<K>>> ep_cache;
};

template <class K>
MinimalModel<K> minimal_model(const TransferData<K>& td, int arity_cap) {
    const EndoCtx<K>& c = td.ctx();
    int n = c.n;
    MinimalModel<K> mm;
    mm.algebra = Deformation<K>(n, arity_cap, c.order, c.one);
    mm.ep_cache.assign(arity_cap + 1, {});
    // arity 1: eta p_1 (iota a) = iota a
    for (int i = 0; i < c.dim(); ++i) {
        Tuple t = {c.basis[i]};
        mm.ep_cache[1][pack_tuple(t)] =
            Element<K>{td.iota[i], subset_size(c.basis[i]) % 2};
    }
    for (int k = 2; k <= arity_cap; ++k) {
        for_each_tuple<K>(n, k, [&](const Tuple& t) {
            bool has_unit = false;
            for (Subset s : t)
                if (!s) has_unit = true;
            if (has_unit && k >= 3) return;  // vanishes by the side conditions
            Element<K> p{Mat<K>(c), 0};
            bool first = true;
            for (int j = 1; j <= k - 1; ++j) {
                Tuple lt(t.begin(), t.begin() + (k - j));
                Tuple rt(t.begin() + (k - j), t.end());
                const Element<K>& le = mm.ep_cache[k - j].at(pack_tuple(lt));
                const Element<K>& re = mm.ep_cache[j].at(pack_tuple(rt));
                Element<K> term = mu2_b0(td, le, re);
                if (first) { p = term; first = false; }
                else p.m += term.m;
            }
            if (k < arity_cap)
                mm.ep_cache[k][pack_tuple(t)] = Element<K>{td.eta_of(p.m), 1 - p.parity};
            MV<K> val = td.pi(p.m);
            if (!val.is_zero()) mm.algebra.set_mu(k, t, val);
        });
        // unit tuples at arity >= 3 stay absent: eta p_k kills them through
        // the side conditions, and sub-tuples of unit-free tuples are
        // unit-free, so the cache never needs them
    }
    return mm;
}

// H^*(A) = Cl(Q) with Q the quadratic part of -P: square and anticommutator
// relations of mu^2 against the potential coefficients
template <class K>
CheckReport clifford_check(const Deformation<K>& a, const Series<K>& p) {
    CheckReport rep;
    rep.certified_order = 2;
    int n = a.nvars();
    K one = a.one();
    for (int i = 1; i <= n; ++i) {
        Subset vi = Subset(1) << (i - 1);
        const MV<K>* sq = a.mu(2, {vi, vi});
        MV<K> got = sq ? *sq : MV<K>(n);
        Mono xi2 = Mono::var(i, n) * Mono::var(i, n);
        MV<K> want = MV<K>::basis(n, 0, p.coeff(xi2));
        if (got != want)
            rep.fail("Clifford square relation fails at v" + std::to_string(i));
    }
    for (int i = 1; i <= n; ++i) {
        for (int j = i + 1; j <= n; ++j) {
            Subset vi = Subset(1) << (i - 1), vj = Subset(1) << (j - 1);
            const MV<K>* ij = a.mu(2, {vi, vj});
            const MV<K>* ji = a.mu(2, {vj, vi});
            MV<K> anti = (ij ? *ij : MV<K>(n)) + (ji ? *ji : MV<K>(n));
            MV<K> want = MV<K>::basis(n, 0, p.coeff(Mono::var(i, n) * Mono::var(j, n)));
            if (anti != want)
                rep.fail("Clifford anticommutator fails at v" + std::to_string(i) + ",v" +
                         std::to_string(j));
        }
    }
    return rep;
}

// ---- the projection morphism Pi ------------------------------------------

// Markl's q-kernels evaluated on concrete elements of B_0; Pi^k = pi o q_k.
template <class K>
Element<K> markl_q(const TransferData<K>& td, const std::vector<Element<K>>& args) {
    int k = int(args.size());
    if (k == 1) return args[0];
    const EndoCtx<K>& c = td.ctx();
    Element<K> total{Mat<K>(c), 0};
    // r = 1: mu^2(a_k, eta q_{k-1}(rest))
    {
        std::vector<Element<K>> rest(args.begin() + 1, args.end());
        Element<K> q = markl_q(td, rest);
        Element<K> t = mu2_b0(td, args[0], Element<K>{td.eta_of(q.m), 1 - q.parity});
        total.m += t.m;
        total.parity = t.parity;
    }
    // The two-kernel terms carry a global minus sign; the convention is
    // pinned by the morphism relation checker on conjugated Yoneda tuples,
    // where the sign ambiguities of the translated recursion are visible.
    // r = 2, s3 = 0: -mu^2-composition of eta q_{s2}(left) with iota pi q_{s1}(right)
    for (int s1 = 1; s1 <= k - 1; ++s1) {
        int s2 = k - s1;
        std::vector<Element<K>> left(args.begin(), args.begin() + s2);
        std::vector<Element<K>> right(args.begin() + s2, args.end());
        Element<K> ql = markl_q(td, left);
        Element<K> qr = markl_q(td, right);
        Element<K> t = mu2_b0(td, Element<K>{td.eta_of(ql.m), 1 - ql.parity},
                              Element<K>{td.iota_of(td.pi(qr.m)), qr.parity});
        if ((qr.parity + 1) % 2) t.m = -t.m;
        total.m += t.m;
        total.parity = t.parity;
    }
    // r = 2, s3 >= 1: Koszul sign over the identity-slot arguments and the
    // same global flip, then mu^2(a_k, eta p_{1+s3}(..., eta q, iota pi q))
    for (int s3 = 1; s3 <= k - 2; ++s3) {
        int sign = 1;
        for (int i = 0; i < s3; ++i) sign += args[i].parity + 1;
        for (int s1 = 1; s1 + s3 <= k - 1; ++s1) {
            int s2 = k - s1 - s3;
            std::vector<Element<K>> pargs(args.begin() + 1, args.begin() + s3);
            std::vector<Element<K>> mid(args.begin() + s3, args.begin() + s3 + s2);
            std::vector<Element<K>> right(args.begin() + s3 + s2, args.end());
            Element<K> qm = markl_q(td, mid);
            Element<K> qr = markl_q(td, right);
            pargs.push_back(Element<K>{td.eta_of(qm.m), 1 - qm.parity});
            pargs.push_back(Element<K>{td.iota_of(td.pi(qr.m)), qr.parity});
            Element<K> inner = markl_p(td, pargs);
            Element<K> t = mu2_b0(td, args[0], Element<K>{td.eta_of(inner.m), 1 - inner.parity});
            if (sign % 2) t.m = -t.m;
            total.m += t.m;
            total.parity = t.parity;
        }
    }
    return total;
}

template <class K>
MV<K> pi_component(const TransferData<K>& td, const std::vector<Element<K>>& args) {
    Element<K> q = markl_q(td, args);
    return td.pi(q.m);
}

}  // namespace sfd
