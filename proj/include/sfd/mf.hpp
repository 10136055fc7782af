#pragma once

#include <map>
#include <vector>

#include "sfd/ainfinity.hpp"

namespace sfd {

// Endomorphism-space bookkeeping for E_R = R (x) Lambda V: the basis
// subsets in graded-lex order and a square series matrix acting on them.
template <class K>
struct EndoCtx {
    int n = 0;
    int order = 0;
    K one;
    std::vector<Subset> basis;             // graded-lex
    std::map<Subset, int, SubsetLess> index;

    EndoCtx() = default;
    EndoCtx(int nvars, int ord, const K& o) : n(nvars), order(ord), one(o) {
        basis = all_subsets(n);
        for (int i = 0; i < int(basis.size()); ++i) index[basis[i]] = i;
    }
    int dim() const { return int(basis.size()); }
};

template <class K>
struct Mat {
    int dim = 0;
    std::vector<Series<K>> e;  // row-major, dim x dim

    Mat() = default;
    Mat(const EndoCtx<K>& c)
        : dim(c.dim()), e(size_t(c.dim()) * c.dim(), Series<K>::zero(c.n, c.order)) {}

    Series<K>& at(int row, int col) { return e[size_t(row) * dim + col]; }
    const Series<K>& at(int row, int col) const { return e[size_t(row) * dim + col]; }

    bool is_zero() const {
        for (const auto& s : e)
            if (!s.is_zero()) return false;
        return true;
    }
    Mat operator+(const Mat& o) const {
        Mat r = *this;
        for (size_t i = 0; i < e.size(); ++i) r.e[i] += o.e[i];
        return r;
    }
    Mat operator-(const Mat& o) const {
        Mat r = *this;
        for (size_t i = 0; i < e.size(); ++i) r.e[i] -= o.e[i];
        return r;
    }
    Mat operator-() const {
        Mat r = *this;
        for (auto& s : r.e) s = -s;
        return r;
    }
    Mat& operator+=(const Mat& o) {
        for (size_t i = 0; i < e.size(); ++i) e[i] += o.e[i];
        return *this;
    }
    Mat& operator-=(const Mat& o) {
        for (size_t i = 0; i < e.size(); ++i) e[i] -= o.e[i];
        return *this;
    }
    Mat scaled(const Series<K>& s) const {
        Mat r = *this;
        for (auto& x : r.e) x *= s;
        return r;
    }
    bool operator==(const Mat& o) const {
        for (size_t i = 0; i < e.size(); ++i)
            if (e[i] != o.e[i]) return false;
        return true;
    }
};

template <class K>
Mat<K> mat_identity(const EndoCtx<K>& c) {
    Mat<K> m(c);
    for (int i = 0; i < c.dim(); ++i) m.at(i, i) = Series<K>::constant(c.n, c.order, c.one);
    return m;
}

template <class K>
Mat<K> mat_compose(const Mat<K>& g, const Mat<K>& f) {
    Mat<K> r;
    r.dim = g.dim;
    const Series<K>& proto = g.e[0];
    r.e.assign(g.e.size(), Series<K>::zero(proto.nvars(), proto.order()));
    for (int i = 0; i < g.dim; ++i) {
        for (int k = 0; k < g.dim; ++k) {
            const auto& a = g.at(i, k);
            if (a.is_zero()) continue;
            for (int j = 0; j < g.dim; ++j) {
                const auto& b = f.at(k, j);
                if (b.is_zero()) continue;
                r.at(i, j) += a * b;
            }
        }
    }
    return r;
}

template <class K>
MVR<K> mat_apply(const EndoCtx<K>& c, const Mat<K>& m, const MVR<K>& v) {
    MVR<K> out(c.n);
    for (const auto& [s, coeff] : v.coeffs()) {
        int col = c.index.at(s);
        for (int row = 0; row < c.dim(); ++row) {
            const auto& entry = m.at(row, col);
            if (entry.is_zero()) continue;
            out.add_term(c.basis[row], entry * coeff);
        }
    }
    return out;
}

// matrix of an operator given by its values on the subset basis
template <class K>
Mat<K> mat_from_action(const EndoCtx<K>& c, const std::function<MVR<K>(Subset)>& act) {
    Mat<K> m(c);
    for (int col = 0; col < c.dim(); ++col) {
        MVR<K> img = act(c.basis[col]);
        for (const auto& [s, coeff] : img.coeffs()) m.at(c.index.at(s), col) = coeff;
    }
    return m;
}

// filtration degree: max over entries of |row| - |col|; -2n-1 when zero
template <class K>
int mat_filtration_degree(const EndoCtx<K>& c, const Mat<K>& m) {
    int d = -2 * c.n - 1;
    for (int i = 0; i < c.dim(); ++i)
        for (int j = 0; j < c.dim(); ++j)
            if (!m.at(i, j).is_zero())
                d = std::max(d, subset_size(c.basis[i]) - subset_size(c.basis[j]));
    return d;
}

// entries connect only |row| = |col| + parity (mod 2)
template <class K>
bool mat_parity_homogeneous(const EndoCtx<K>& c, const Mat<K>& m, int parity) {
    for (int i = 0; i < c.dim(); ++i)
        for (int j = 0; j < c.dim(); ++j)
            if (!m.at(i, j).is_zero() &&
                ((subset_size(c.basis[i]) - subset_size(c.basis[j])) % 2 + 2) % 2 != parity % 2)
                return false;
    return true;
}

// the part of a matrix whose entries raise the exterior grade by exactly g
template <class K>
Mat<K> mat_graded_part(const EndoCtx<K>& c, const Mat<K>& m, int g) {
    Mat<K> r(c);
    for (int i = 0; i < c.dim(); ++i)
        for (int j = 0; j < c.dim(); ++j)
            if (subset_size(c.basis[i]) - subset_size(c.basis[j]) == g) r.at(i, j) = m.at(i, j);
    return r;
}

// ---- matrix factorisations --------------------------------------------------

// Z/2-graded factorisation D^2 = w id on E_R, D odd and superfiltered of
// degree 1.
template <class K>
struct MatrixFactorization {
    EndoCtx<K> ctx;
    Series<K> potential;
    Mat<K> d;

    void validate() const {
        if (!mat_parity_homogeneous(ctx, d, 1))
            throw std::domain_error("MatrixFactorization: squifferential not odd");
        if (mat_filtration_degree(ctx, d) > 1)
            throw std::domain_error("MatrixFactorization: squifferential not filtered");
        Mat<K> sq = mat_compose(d, d);
        Mat<K> want = mat_identity(ctx).scaled(potential);
        if (!(sq == want))
            throw std::domain_error("MatrixFactorization: D^2 != w id");
    }
};

// Canonical splitting: route each monomial to its largest variable,
// m_i(x^a) = x^a / x_i for i the greatest index with a_i > 0. Routing
// through the largest index keeps the constant parts of lambda_{ij} lower
// triangular, which is what makes pi o iota the identity on the nose.
template <class K>
std::vector<Series<K>> splitting_components(const Series<K>& w) {
    int n = w.nvars();
    // dividing by x_i costs one trust order
    std::vector<Series<K>> comp(n, Series<K>::zero(n, std::max(0, w.order() - 1)));
    for (const auto& [m, c] : w.terms()) {
        if (m.is_one()) throw std::invalid_argument("splitting: constant term present");
        for (int i = n; i >= 1; --i) {
            if (m.exp(i, n) > 0) {
                comp[i - 1].add_term(m.div_var(i, n), c);
                break;
            }
        }
    }
    return comp;
}

// lambda_{ij} = -m_j(w_i), taken in R
template <class K>
std::vector<std::vector<Series<K>>> splitting_lambda(const Series<K>& w) {
    int n = w.nvars();
    auto wi = splitting_components(w);
    std::vector<std::vector<Series<K>>> lam(n);
    for (int i = 0; i < n; ++i) {
        auto mji = splitting_components(wi[i]);
        for (int j = 0; j < n; ++j) lam[i].push_back(-mji[j]);
    }
    return lam;
}

// stabilised skyscraper E_0: a |-> -(v ^ a + w_check -| a)
template <class K>
MatrixFactorization<K> stabilize_skyscraper(const Series<K>& w, const K& one) {
    if (w.valuation() < 2) throw std::invalid_argument("stabilize: potential not in m^2");
    int n = w.nvars(), order = w.order();
    EndoCtx<K> ctx(n, order, one);
    MVR<K> v = canonical_v<K>(n, order, one);
    Covector<K> wch;
    wch.comp = splitting_components(w);
    MatrixFactorization<K> mf;
    mf.ctx = ctx;
    mf.potential = w;
    mf.d = mat_from_action<K>(ctx, [&](Subset s) {
        MVR<K> a = MVR<K>::basis(n, s, Series<K>::constant(n, order, one));
        return -(wedge(v, a) + contract(wch, a));
    });
    mf.validate();
    return mf;
}

// mirror object: d a = (-1)^{|a|} mu_0v^1(a), a factorisation of the disc
// potential whose leading term is -(v ^ .)
template <class K>
MatrixFactorization<K> mirror_object(const Deformation<K>& a) {
    int n = a.nvars(), order = a.order();
    EndoCtx<K> ctx(n, order, a.one());
    MatrixFactorization<K> mf;
    mf.ctx = ctx;
    mf.potential = disc_potential(a);
    mf.d = mat_from_action<K>(ctx, [&](Subset s) {
        MVR<K> in = MVR<K>::basis(n, s, Series<K>::constant(n, order, a.one()));
        std::vector<const MVR<K>*> args = {&in};
        MVR<K> out = mu_0v(a, args, order);
        if (subset_size(s) % 2) out = -out;
        return out;
    });
    mf.validate();  // failure signals an invalid deformation table
    return mf;
}

// ---- morphisms of factorisations ---------------------------------------------

template <class K>
struct MfMorphism {
    const MatrixFactorization<K>* src = nullptr;
    const MatrixFactorization<K>* tgt = nullptr;
    Mat<K> m;
    int parity = 0;

    int filtration_degree() const { return mat_filtration_degree(src->ctx, m); }
    bool parity_ok() const { return mat_parity_homogeneous(src->ctx, m, parity); }
};

// d f = d_tgt f - (-1)^{|f|} f d_src; degree flips, filtration degree +1
template <class K>
MfMorphism<K> hom_differential(const MfMorphism<K>& f) {
    if (!(f.src->potential == f.tgt->potential))
        throw std::domain_error("hom_differential: potential mismatch");
    MfMorphism<K> r;
    r.src = f.src;
    r.tgt = f.tgt;
    r.parity = 1 - f.parity;
    Mat<K> a = mat_compose(f.tgt->d, f.m);
    Mat<K> b = mat_compose(f.m, f.src->d);
    r.m = f.parity % 2 ? a + b : a - b;
    return r;
}

template <class K>
MfMorphism<K> hom_compose(const MfMorphism<K>& g, const MfMorphism<K>& f) {
    if (g.src != f.tgt && !(g.src->potential == f.tgt->potential))
        throw std::domain_error("hom_compose: source/target mismatch");
    MfMorphism<K> r;
    r.src = f.src;
    r.tgt = g.tgt;
    r.parity = (g.parity + f.parity) % 2;
    r.m = mat_compose(g.m, f.m);
    return r;
}

// dg-algebra view of end(X) with the A-infinity sign conventions:
// mu^1(f) = (-1)^{|f|} d f, mu^2(g, f) = (-1)^{|f|} g o f
template <class K>
struct DgEndView {
    const MatrixFactorization<K>* x;

    std::pair<Mat<K>, int> mu1(const Mat<K>& f, int parity) const {
        Mat<K> a = mat_compose(x->d, f);
        Mat<K> b = mat_compose(f, x->d);
        Mat<K> df = parity % 2 ? a + b : a - b;
        if (parity % 2) df = -df;
        return {df, 1 - parity};
    }
    std::pair<Mat<K>, int> mu2(const Mat<K>& g, int gpar, const Mat<K>& f, int fpar) const {
        Mat<K> gf = mat_compose(g, f);
        if (fpar % 2) gf = -gf;
        return {gf, (gpar + fpar) % 2};
    }
};

}  // namespace sfd
