#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sfd/linalg.hpp"
#include "sfd/monomial.hpp"
#include "sfd/scalar.hpp"

namespace sfd {

// Element of R0[[x1..xn]] known exactly modulo m^{order+1}. Terms beyond
// the trust order are never stored; zero coefficients are never stored.
template <class K>
class Series {
public:
    using Terms = std::map<Mono, K, MonoLess>;

    Series() : n_(0), order_(0) {}
    Series(int nvars, int order) : n_(nvars), order_(order) {
        if (nvars < 0 || nvars > kMaxVars) throw std::invalid_argument("Series: bad nvars");
        if (order < 0) throw std::invalid_argument("Series: bad order");
    }

    static Series zero(int nvars, int order) { return Series(nvars, order); }
    static Series constant(int nvars, int order, const K& c) {
        Series s(nvars, order);
        s.set(Mono::one(), c);
        return s;
    }
    static Series variable(int i, int nvars, int order, const K& one) {
        Series s(nvars, order);
        if (order >= 1) s.set(Mono::var(i, nvars), one);
        return s;
    }

    int nvars() const { return n_; }
    int order() const { return order_; }
    const Terms& terms() const { return t_; }
    bool is_zero() const { return t_.empty(); }

    K coeff(const Mono& m) const {
        auto it = t_.find(m);
        return it == t_.end() ? K() : it->second;
    }

    void set(const Mono& m, const K& c) {
        if (m.degree() > order_) return;
        if (c.is_zero()) t_.erase(m);
        else t_[m] = c;
    }

    void add_term(const Mono& m, const K& c) {
        if (m.degree() > order_ || c.is_zero()) return;
        auto it = t_.find(m);
        if (it == t_.end()) { t_[m] = c; return; }
        it->second += c;
        if (it->second.is_zero()) t_.erase(it);
    }

    // lowest total degree of a stored term; order+1 for the zero series
    int valuation() const {
        if (t_.empty()) return order_ + 1;
        return t_.begin()->first.degree();
    }

    bool in_maximal_ideal(int power = 1) const { return valuation() >= power; }

    Series truncated(int new_order) const {
        Series r(n_, std::min(order_, new_order));
        for (const auto& [m, c] : t_)
            if (m.degree() <= r.order_) r.t_[m] = c;
        return r;
    }

    // Raise the trust order. Only valid when the caller knows the series
    // exactly as a polynomial (all higher coefficients zero).
    Series extended(int new_order) const {
        if (new_order <= order_) return truncated(new_order);
        Series r(n_, new_order);
        r.t_ = t_;
        return r;
    }

    // keep only the homogeneous degree-d part, same trust order
    Series homogeneous_part(int d) const {
        Series r(n_, order_);
        for (const auto& [m, c] : t_)
            if (m.degree() == d) r.t_[m] = c;
        return r;
    }

    Series operator+(const Series& o) const {
        check_compat(o);
        Series r(n_, std::min(order_, o.order_));
        for (const auto& [m, c] : t_) r.add_term(m, c);
        for (const auto& [m, c] : o.t_) r.add_term(m, c);
        return r;
    }
    Series operator-(const Series& o) const {
        check_compat(o);
        Series r(n_, std::min(order_, o.order_));
        for (const auto& [m, c] : t_) r.add_term(m, c);
        for (const auto& [m, c] : o.t_) r.add_term(m, -c);
        return r;
    }
    Series operator-() const {
        Series r(n_, order_);
        for (const auto& [m, c] : t_) r.t_[m] = -c;
        return r;
    }
    Series operator*(const Series& o) const {
        check_compat(o);
        Series r(n_, std::min(order_, o.order_));
        for (const auto& [ma, ca] : t_) {
            int da = ma.degree();
            if (da > r.order_) break;
            for (const auto& [mb, cb] : o.t_) {
                if (da + mb.degree() > r.order_) break;
                r.add_term(ma * mb, ca * cb);
            }
        }
        return r;
    }
    Series scaled(const K& c) const {
        Series r(n_, order_);
        if (c.is_zero()) return r;
        for (const auto& [m, v] : t_) {
            K cv = v * c;
            if (!cv.is_zero()) r.t_[m] = cv;
        }
        return r;
    }
    Series& operator+=(const Series& o) { return *this = *this + o; }
    Series& operator-=(const Series& o) { return *this = *this - o; }
    Series& operator*=(const Series& o) { return *this = *this * o; }

    // Spec equality: coefficients agree up to the shared trust order.
    bool operator==(const Series& o) const {
        if (n_ != o.n_) return false;
        int m = std::min(order_, o.order_);
        return truncated(m).t_ == o.truncated(m).t_;
    }
    bool operator!=(const Series& o) const { return !(*this == o); }

    std::string str() const {
        if (t_.empty()) return "0";
        std::string s;
        for (const auto& [m, c] : t_) {
            if (!s.empty()) s += " + ";
            s += c.str();
            if (!m.is_one()) s += "*" + m.str(n_);
        }
        return s;
    }

private:
    void check_compat(const Series& o) const {
        if (n_ != o.n_) throw std::invalid_argument("Series: nvars mismatch");
    }

    int n_;
    int order_;
    Terms t_;
};

// n power series with zero constant term, f_i = image of x_i.
template <class K>
struct FormalDiffeo {
    std::vector<Series<K>> comp;

    int nvars() const { return int(comp.size()); }
    int order() const { return comp.empty() ? 0 : comp[0].order(); }

    static FormalDiffeo identity(int n, int order, const K& one) {
        FormalDiffeo f;
        for (int i = 1; i <= n; ++i)
            f.comp.push_back(Series<K>::variable(i, n, order, one));
        return f;
    }

    void validate() const {
        for (const auto& s : comp) {
            if (s.nvars() != nvars()) throw std::invalid_argument("FormalDiffeo: nvars mismatch");
            if (!s.coeff(Mono::one()).is_zero())
                throw std::invalid_argument("FormalDiffeo: nonzero constant term");
        }
    }

    // linear part as an n x n matrix over K, entry (i,j) = d f_i / d x_j at 0
    std::vector<std::vector<K>> linear_part(const K& like) const {
        int n = nvars();
        std::vector<std::vector<K>> a(n, std::vector<K>(n, like.zero_like()));
        for (int i = 0; i < n; ++i)
            for (int j = 1; j <= n; ++j)
                a[i][j - 1] = comp[i].coeff(Mono::var(j, n));
        return a;
    }
};

template <class K>
Series<K> series_mul(const Series<K>& a, const Series<K>& b) { return a * b; }

// P(f_1, ..., f_n), exact modulo m^{min(orders)+1}
template <class K>
Series<K> series_compose(const Series<K>& p, const FormalDiffeo<K>& f) {
    if (p.nvars() != f.nvars()) throw std::invalid_argument("series_compose: nvars mismatch");
    f.validate();
    int n = p.nvars();
    int order = std::min(p.order(), f.order());
    Series<K> result(n, order);
    if (p.is_zero()) return result;
    K one = p.terms().begin()->second.one_like();
    // cache f_i^k as needed
    std::vector<std::vector<Series<K>>> pw(n);
    auto power = [&](int i, int k) -> const Series<K>& {
        auto& col = pw[i];
        if (col.empty()) col.push_back(Series<K>::constant(n, order, one));
        while (int(col.size()) <= k) col.push_back(col.back() * f.comp[i].truncated(order));
        return col[k];
    };
    for (const auto& [m, c] : p.terms()) {
        if (m.degree() > order) continue;
        Series<K> t = Series<K>::constant(n, order, c);
        for (int i = 1; i <= n; ++i) {
            int e = m.exp(i, n);
            if (e > 0) t = t * power(i - 1, e);
        }
        result += t;
    }
    return result;
}

// ones needed for compose caching when p has no constant term
template <class K>
Series<K> series_compose(const Series<K>& p, const FormalDiffeo<K>& f, const K& one) {
    (void)one;
    return series_compose(p, f);
}

template <class K>
FormalDiffeo<K> diffeo_compose(const FormalDiffeo<K>& f, const FormalDiffeo<K>& g) {
    // x -> f(g(x))
    FormalDiffeo<K> r;
    for (const auto& c : f.comp) r.comp.push_back(series_compose(c, g));
    return r;
}

// Two-sided inverse modulo m^{M+1}; requires invertible linear part.
template <class K>
FormalDiffeo<K> diffeo_invert(const FormalDiffeo<K>& f, const K& like) {
    f.validate();
    int n = f.nvars(), order = f.order();
    auto a = f.linear_part(like);
    // invert the linear part
    std::vector<std::vector<K>> aug(n, std::vector<K>(2 * n, like.zero_like()));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) aug[i][j] = a[i][j];
        aug[i][n + i] = like.one_like();
    }
    auto r = rref(aug, n);
    if (r.rank < n) throw std::domain_error("diffeo_invert: singular linear part");
    std::vector<std::vector<K>> ainv(n, std::vector<K>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) ainv[i][j] = r.m[i][n + j];

    auto apply_ainv = [&](const std::vector<Series<K>>& v) {
        std::vector<Series<K>> w;
        for (int i = 0; i < n; ++i) {
            Series<K> s(n, order);
            for (int j = 0; j < n; ++j) s += v[j].scaled(ainv[i][j]);
            w.push_back(s);
        }
        return w;
    };

    FormalDiffeo<K> g;
    {
        std::vector<Series<K>> id;
        for (int i = 1; i <= n; ++i) id.push_back(Series<K>::variable(i, n, order, like.one_like()));
        g.comp = apply_ainv(id);
    }
    // Newton-free order-by-order correction: at each degree the error of
    // f(g) - id is linear in the missing homogeneous part through A.
    for (int d = 2; d <= order; ++d) {
        auto fg = diffeo_compose(f, g);
        std::vector<Series<K>> err;
        for (int i = 1; i <= n; ++i) {
            Series<K> e = fg.comp[i - 1] - Series<K>::variable(i, n, order, like.one_like());
            err.push_back(e.homogeneous_part(d));
        }
        auto corr = apply_ainv(err);
        for (int i = 0; i < n; ++i) g.comp[i] -= corr[i];
    }
    return g;
}

// d/dx_i; the trust order drops by one
template <class K>
Series<K> partial_derivative(const Series<K>& p, int i) {
    int n = p.nvars();
    if (i < 1 || i > n) throw std::invalid_argument("partial_derivative: bad index");
    Series<K> r(n, std::max(0, p.order() - 1));
    for (const auto& [m, c] : p.terms()) {
        int e = m.exp(i, n);
        if (e == 0) continue;
        r.add_term(m.div_var(i, n), c * c.from_int_like(e));
    }
    return r;
}

// Symmetric quadratic form with series entries: diagonal implements the
// integer rule m(m-1)/2, off-diagonal entries are mixed second partials.
// Valid in any characteristic.
template <class K>
struct HalfHessian {
    int n = 0;
    std::vector<Series<K>> diag;                // i -> (1/2) d_i^2 P
    std::vector<std::vector<Series<K>>> off;    // i < j -> d_i d_j P

    const Series<K>& cross(int i, int j) const {
        assert(i < j);
        return off[i - 1][j - i - 1];
    }
};

template <class K>
HalfHessian<K> half_hessian(const Series<K>& p) {
    int n = p.nvars();
    HalfHessian<K> h;
    h.n = n;
    int ord = std::max(0, p.order() - 2);
    for (int i = 1; i <= n; ++i) {
        Series<K> d(n, ord);
        for (const auto& [m, c] : p.terms()) {
            int e = m.exp(i, n);
            if (e < 2) continue;
            long binom = long(e) * (e - 1) / 2;
            d.add_term(m.div_var(i, n).div_var(i, n), c * c.from_int_like(binom));
        }
        h.diag.push_back(d);
    }
    for (int i = 1; i <= n; ++i) {
        h.off.emplace_back();
        for (int j = i + 1; j <= n; ++j)
            h.off[i - 1].push_back(partial_derivative(partial_derivative(p, i), j).truncated(ord));
    }
    return h;
}

// Graded linear algebra backing the equivalence search: find series
// multipliers c_i with sum c_i * gen_i = target in homogeneous degree m.
// Unknowns are restricted to parts that meet a nonzero generator part.
template <class K>
struct IdealSolution {
    bool found = false;
    std::vector<Series<K>> coeffs;
    std::vector<std::vector<Series<K>>> kernel;
};

template <class K>
IdealSolution<K> ideal_solve(const Series<K>& target, const std::vector<Series<K>>& gens,
                             int degree, const K& like) {
    int n = target.nvars();
    for (const auto& g : gens)
        if (g.nvars() != n) throw std::invalid_argument("ideal_solve: nvars mismatch");
    // unknown slots: (generator i, monomial mu) with some gen part at degree - |mu|
    struct Slot { int gen; Mono mu; };
    std::vector<Slot> slots;
    for (int gi = 0; gi < int(gens.size()); ++gi) {
        for (int d = 0; d <= degree; ++d) {
            if (gens[gi].homogeneous_part(degree - d).is_zero()) continue;
            for (const auto& mu : monomials_of_degree(n, d)) slots.push_back({gi, mu});
        }
    }
    auto rows_idx = monomials_of_degree(n, degree);
    std::map<Mono, int, MonoLess> row_of;
    for (int i = 0; i < int(rows_idx.size()); ++i) row_of[rows_idx[i]] = i;
    std::vector<std::vector<K>> a(rows_idx.size(), std::vector<K>(slots.size(), like.zero_like()));
    for (int s = 0; s < int(slots.size()); ++s) {
        const auto& g = gens[slots[s].gen];
        int dmu = slots[s].mu.degree();
        for (const auto& [m, c] : g.terms()) {
            if (m.degree() != degree - dmu) continue;
            a[row_of[m * slots[s].mu]][s] = c;
        }
    }
    std::vector<K> b(rows_idx.size(), like.zero_like());
    for (const auto& [m, c] : target.terms())
        if (m.degree() == degree) b[row_of[m]] = c;

    auto sol = solve_linear(a, b, like);
    IdealSolution<K> out;
    if (!sol.consistent) return out;
    out.found = true;
    auto pack = [&](const std::vector<K>& v) {
        std::vector<Series<K>> cs(gens.size(), Series<K>(n, degree));
        for (int s = 0; s < int(slots.size()); ++s)
            if (!v[s].is_zero()) cs[slots[s].gen].add_term(slots[s].mu, v[s]);
        return cs;
    };
    out.coeffs = pack(sol.particular);
    for (const auto& kv : sol.kernel) out.kernel.push_back(pack(kv));
    return out;
}

// Finitely supported Laurent polynomial in z_1..z_n.
template <class K>
struct LaurentPoly {
    int n = 0;
    std::vector<std::pair<std::vector<int>, K>> terms;  // exponent vector (any sign), coeff
};

// Substitute z_i = rho_i (1 + x_i) and expand to the requested order.
template <class K>
Series<K> laurent_expand(const LaurentPoly<K>& l, const std::vector<K>& rho, int order) {
    int n = l.n;
    if (int(rho.size()) != n) throw std::invalid_argument("laurent_expand: rho size mismatch");
    K one;
    if (!l.terms.empty()) one = l.terms[0].second.one_like();
    else if (!rho.empty()) one = rho[0].one_like();
    for (const auto& r : rho)
        if (r.is_zero()) throw std::domain_error("laurent_expand: rho not invertible");

    // (1 + x_i)^(+1) and its geometric inverse
    auto one_plus = [&](int i) {
        Series<K> s = Series<K>::constant(n, order, one);
        s += Series<K>::variable(i, n, order, one);
        return s;
    };
    auto one_plus_inv = [&](int i) {
        Series<K> s(n, order);
        K c = one;
        Mono xi = Mono::var(i, n);
        Mono m = Mono::one();
        for (int k = 0; k <= order; ++k) {
            s.add_term(m, c);
            m = m * xi;
            c = -c;
        }
        return s;
    };

    Series<K> result(n, order);
    for (const auto& [e, c] : l.terms) {
        K scalar = c;
        Series<K> t = Series<K>::constant(n, order, one);
        for (int i = 1; i <= n; ++i) {
            int ei = e[i - 1];
            K rpow = one;
            for (int k = 0; k < std::abs(ei); ++k) rpow = rpow * rho[i - 1];
            if (ei >= 0) {
                scalar = scalar * rpow;
                for (int k = 0; k < ei; ++k) t = t * one_plus(i);
            } else {
                scalar = scalar * rpow.inv();
                auto inv = one_plus_inv(i);
                for (int k = 0; k < -ei; ++k) t = t * inv;
            }
        }
        result += t.scaled(scalar);
    }
    return result;
}

}  // namespace sfd
