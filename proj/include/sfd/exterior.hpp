#pragma once

#include <bit>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "sfd/series.hpp"

namespace sfd {

// Index subsets I of {1..n} as bitmasks, bit i-1 for variable i.
using Subset = uint32_t;

inline int subset_size(Subset s) { return std::popcount(s); }

// graded-lex on subsets: by size, then by mask (lex on sorted index lists)
struct SubsetLess {
    bool operator()(Subset a, Subset b) const {
        int pa = std::popcount(a), pb = std::popcount(b);
        if (pa != pb) return pa < pb;
        return a < b;
    }
};

inline std::vector<int> subset_indices(Subset s) {
    std::vector<int> ix;
    for (int i = 0; s; ++i, s >>= 1)
        if (s & 1) ix.push_back(i + 1);
    return ix;
}

inline Subset subset_from_indices(const std::vector<int>& ix, int n) {
    Subset s = 0;
    for (int i : ix) {
        if (i < 1 || i > n) throw std::invalid_argument("subset: index out of range");
        if (s & (Subset(1) << (i - 1))) throw std::invalid_argument("subset: repeated index");
        s |= Subset(1) << (i - 1);
    }
    return s;
}

// number of pairs (i in a, j in b) with i > j
inline int inversions_between(Subset a, Subset b) {
    int inv = 0;
    while (a) {
        Subset low = a & (~a + 1);  // lowest set bit of a
        inv += std::popcount(b & (low - 1));
        a &= a - 1;
    }
    return inv;
}

inline std::vector<Subset> all_subsets(int n) {
    std::vector<Subset> out;
    for (Subset s = 0; s < (Subset(1) << n); ++s) out.push_back(s);
    std::sort(out.begin(), out.end(), [](Subset a, Subset b) { return SubsetLess{}(a, b); });
    return out;
}

inline std::string subset_str(Subset s) {
    if (!s) return "1";
    std::string out = "v";
    for (int i : subset_indices(s)) out += std::to_string(i);
    return out;
}

// Element of Lambda V with coefficients in C (a field K for E, or a
// truncated series ring for E_R). Sparse on the subset basis.
template <class C>
class Multivector {
public:
    using Coeffs = std::map<Subset, C, SubsetLess>;

    Multivector() : n_(0) {}
    explicit Multivector(int nvars) : n_(nvars) {}

    static Multivector basis(int nvars, Subset s, const C& coeff) {
        Multivector m(nvars);
        m.set(s, coeff);
        return m;
    }

    int nvars() const { return n_; }
    const Coeffs& coeffs() const { return t_; }
    bool is_zero() const { return t_.empty(); }

    C coeff(Subset s) const {
        auto it = t_.find(s);
        return it == t_.end() ? C() : it->second;
    }

    void set(Subset s, const C& c) {
        if (c.is_zero()) t_.erase(s);
        else t_[s] = c;
    }
    void add_term(Subset s, const C& c) {
        if (c.is_zero()) return;
        auto it = t_.find(s);
        if (it == t_.end()) { t_[s] = c; return; }
        it->second += c;
        if (it->second.is_zero()) t_.erase(it);
    }

    // max |I| over stored subsets; -1 for zero
    int filtration_level() const {
        int f = -1;
        for (const auto& [s, c] : t_) f = std::max(f, subset_size(s));
        return f;
    }

    // true if every stored subset has |I| congruent to par mod 2
    bool parity_homogeneous(int par) const {
        for (const auto& [s, c] : t_)
            if (subset_size(s) % 2 != par % 2) return false;
        return true;
    }

    // the part with |I| == d
    Multivector graded_part(int d) const {
        Multivector r(n_);
        for (const auto& [s, c] : t_)
            if (subset_size(s) == d) r.t_[s] = c;
        return r;
    }

    Multivector operator+(const Multivector& o) const {
        check(o);
        Multivector r = *this;
        for (const auto& [s, c] : o.t_) r.add_term(s, c);
        return r;
    }
    Multivector operator-(const Multivector& o) const {
        check(o);
        Multivector r = *this;
        for (const auto& [s, c] : o.t_) r.add_term(s, -c);
        return r;
    }
    Multivector operator-() const {
        Multivector r(n_);
        for (const auto& [s, c] : t_) r.t_[s] = -c;
        return r;
    }
    Multivector scaled(const C& c) const {
        Multivector r(n_);
        for (const auto& [s, v] : t_) r.add_term(s, v * c);
        return r;
    }
    Multivector& operator+=(const Multivector& o) {
        check(o);
        for (const auto& [s, c] : o.t_) add_term(s, c);
        return *this;
    }
    Multivector& operator-=(const Multivector& o) {
        check(o);
        for (const auto& [s, c] : o.t_) add_term(s, -c);
        return *this;
    }

    bool operator==(const Multivector& o) const { return n_ == o.n_ && t_ == o.t_; }
    bool operator!=(const Multivector& o) const { return !(*this == o); }

    std::string str() const {
        if (t_.empty()) return "0";
        std::string out;
        for (const auto& [s, c] : t_) {
            if (!out.empty()) out += " + ";
            out += "(" + c.str() + ")*" + subset_str(s);
        }
        return out;
    }

private:
    void check(const Multivector& o) const {
        if (n_ != o.n_) throw std::invalid_argument("Multivector: nvars mismatch");
    }

    int n_;
    Coeffs t_;
};

// v_I ^ v_J with the inversion-count sign; zero on overlap
template <class C>
Multivector<C> wedge(const Multivector<C>& a, const Multivector<C>& b) {
    if (a.nvars() != b.nvars()) throw std::invalid_argument("wedge: nvars mismatch");
    Multivector<C> r(a.nvars());
    for (const auto& [sa, ca] : a.coeffs()) {
        for (const auto& [sb, cb] : b.coeffs()) {
            if (sa & sb) continue;
            C c = ca * cb;
            if (inversions_between(sa, sb) % 2) c = -c;
            r.add_term(sa | sb, c);
        }
    }
    return r;
}

// Covector with series coefficients: c = sum c_i v_i^dual.
template <class K>
struct Covector {
    std::vector<Series<K>> comp;  // c_i, one per variable
    int nvars() const { return int(comp.size()); }
};

// Contraction v_i^dual -| v_I, an odd derivation: the sign counts the
// generators of I passed before reaching i.
template <class C>
Multivector<C> contract_var(int i, const Multivector<C>& a) {
    Multivector<C> r(a.nvars());
    Subset bit = Subset(1) << (i - 1);
    for (const auto& [s, c] : a.coeffs()) {
        if (!(s & bit)) continue;
        int before = std::popcount(s & (bit - 1));
        r.add_term(s & ~bit, (before % 2) ? -c : c);
    }
    return r;
}

template <class K>
Multivector<Series<K>> contract(const Covector<K>& c, const Multivector<Series<K>>& a) {
    if (c.nvars() != a.nvars()) throw std::invalid_argument("contract: nvars mismatch");
    Multivector<Series<K>> r(a.nvars());
    for (int i = 1; i <= a.nvars(); ++i) {
        if (c.comp[i - 1].is_zero()) continue;
        r += contract_var(i, a).scaled(c.comp[i - 1]);
    }
    return r;
}

template <class K>
using MV = Multivector<K>;             // E-valued, scalar coefficients
template <class K>
using MVR = Multivector<Series<K>>;    // E_R-valued, series coefficients

// canonical element v = sum x_i v_i of m (x) V
template <class K>
MVR<K> canonical_v(int n, int order, const K& one) {
    MVR<K> v(n);
    for (int i = 1; i <= n; ++i)
        v.set(Subset(1) << (i - 1), Series<K>::variable(i, n, order, one));
    return v;
}

template <class K>
MV<K> reduce_mod_m(const MVR<K>& a) {
    MV<K> r(a.nvars());
    for (const auto& [s, c] : a.coeffs()) r.set(s, c.coeff(Mono::one()));
    return r;
}

template <class K>
MVR<K> scalars_to_series(const MV<K>& a, int n, int order) {
    MVR<K> r(n);
    for (const auto& [s, c] : a.coeffs())
        r.set(s, Series<K>::constant(n, order, c));
    return r;
}

}  // namespace sfd
