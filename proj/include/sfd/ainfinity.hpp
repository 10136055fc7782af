#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "sfd/exterior.hpp"

namespace sfd {

// Tuples of basis subsets, leftmost input (a_k) first, packed 6 bits each.
using Tuple = std::vector<Subset>;

inline uint64_t pack_tuple(const Tuple& t) {
    uint64_t key = 0;
    for (size_t j = 0; j < t.size(); ++j) key |= uint64_t(t[j] & 0x3f) << (6 * j);
    return key;
}

inline std::string tuple_str(const Tuple& t) {
    std::string s = "(";
    for (size_t i = 0; i < t.size(); ++i) {
        if (i) s += ",";
        s += subset_str(t[i]);
    }
    return s + ")";
}

// sum over last i entries of (|a| - 1); the Koszul sign exponent of Seidel's
// A-infinity conventions
inline int maltese(const Tuple& t, int i) {
    int m = 0;
    int k = int(t.size());
    for (int r = 1; r <= i; ++r) m += subset_size(t[k - r]) + 1;
    return m & 1;
}

struct CheckReport {
    bool ok = true;
    int certified_arity = 0;
    int certified_order = 0;
    std::vector<std::string> failures;

    void fail(const std::string& msg) {
        ok = false;
        if (failures.size() < 32) failures.push_back(msg);
    }
    std::string summary() const {
        if (ok) return "pass";
        std::string s = "fail";
        for (const auto& f : failures) s += "\n  " + f;
        return s;
    }
};

// Superfiltered A-infinity deformation of the exterior algebra: a finite
// table of operations mu^k on basis tuples, 2 <= k <= arity_cap. Absent
// tuples are zero. Values are E-valued with ground-field coefficients.
template <class K>
class Deformation {
public:
    Deformation() = default;
    Deformation(int nvars, int arity_cap, int order, const K& one)
        : n_(nvars), cap_(arity_cap), order_(order), one_(one),
          ops_(size_t(std::max(0, arity_cap)) + 1) {}

    int nvars() const { return n_; }
    int arity_cap() const { return cap_; }
    int order() const { return order_; }
    const K& one() const { return one_; }

    const std::map<uint64_t, MV<K>>& table(int k) const { return ops_[k]; }

    const MV<K>* mu(int k, const Tuple& t) const {
        if (k < 2 || k > cap_) return nullptr;
        auto it = ops_[k].find(pack_tuple(t));
        return it == ops_[k].end() ? nullptr : &it->second;
    }

    void set_mu(int k, const Tuple& t, const MV<K>& value) {
        if (k < 2 || k > cap_) throw std::invalid_argument("set_mu: arity out of range");
        if (int(t.size()) != k) throw std::invalid_argument("set_mu: tuple arity mismatch");
        if (value.is_zero()) ops_[k].erase(pack_tuple(t));
        else ops_[k][pack_tuple(t)] = value;
    }

    // Table entries are exact scalars, so the series order is a choice of
    // working precision; raising it is sound up to the arity cap.
    Deformation with_order(int new_order) const {
        Deformation a = *this;
        a.order_ = new_order;
        return a;
    }

    // mu^2 = signed wedge, all higher operations vanish
    static Deformation formal(int nvars, int arity_cap, int order, const K& one) {
        Deformation a(nvars, arity_cap, order, one);
        for (Subset s2 : all_subsets(nvars)) {
            for (Subset s1 : all_subsets(nvars)) {
                auto w = wedge(MV<K>::basis(nvars, s2, one), MV<K>::basis(nvars, s1, one));
                if (subset_size(s1) % 2) w = -w;
                a.set_mu(2, {s2, s1}, w);
            }
        }
        return a;
    }

    // n = 1: the disc potential is the full generating function of the
    // operations, so any potential in m^2 determines a deformation
    static Deformation from_potential_n1(const Series<K>& p, int arity_cap, const K& one) {
        if (p.nvars() != 1) throw std::invalid_argument("from_potential_n1: nvars != 1");
        if (p.valuation() < 2) throw std::invalid_argument("from_potential_n1: potential not in m^2");
        Deformation a = formal(1, arity_cap, p.order(), one);
        for (int k = 2; k <= arity_cap; ++k) {
            K c = p.coeff(Mono::from_exponents({k}));
            if (c.is_zero()) continue;
            Tuple t(k, Subset(1));
            MV<K> val = a.mu(k, t) ? *a.mu(k, t) : MV<K>(1);
            val.add_term(0, c);
            a.set_mu(k, t, val);
        }
        return a;
    }

private:
    int n_ = 0;
    int cap_ = 0;
    int order_ = 0;
    K one_;
    std::vector<std::map<uint64_t, MV<K>>> ops_;
};

// ---- multilinear evaluation ------------------------------------------------

// E-valued evaluation on E-valued inputs (scalar multilinearity).
template <class K>
MV<K> eval_mu(const Deformation<K>& a, int k, const std::vector<MV<K>>& in) {
    MV<K> out(a.nvars());
    if (k < 2 || k > a.arity_cap() || int(in.size()) != k) return out;
    Tuple t(k);
    std::function<void(int, const K&)> rec = [&](int pos, const K& coeff) {
        if (pos == k) {
            const MV<K>* v = a.mu(k, t);
            if (v) out += v->scaled(coeff);
            return;
        }
        for (const auto& [s, c] : in[pos].coeffs()) {
            t[pos] = s;
            rec(pos + 1, coeff * c);
        }
    };
    rec(0, a.one());
    return out;
}

// R-multilinear evaluation on E_R-valued inputs.
template <class K>
MVR<K> eval_mu_R(const Deformation<K>& a, int k, const std::vector<const MVR<K>*>& in,
                 int order) {
    MVR<K> out(a.nvars());
    if (k < 2 || k > a.arity_cap() || int(in.size()) != k) return out;
    Tuple t(k);
    Series<K> unit = Series<K>::constant(a.nvars(), order, a.one());
    std::function<void(int, const Series<K>&)> rec = [&](int pos, const Series<K>& coeff) {
        if (coeff.is_zero()) return;
        if (pos == k) {
            const MV<K>* v = a.mu(k, t);
            if (!v) return;
            for (const auto& [s, c] : v->coeffs()) out.add_term(s, coeff.scaled(c));
            return;
        }
        for (const auto& [s, c] : in[pos]->coeffs()) {
            t[pos] = s;
            rec(pos + 1, coeff * c);
        }
    };
    rec(0, unit);
    return out;
}

// sum over l >= 0 of mu^{k+l}(a_k, ..., a_1, v, ..., v). Insertions beyond
// the arity cap would contribute from x-degree (cap - k + 1) on, so the
// result is trusted one order below that and clamped accordingly.
template <class K>
MVR<K> mu_0v(const Deformation<K>& a, const std::vector<const MVR<K>*>& in, int order) {
    int k = int(in.size());
    if (k + 0 > a.arity_cap())
        throw std::invalid_argument("mu_0v: arity cap exceeded");
    int trust = std::min(order, a.arity_cap() - k);
    MVR<K> out(a.nvars());
    MVR<K> v = canonical_v<K>(a.nvars(), order, a.one());
    std::vector<const MVR<K>*> args = in;
    for (int l = 0; k + l <= a.arity_cap(); ++l) {
        if (l > 0) args.push_back(&v);
        if (k + l >= 2) out += eval_mu_R(a, k + l, args, order);
    }
    MVR<K> clamped(a.nvars());
    for (const auto& [s, coeff] : out.coeffs()) clamped.set(s, coeff.truncated(trust));
    return clamped;
}

// sum over insertions of v in all gaps (before, between, after all inputs)
template <class K>
MVR<K> mu_v(const Deformation<K>& a, const std::vector<const MVR<K>*>& in, int order) {
    int k = int(in.size());
    if (k > a.arity_cap()) throw std::invalid_argument("mu_v: arity cap exceeded");
    int trust = std::min(order, a.arity_cap() - k);
    MVR<K> out(a.nvars());
    MVR<K> v = canonical_v<K>(a.nvars(), order, a.one());
    // distribute l insertions over k+1 gaps
    for (int l = 0; k + l <= a.arity_cap(); ++l) {
        if (k + l < 2) continue;
        std::vector<int> gaps(k + 1, 0);
        std::function<void(int, int)> rec = [&](int gap, int left) {
            if (gap == k) {
                gaps[k] = left;
                std::vector<const MVR<K>*> args;
                for (int g = 0; g <= k; ++g) {
                    for (int c = 0; c < gaps[g] && g == 0; ++c) args.push_back(&v);
                    if (g > 0) {
                        args.push_back(in[g - 1]);
                        for (int c = 0; c < gaps[g]; ++c) args.push_back(&v);
                    }
                }
                out += eval_mu_R(a, k + l, args, order);
                return;
            }
            for (int take = 0; take <= left; ++take) {
                gaps[gap] = take;
                rec(gap + 1, left - take);
            }
        };
        rec(0, l);
    }
    MVR<K> clamped(a.nvars());
    for (const auto& [s, coeff] : out.coeffs()) clamped.set(s, coeff.truncated(trust));
    return clamped;
}

// ---- structural checks -----------------------------------------------------

template <class K>
void for_each_tuple(int n, int k, const std::function<void(const Tuple&)>& fn) {
    Tuple t(k);
    auto subsets = all_subsets(n);
    std::function<void(int)> rec = [&](int pos) {
        if (pos == k) { fn(t); return; }
        for (Subset s : subsets) {
            t[pos] = s;
            rec(pos + 1);
        }
    };
    rec(0);
}

template <class K>
CheckReport check_superfiltered_unital(const Deformation<K>& a) {
    CheckReport rep;
    rep.certified_arity = a.arity_cap();
    rep.certified_order = a.order();
    int n = a.nvars();
    K one = a.one();
    // tabulated entries: parity, filtration, associated-graded condition
    for (int k = 2; k <= a.arity_cap(); ++k) {
        for (const auto& [key, val] : a.table(k)) {
            Tuple t(k);
            for (int j = 0; j < k; ++j) t[j] = Subset((key >> (6 * j)) & 0x3f);
            int deg = 0, filt = 0;
            for (Subset s : t) { deg += subset_size(s); filt += subset_size(s); }
            int want_parity = (deg + 2 - k) % 2;
            if (!val.parity_homogeneous((want_parity + 2) % 2))
                rep.fail("parity violation at mu^" + std::to_string(k) + tuple_str(t));
            if (val.filtration_level() > filt + 2 - k)
                rep.fail("filtration violation at mu^" + std::to_string(k) + tuple_str(t));
            if (k >= 3 && !val.graded_part(filt + 2 - k).is_zero())
                rep.fail("gr mu^" + std::to_string(k) + " nonzero at " + tuple_str(t));
        }
    }
    // gr mu^2 = signed wedge, checked on all pairs
    for (Subset s2 : all_subsets(n)) {
        for (Subset s1 : all_subsets(n)) {
            auto gr = wedge(MV<K>::basis(n, s2, one), MV<K>::basis(n, s1, one));
            if (subset_size(s1) % 2) gr = -gr;
            const MV<K>* v = a.mu(2, {s2, s1});
            MV<K> got = v ? v->graded_part(subset_size(s1) + subset_size(s2)) : MV<K>(n);
            if (got != gr)
                rep.fail("gr mu^2 != signed wedge at " + tuple_str({s2, s1}));
        }
    }
    // strict unitality
    for (Subset s : all_subsets(n)) {
        const MV<K>* r = a.mu(2, {s, 0});
        MV<K> right = r ? *r : MV<K>(n);
        if (right != MV<K>::basis(n, s, one))
            rep.fail("mu^2(a,1) != a at " + subset_str(s));
        const MV<K>* l = a.mu(2, {Subset(0), s});
        MV<K> left = l ? *l : MV<K>(n);
        MV<K> want = MV<K>::basis(n, s, subset_size(s) % 2 ? -one : one);
        if (left != want)
            rep.fail("mu^2(1,a) != (-1)^{|a|}a at " + subset_str(s));
    }
    for (int k = 3; k <= a.arity_cap(); ++k) {
        for (const auto& [key, val] : a.table(k)) {
            Tuple t(k);
            bool has_unit = false;
            for (int j = 0; j < k; ++j) {
                t[j] = Subset((key >> (6 * j)) & 0x3f);
                if (t[j] == 0) has_unit = true;
            }
            if (has_unit && !val.is_zero())
                rep.fail("mu^" + std::to_string(k) + " not strictly unital at " + tuple_str(t));
        }
    }
    return rep;
}

// the A-infinity relations (mu^0 = mu^1 = 0) on all basis tuples of arity <= kmax
template <class K>
CheckReport check_ainfinity(const Deformation<K>& a, int kmax) {
    CheckReport rep;
    rep.certified_arity = std::min(kmax, a.arity_cap());
    rep.certified_order = a.order();
    int n = a.nvars();
    K one = a.one();
    for (int m = 2; m <= std::min(kmax, a.arity_cap()); ++m) {
        for_each_tuple<K>(n, m, [&](const Tuple& t) {
            if (!rep.ok && rep.failures.size() >= 32) return;
            MV<K> total(n);
            for (int j = 2; j <= m - 1; ++j) {
                for (int i = 0; i + j <= m; ++i) {
                    // inner block a_{i+j}..a_{i+1} = t[m-i-j .. m-i-1]
                    Tuple inner(t.begin() + (m - i - j), t.begin() + (m - i));
                    const MV<K>* innerv = a.mu(j, inner);
                    if (!innerv || innerv->is_zero()) continue;
                    std::vector<MV<K>> outer_in;
                    for (int p = 0; p < m - i - j; ++p)
                        outer_in.push_back(MV<K>::basis(n, t[p], one));
                    outer_in.push_back(*innerv);
                    for (int p = m - i; p < m; ++p)
                        outer_in.push_back(MV<K>::basis(n, t[p], one));
                    MV<K> term = eval_mu(a, m - j + 1, outer_in);
                    if (maltese(t, i)) term = -term;
                    total += term;
                }
            }
            if (!total.is_zero())
                rep.fail("A-infinity relation fails at arity " + std::to_string(m) +
                         " tuple " + tuple_str(t) + " -> " + total.str());
        });
    }
    return rep;
}

// P = sum_k mu^k(v, ..., v); scalar-valued by grading, lands in m^2
template <class K>
Series<K> disc_potential(const Deformation<K>& a) {
    int n = a.nvars(), order = a.order();
    if (a.arity_cap() < order)
        throw std::invalid_argument("disc_potential: arity cap below series order");
    MVR<K> v = canonical_v<K>(n, order, a.one());
    MVR<K> total(n);
    for (int k = 2; k <= a.arity_cap(); ++k) {
        std::vector<const MVR<K>*> in(k, &v);
        total += eval_mu_R(a, k, in, order);
    }
    for (const auto& [s, c] : total.coeffs())
        if (s != 0)
            throw std::domain_error("disc_potential: non-scalar output (grading violated)");
    Series<K> p = total.coeff(0);
    if (p.is_zero()) return Series<K>::zero(n, order);
    if (p.valuation() < 2)
        throw std::domain_error("disc_potential: potential not in m^2");
    return p;
}

// The structure equations of the v-inserted operations: applying the
// A-infinity relations to (a_k, ..., a_1, v, ..., v) collapses to
//   sum_{i>=1,j} (-1)^maltese mu_0v(..., mu^j(...), ...)
//     + sum_{j>=1} mu_0v(a_k, ..., a_{j+1}, mu_0v^j(a_j, ..., a_1))
//   = -P a_1 for k = 1 and 0 for k > 1.
template <class K>
CheckReport check_mu0v_relations(const Deformation<K>& a, int kmax, int order) {
    CheckReport rep;
    rep.certified_arity = kmax;
    rep.certified_order = order;
    int n = a.nvars();
    K one = a.one();
    Series<K> p = disc_potential(a);
    for (int k = 1; k <= kmax; ++k) {
        for_each_tuple<K>(n, k, [&](const Tuple& t) {
            if (!rep.ok && rep.failures.size() >= 8) return;
            MVR<K> total(n);
            // inner plain mu^j away from the insertion tail (i >= 1)
            for (int j = 2; j <= k - 1; ++j) {
                for (int i = 1; i + j <= k; ++i) {
                    Tuple inner(t.begin() + (k - i - j), t.begin() + (k - i));
                    const MV<K>* innerv = a.mu(j, inner);
                    if (!innerv || innerv->is_zero()) continue;
                    MVR<K> innerr = scalars_to_series(*innerv, n, order);
                    std::vector<MVR<K>> hold;
                    std::vector<const MVR<K>*> args;
                    for (int pq = 0; pq < k - i - j; ++pq)
                        hold.push_back(scalars_to_series(MV<K>::basis(n, t[pq], one), n, order));
                    hold.push_back(innerr);
                    for (int pq = k - i; pq < k; ++pq)
                        hold.push_back(scalars_to_series(MV<K>::basis(n, t[pq], one), n, order));
                    for (auto& h : hold) args.push_back(&h);
                    MVR<K> term = mu_0v(a, args, order);
                    if (maltese(t, i)) term = -term;
                    total += term;
                }
            }
            // inner mu_0v absorbing the tail (i = 0, sign +1)
            for (int j = 1; j <= k; ++j) {
                std::vector<MVR<K>> hold;
                std::vector<const MVR<K>*> inner_args;
                for (int pq = k - j; pq < k; ++pq)
                    hold.push_back(scalars_to_series(MV<K>::basis(n, t[pq], one), n, order));
                for (auto& h : hold) inner_args.push_back(&h);
                MVR<K> innerv = mu_0v(a, inner_args, order);
                if (innerv.is_zero()) continue;
                std::vector<MVR<K>> hold2;
                std::vector<const MVR<K>*> outer_args;
                for (int pq = 0; pq < k - j; ++pq)
                    hold2.push_back(scalars_to_series(MV<K>::basis(n, t[pq], one), n, order));
                hold2.push_back(innerv);
                for (auto& h : hold2) outer_args.push_back(&h);
                MVR<K> term = mu_0v(a, outer_args, order);
                total += term;
            }
            MVR<K> rhs(n);
            if (k == 1)
                rhs.add_term(t[0], -p);
            if (total != rhs)
                rep.fail("mu_0v relation fails at " + tuple_str(t));
        });
    }
    return rep;
}

// ---- morphisms ---------------------------------------------------------------

// Strictly unital superfiltered morphism between deformation tables.
// Components Phi^k are tabulated on basis tuples like the operations;
// Phi^1 entries are stored for every basis element.
template <class K>
class AMorphism {
public:
    AMorphism() = default;
    AMorphism(int nvars, int arity_cap, int order, const K& one)
        : n_(nvars), cap_(arity_cap), order_(order), one_(one),
          comp_(size_t(std::max(0, arity_cap)) + 1) {}

    int nvars() const { return n_; }
    int arity_cap() const { return cap_; }
    int order() const { return order_; }
    const K& one() const { return one_; }
    const std::map<uint64_t, MV<K>>& table(int k) const { return comp_[k]; }

    const MV<K>* phi(int k, const Tuple& t) const {
        if (k < 1 || k > cap_) return nullptr;
        auto it = comp_[k].find(pack_tuple(t));
        return it == comp_[k].end() ? nullptr : &it->second;
    }
    void set_phi(int k, const Tuple& t, const MV<K>& value) {
        if (k < 1 || k > cap_) throw std::invalid_argument("set_phi: arity out of range");
        if (value.is_zero()) comp_[k].erase(pack_tuple(t));
        else comp_[k][pack_tuple(t)] = value;
    }

    static AMorphism identity(int nvars, int arity_cap, int order, const K& one) {
        AMorphism m(nvars, arity_cap, order, one);
        for (Subset s : all_subsets(nvars))
            m.set_phi(1, {s}, MV<K>::basis(nvars, s, one));
        return m;
    }

    MV<K> eval(int k, const std::vector<MV<K>>& in) const {
        MV<K> out(n_);
        if (k < 1 || k > cap_ || int(in.size()) != k) return out;
        Tuple t(k);
        std::function<void(int, const K&)> rec = [&](int pos, const K& coeff) {
            if (pos == k) {
                const MV<K>* v = phi(k, t);
                if (v) out += v->scaled(coeff);
                return;
            }
            for (const auto& [s, c] : in[pos].coeffs()) {
                t[pos] = s;
                rec(pos + 1, coeff * c);
            }
        };
        rec(0, one_);
        return out;
    }

    MVR<K> eval_R(int k, const std::vector<const MVR<K>*>& in, int order) const {
        MVR<K> out(n_);
        if (k < 1 || k > cap_ || int(in.size()) != k) return out;
        Tuple t(k);
        std::function<void(int, const Series<K>&)> rec = [&](int pos, const Series<K>& coeff) {
            if (coeff.is_zero()) return;
            if (pos == k) {
                const MV<K>* v = phi(k, t);
                if (!v) return;
                for (const auto& [s, c] : v->coeffs()) out.add_term(s, coeff.scaled(c));
                return;
            }
            for (const auto& [s, c] : in[pos]->coeffs()) {
                t[pos] = s;
                rec(pos + 1, coeff * c);
            }
        };
        rec(0, Series<K>::constant(n_, order, one_));
        return out;
    }

private:
    int n_ = 0, cap_ = 0, order_ = 0;
    K one_;
    std::vector<std::map<uint64_t, MV<K>>> comp_;
};

// f_Phi = sum_k Phi^k(v,...,v); outputs must be concentrated in grade 1
template <class K>
FormalDiffeo<K> morphism_change_of_vars(const AMorphism<K>& phi) {
    int n = phi.nvars(), order = phi.order();
    MVR<K> v = canonical_v<K>(n, order, phi.one());
    MVR<K> total(n);
    for (int k = 1; k <= phi.arity_cap(); ++k) {
        std::vector<const MVR<K>*> in(k, &v);
        total += phi.eval_R(k, in, order);
    }
    FormalDiffeo<K> f;
    for (int i = 1; i <= n; ++i) f.comp.push_back(Series<K>::zero(n, order));
    for (const auto& [s, c] : total.coeffs()) {
        if (subset_size(s) != 1)
            throw std::domain_error("morphism_change_of_vars: output not in grade 1");
        f.comp[subset_indices(s)[0] - 1] = c;
    }
    return f;
}

// composition (Psi . Phi)^k = sum over consecutive partitions
template <class K>
AMorphism<K> compose_morphisms(const AMorphism<K>& psi, const AMorphism<K>& phi) {
    if (psi.nvars() != phi.nvars())
        throw std::invalid_argument("compose_morphisms: nvars mismatch");
    int n = phi.nvars();
    int cap = std::min(psi.arity_cap(), phi.arity_cap());
    AMorphism<K> out(n, cap, std::min(psi.order(), phi.order()), phi.one());
    for (int k = 1; k <= cap; ++k) {
        for_each_tuple<K>(n, k, [&](const Tuple& t) {
            MV<K> total(n);
            // partitions of k into r parts s_r..s_1 (s_r leftmost)
            std::vector<int> parts;
            std::function<void(int)> rec = [&](int left) {
                if (left == 0) {
                    int r = int(parts.size());
                    std::vector<MV<K>> blocks;
                    int pos = 0;
                    for (int b = 0; b < r; ++b) {
                        int sb = parts[b];
                        Tuple sub(t.begin() + pos, t.begin() + pos + sb);
                        std::vector<MV<K>> in;
                        for (Subset s : sub) in.push_back(MV<K>::basis(n, s, phi.one()));
                        blocks.push_back(phi.eval(sb, in));
                        pos += sb;
                    }
                    total += psi.eval(r, blocks);
                    return;
                }
                for (int s = 1; s <= left; ++s) {
                    parts.push_back(s);
                    rec(left - s);
                    parts.pop_back();
                }
            };
            rec(k);
            out.set_phi(k, t, total);
        });
    }
    return out;
}

// morphism equations between table deformations, plus unitality
template <class K>
CheckReport check_morphism(const AMorphism<K>& phi, const Deformation<K>& src,
                           const Deformation<K>& tgt, int kmax) {
    CheckReport rep;
    rep.certified_arity = std::min(kmax, phi.arity_cap());
    rep.certified_order = phi.order();
    int n = src.nvars();
    K one = src.one();
    // strict unitality: Phi^1(1) = 1, higher components vanish on unit inputs
    const MV<K>* u = phi.phi(1, {Subset(0)});
    if (!u || *u != MV<K>::basis(n, 0, one)) rep.fail("Phi^1(1) != 1");
    for (int k = 1; k <= phi.arity_cap(); ++k) {
        for (const auto& [key, val] : phi.table(k)) {
            Tuple t(k);
            bool has_unit = false;
            int deg = 0;
            for (int j = 0; j < k; ++j) {
                t[j] = Subset((key >> (6 * j)) & 0x3f);
                if (!t[j]) has_unit = true;
                deg += subset_size(t[j]);
            }
            if (k >= 2 && has_unit && !val.is_zero())
                rep.fail("Phi^" + std::to_string(k) + " not strictly unital at " + tuple_str(t));
            if (!val.parity_homogeneous(((deg + 1 - k) % 2 + 2) % 2))
                rep.fail("Phi^" + std::to_string(k) + " parity violation at " + tuple_str(t));
            if (val.filtration_level() > deg - (k - 1))
                rep.fail("Phi^" + std::to_string(k) + " filtration violation at " + tuple_str(t));
        }
    }
    for (int m = 1; m <= rep.certified_arity; ++m) {
        for_each_tuple<K>(n, m, [&](const Tuple& t) {
            if (!rep.ok && rep.failures.size() >= 32) return;
            MV<K> lhs(n);
            for (int j = 2; j <= m; ++j) {
                for (int i = 0; i + j <= m; ++i) {
                    Tuple inner(t.begin() + (m - i - j), t.begin() + (m - i));
                    const MV<K>* innerv = src.mu(j, inner);
                    if (!innerv || innerv->is_zero()) continue;
                    std::vector<MV<K>> outer_in;
                    for (int p = 0; p < m - i - j; ++p)
                        outer_in.push_back(MV<K>::basis(n, t[p], one));
                    outer_in.push_back(*innerv);
                    for (int p = m - i; p < m; ++p)
                        outer_in.push_back(MV<K>::basis(n, t[p], one));
                    MV<K> term = phi.eval(m - j + 1, outer_in);
                    if (maltese(t, i)) term = -term;
                    lhs += term;
                }
            }
            MV<K> rhs(n);
            std::vector<int> parts;
            std::function<void(int)> rec = [&](int left) {
                if (left == 0) {
                    int r = int(parts.size());
                    if (r < 2 || r > tgt.arity_cap()) return;  // mu^1 = 0 on targets
                    std::vector<MV<K>> blocks;
                    int pos = 0;
                    for (int b = 0; b < r; ++b) {
                        Tuple sub(t.begin() + pos, t.begin() + pos + parts[b]);
                        std::vector<MV<K>> in;
                        for (Subset s : sub) in.push_back(MV<K>::basis(n, s, one));
                        blocks.push_back(phi.eval(parts[b], in));
                        pos += parts[b];
                    }
                    rhs += eval_mu(tgt, r, blocks);
                    return;
                }
                for (int s = 1; s <= left; ++s) {
                    parts.push_back(s);
                    rec(left - s);
                    parts.pop_back();
                }
            };
            rec(m);
            if (lhs != rhs)
                rep.fail("morphism equation fails at arity " + std::to_string(m) +
                         " tuple " + tuple_str(t));
        });
    }
    return rep;
}

// gr Phi^k = Id^k for k <= d, Phi^1 invertible, plus the morphism equations
template <class K>
CheckReport check_d_equivalence(const AMorphism<K>& phi, const Deformation<K>& src,
                                const Deformation<K>& tgt, int d) {
    CheckReport rep = check_morphism(phi, src, tgt, phi.arity_cap());
    int n = phi.nvars();
    K one = phi.one();
    // Phi^1 invertible as an R_0-linear map on E
    {
        auto subsets = all_subsets(n);
        int dim = int(subsets.size());
        std::map<Subset, int, SubsetLess> col;
        for (int i = 0; i < dim; ++i) col[subsets[i]] = i;
        std::vector<std::vector<K>> mat(dim, std::vector<K>(dim, one.zero_like()));
        for (int j = 0; j < dim; ++j) {
            const MV<K>* v = phi.phi(1, {subsets[j]});
            if (!v) continue;
            for (const auto& [s, c] : v->coeffs()) mat[col[s]][j] = c;
        }
        if (rank_of(mat, dim) < dim) rep.fail("Phi^1 not invertible");
    }
    // leading-term conditions
    for (int k = 1; k <= std::min(d, phi.arity_cap()); ++k) {
        for_each_tuple<K>(n, k, [&](const Tuple& t) {
            int filt = 0;
            for (Subset s : t) filt += subset_size(s);
            int top = filt - (k - 1);
            const MV<K>* v = phi.phi(k, t);
            MV<K> lead = v ? v->graded_part(top) : MV<K>(n);
            MV<K> want(n);
            if (k == 1) want = MV<K>::basis(n, t[0], one);
            if (lead != want)
                rep.fail("gr Phi^" + std::to_string(k) + " != Id at " + tuple_str(t));
            if (v && v->filtration_level() > top)
                rep.fail("Phi^" + std::to_string(k) + " not superfiltered at " + tuple_str(t));
        });
    }
    return rep;
}

// Two-sided inverse of an equivalence with invertible linear component,
// built order by order from the composition identities and certified by
// the caller through composition checks.
template <class K>
AMorphism<K> inverse_morphism(const AMorphism<K>& phi) {
    int n = phi.nvars();
    K one = phi.one();
    AMorphism<K> inv(n, phi.arity_cap(), phi.order(), one);
    auto subsets = all_subsets(n);
    int dim = int(subsets.size());
    std::map<Subset, int, SubsetLess> col;
    for (int i = 0; i < dim; ++i) col[subsets[i]] = i;
    // invert Phi^1
    std::vector<std::vector<K>> aug(dim, std::vector<K>(2 * dim, one.zero_like()));
    for (int j = 0; j < dim; ++j) {
        const MV<K>* v = phi.phi(1, {subsets[j]});
        if (v)
            for (const auto& [s, c] : v->coeffs()) aug[col[s]][j] = c;
        aug[j][dim + j] = one;
    }
    auto r = rref(aug, dim);
    if (r.rank < dim) throw std::domain_error("inverse_morphism: Phi^1 not invertible");
    for (int j = 0; j < dim; ++j) {
        MV<K> img(n);
        for (int i = 0; i < dim; ++i) img.add_term(subsets[i], r.m[i][dim + j]);
        inv.set_phi(1, {subsets[j]}, img);
    }
    // higher components: (inv . phi)^k = 0 for k >= 2 determines inv^k on
    // the image tuples of phi^1; push through phi^1 inverse. Inverses of
    // strictly unital morphisms are strictly unital, so unit tuples stay zero.
    for (int k = 2; k <= phi.arity_cap(); ++k) {
        for_each_tuple<K>(n, k, [&](const Tuple& t) {
            for (Subset s : t)
                if (!s) return;
            // evaluate all partition terms of (inv . phi)^k except the all-ones one,
            // with inputs t mapped through inv^1 coordinates:
            // unknown term is inv^k(phi^1 b_k, ..., phi^1 b_1) where b = inv^1(t)
            std::vector<MV<K>> b;
            for (Subset s : t) {
                std::vector<MV<K>> in = {MV<K>::basis(n, s, one)};
                b.push_back(inv.eval(1, in));
            }
            MV<K> rest(n);
            std::vector<int> parts;
            std::function<void(int)> rec = [&](int left) {
                if (left == 0) {
                    int rr = int(parts.size());
                    if (rr == k) return;  // the unknown all-ones partition
                    std::vector<MV<K>> blocks;
                    // blocks of phi evaluated on b-tuples
                    // expand multilinearly over the b's
                    std::function<void(int, int, std::vector<MV<K>>&, const K&)> expand =
                        [&](int bi, int pos, std::vector<MV<K>>& acc, const K& coeff) {
                            if (bi == rr) {
                                rest += inv.eval(rr, acc).scaled(coeff);
                                return;
                            }
                            (void)pos;
                            std::vector<MV<K>> in;
                            int start = 0;
                            for (int q = 0; q < bi; ++q) start += parts[q];
                            for (int q = 0; q < parts[bi]; ++q) in.push_back(b[start + q]);
                            acc.push_back(phi.eval(parts[bi], in));
                            expand(bi + 1, pos, acc, coeff);
                            acc.pop_back();
                        };
                    std::vector<MV<K>> acc;
                    expand(0, 0, acc, one);
                    return;
                }
                for (int s = 1; s <= left; ++s) {
                    parts.push_back(s);
                    rec(left - s);
                    parts.pop_back();
                }
            };
            rec(k);
            if (!rest.is_zero()) inv.set_phi(k, t, -rest);
        });
    }
    return inv;
}

// ---- pushforward ---------------------------------------------------------

// The formal-diffeomorphism data Delta of a change of variables f: the
// linear part acts through the induced exterior algebra automorphism, the
// degree-k parts act through grade-1 projections. The multilinear lift of
// a degree-k monomial takes the value on its sorted tuple only.
template <class K>
AMorphism<K> diffeo_to_delta(const FormalDiffeo<K>& f, int arity_cap, const K& one) {
    f.validate();
    int n = f.nvars(), order = f.order();
    AMorphism<K> delta(n, arity_cap, order, one);
    // Delta^1: exterior extension of the linear part
    auto a = f.linear_part(one);
    for (Subset s : all_subsets(n)) {
        MV<K> img = MV<K>::basis(n, 0, one);
        for (int i : subset_indices(s)) {
            MV<K> row(n);
            for (int j = 1; j <= n; ++j) row.add_term(Subset(1) << (j - 1), a[j - 1][i - 1]);
            img = wedge(img, row);
        }
        delta.set_phi(1, {s}, img);
    }
    // Delta^k for k >= 2: value c * v_i on the sorted tuple of each degree-k
    // monomial of f_i, zero elsewhere
    for (int k = 2; k <= arity_cap; ++k) {
        std::map<uint64_t, MV<K>> vals;
        for (int i = 1; i <= n; ++i) {
            for (const auto& [m, c] : f.comp[i - 1].terms()) {
                if (m.degree() != k) continue;
                Tuple t;
                for (int var = 1; var <= n; ++var)
                    for (int e = 0; e < m.exp(var, n); ++e)
                        t.push_back(Subset(1) << (var - 1));
                // t is sorted ascending by variable; tuples are (a_k,...,a_1)
                MV<K> val = MV<K>::basis(n, Subset(1) << (i - 1), c);
                auto key = pack_tuple(t);
                auto it = vals.find(key);
                if (it == vals.end()) vals[key] = val;
                else it->second += val;
            }
        }
        for (auto& [key, val] : vals) {
            Tuple t(k);
            for (int j = 0; j < k; ++j) t[j] = Subset((key >> (6 * j)) & 0x3f);
            delta.set_phi(k, t, val);
        }
    }
    return delta;
}

// unique structure on E making delta an isomorphism from a
template <class K>
Deformation<K> pushforward(const Deformation<K>& a, const AMorphism<K>& delta) {
    int n = a.nvars();
    K one = a.one();
    Deformation<K> out(n, a.arity_cap(), a.order(), one);
    AMorphism<K> dinv = inverse_morphism(delta);
    for (int m = 2; m <= a.arity_cap(); ++m) {
        for_each_tuple<K>(n, m, [&](const Tuple& t) {
            if (m >= 3) {
                // transport along a strictly unital morphism is strictly
                // unital; only mu^2 has nonzero unit entries
                for (Subset s : t)
                    if (!s) return;
            }
            // b_i = delta^1-preimages of the tuple entries
            std::vector<MV<K>> b;
            for (Subset s : t) {
                std::vector<MV<K>> in = {MV<K>::basis(n, s, one)};
                b.push_back(dinv.eval(1, in));
            }
            // LHS of the morphism equation evaluated at b
            MV<K> lhs(n);
            for (int j = 2; j <= m; ++j) {
                for (int i = 0; i + j <= m; ++i) {
                    std::vector<MV<K>> inner_in(b.begin() + (m - i - j), b.begin() + (m - i));
                    MV<K> innerv = eval_mu(a, j, inner_in);
                    if (innerv.is_zero()) continue;
                    std::vector<MV<K>> outer_in(b.begin(), b.begin() + (m - i - j));
                    outer_in.push_back(innerv);
                    for (int p = m - i; p < m; ++p) outer_in.push_back(b[p]);
                    MV<K> term = delta.eval(m - j + 1, outer_in);
                    // Koszul sign over the degrees of b_1..b_i: each b_p is
                    // grade-homogeneous of the degree of t[p] since Delta^1
                    // preserves grading
                    int sgn = 0;
                    for (int p = 1; p <= i; ++p) sgn += subset_size(t[m - p]) + 1;
                    if (sgn % 2) term = -term;
                    lhs += term;
                }
            }
            // subtract partition terms with known lower operations
            MV<K> rest(n);
            std::vector<int> parts;
            std::function<void(int)> rec = [&](int left) {
                if (left == 0) {
                    int r = int(parts.size());
                    if (r < 2 || r == m) return;
                    std::vector<MV<K>> blocks;
                    int pos = 0;
                    for (int bidx = 0; bidx < r; ++bidx) {
                        std::vector<MV<K>> in(b.begin() + pos, b.begin() + pos + parts[bidx]);
                        blocks.push_back(delta.eval(parts[bidx], in));
                        pos += parts[bidx];
                    }
                    rest += eval_mu(out, r, blocks);
                    return;
                }
                for (int s = 1; s <= left; ++s) {
                    parts.push_back(s);
                    rec(left - s);
                    parts.pop_back();
                }
            };
            rec(m);
            MV<K> val = lhs - rest;
            if (!val.is_zero()) out.set_mu(m, t, val);
        });
    }
    return out;
}

}  // namespace sfd
