#pragma once

#include "sfd/ainfinity.hpp"

namespace sfd {

// ---- reduced Hochschild cochains ----------------------------------------------

// Length-truncated family (phi^r)_{r <= L} of multilinear maps on E with
// values in E, vanishing whenever an input is the unit, of definite Z/2
// degree t.
template <class K>
struct Cochain {
    int n = 0;
    int length_cap = 0;
    int t = 0;  // Z/2 degree
    std::vector<std::map<uint64_t, MV<K>>> comp;  // comp[r], r = 0..length_cap

    Cochain() = default;
    Cochain(int nvars, int cap, int parity)
        : n(nvars), length_cap(cap), t(parity), comp(size_t(cap) + 1) {}

    const MV<K>* at(int r, const Tuple& tu) const {
        if (r < 0 || r > length_cap) return nullptr;
        auto it = comp[r].find(pack_tuple(tu));
        return it == comp[r].end() ? nullptr : &it->second;
    }
    void set(int r, const Tuple& tu, const MV<K>& v) {
        if (r < 0 || r > length_cap) throw std::invalid_argument("Cochain::set: bad length");
        if (int(tu.size()) != r) throw std::invalid_argument("Cochain::set: arity mismatch");
        for (Subset s : tu)
            if (!s) throw std::invalid_argument("Cochain::set: reduced cochains vanish on units");
        if (v.is_zero()) comp[r].erase(pack_tuple(tu));
        else comp[r][pack_tuple(tu)] = v;
    }
    bool is_zero() const {
        for (const auto& m : comp)
            if (!m.empty()) return false;
        return true;
    }
    Cochain operator+(const Cochain& o) const {
        Cochain r = *this;
        for (int k = 0; k <= std::min(length_cap, o.length_cap); ++k)
            for (const auto& [key, v] : o.comp[k]) {
                auto it = r.comp[k].find(key);
                if (it == r.comp[k].end()) r.comp[k][key] = v;
                else {
                    it->second += v;
                    if (it->second.is_zero()) r.comp[k].erase(it);
                }
            }
        return r;
    }
    Cochain operator-() const {
        Cochain r = *this;
        for (auto& m : r.comp)
            for (auto& [key, v] : m) v = -v;
        return r;
    }
    Cochain operator-(const Cochain& o) const { return *this + (-o); }
    bool operator==(const Cochain& o) const {
        if (n != o.n || t != o.t) return false;
        int cap = std::min(length_cap, o.length_cap);
        for (int r = 0; r <= cap; ++r)
            if (comp[r] != o.comp[r]) return false;
        return true;
    }

    // multilinear evaluation over E-valued inputs (unit components die)
    MV<K> eval(const std::vector<MV<K>>& in, const K& one) const {
        MV<K> out(n);
        int r = int(in.size());
        if (r > length_cap) return out;
        Tuple tu(r);
        std::function<void(int, const K&)> rec = [&](int pos, const K& coeff) {
            if (pos == r) {
                const MV<K>* v = at(r, tu);
                if (v) out += v->scaled(coeff);
                return;
            }
            for (const auto& [s, c] : in[pos].coeffs()) {
                if (!s) continue;
                tu[pos] = s;
                rec(pos + 1, coeff * c);
            }
        };
        rec(0, one);
        return out;
    }
};

template <class K>
void for_each_reduced_tuple(int n, int r, const std::function<void(const Tuple&)>& fn) {
    std::vector<Subset> subs;
    for (Subset s : all_subsets(n))
        if (s) subs.push_back(s);
    Tuple t(r);
    std::function<void(int)> rec = [&](int pos) {
        if (pos == r) { fn(t); return; }
        for (Subset s : subs) {
            t[pos] = s;
            rec(pos + 1);
        }
    };
    rec(0);
}

// The reduced Hochschild differential d = [mu, .]: the cochain moves past
// arguments with its shifted parity t+1, and the mu-inside family carries
// the bracket sign -(-1)^{t+1}. Pinned by d odot d = 0; the insertion map
// is then a chain map on the nose.
template <class K>
Cochain<K> hochschild_differential(const Cochain<K>& phi, const Deformation<K>& a) {
    int n = phi.n;
    K one = a.one();
    Cochain<K> out(n, phi.length_cap, 1 - phi.t);
    int tshift = (phi.t + 1) % 2;
    for (int k = 0; k <= phi.length_cap; ++k) {
        for_each_reduced_tuple<K>(n, k, [&](const Tuple& tu) {
            MV<K> total(n);
            // mu outside, phi inside
            for (int j = 0; j <= std::min(k, phi.length_cap); ++j) {
                for (int i = 0; i + j <= k; ++i) {
                    int outer = k - j + 1;
                    if (outer < 2 || outer > a.arity_cap()) continue;
                    Tuple inner(tu.begin() + (k - i - j), tu.begin() + (k - i));
                    const MV<K>* innerv = phi.at(j, inner);
                    if (!innerv || innerv->is_zero()) continue;
                    std::vector<MV<K>> outer_in;
                    for (int p = 0; p < k - i - j; ++p)
                        outer_in.push_back(MV<K>::basis(n, tu[p], one));
                    outer_in.push_back(*innerv);
                    for (int p = k - i; p < k; ++p)
                        outer_in.push_back(MV<K>::basis(n, tu[p], one));
                    MV<K> term = eval_mu(a, outer, outer_in);
                    if ((tshift * maltese(tu, i)) % 2) term = -term;
                    total += term;
                }
            }
            // phi outside, mu inside
            for (int j = 2; j <= std::min(k, a.arity_cap()); ++j) {
                int outer = k - j + 1;
                if (outer > phi.length_cap) continue;
                for (int i = 0; i + j <= k; ++i) {
                    Tuple inner(tu.begin() + (k - i - j), tu.begin() + (k - i));
                    const MV<K>* innerv = a.mu(j, inner);
                    if (!innerv || innerv->is_zero()) continue;
                    std::vector<MV<K>> outer_in;
                    for (int p = 0; p < k - i - j; ++p)
                        outer_in.push_back(MV<K>::basis(n, tu[p], one));
                    outer_in.push_back(*innerv);
                    for (int p = k - i; p < k; ++p)
                        outer_in.push_back(MV<K>::basis(n, tu[p], one));
                    MV<K> term = phi.eval(outer_in, one);
                    if ((maltese(tu, i) + tshift + 1) % 2) term = -term;
                    total += term;
                }
            }
            if (!total.is_zero()) out.set(k, tu, total);
        });
    }
    return out;
}

// cup product: phi to the left of psi inside one operation, no signs
template <class K>
Cochain<K> cup_product(const Cochain<K>& phi, const Cochain<K>& psi, const Deformation<K>& a) {
    int n = phi.n;
    K one = a.one();
    int cap = std::min(phi.length_cap, psi.length_cap);
    Cochain<K> out(n, cap, (phi.t + psi.t) % 2);
    for (int k = 0; k <= cap; ++k) {
        for_each_reduced_tuple<K>(n, k, [&](const Tuple& tu) {
            MV<K> total(n);
            for (int m = 0; m <= std::min(k, phi.length_cap); ++m) {
                for (int j = 0; j + m <= k && j <= psi.length_cap; ++j) {
                    int outer = k - j - m + 2;
                    if (outer < 2 || outer > a.arity_cap()) continue;
                    for (int i = 0; i + j + m <= k; ++i) {
                        for (int l = i + j; l + m <= k; ++l) {
                            Tuple phit(tu.begin() + (k - l - m), tu.begin() + (k - l));
                            Tuple psit(tu.begin() + (k - i - j), tu.begin() + (k - i));
                            const MV<K>* phv = phi.at(m, phit);
                            if (!phv || phv->is_zero()) continue;
                            const MV<K>* psv = psi.at(j, psit);
                            if (!psv || psv->is_zero()) continue;
                            std::vector<MV<K>> outer_in;
                            for (int p = 0; p < k - l - m; ++p)
                                outer_in.push_back(MV<K>::basis(n, tu[p], one));
                            outer_in.push_back(*phv);
                            for (int p = k - l; p < k - i - j; ++p)
                                outer_in.push_back(MV<K>::basis(n, tu[p], one));
                            outer_in.push_back(*psv);
                            for (int p = k - i; p < k; ++p)
                                outer_in.push_back(MV<K>::basis(n, tu[p], one));
                            total += eval_mu(a, outer, outer_in);
                        }
                    }
                }
            }
            if (!total.is_zero()) out.set(k, tu, total);
        });
    }
    return out;
}

template <class K>
Cochain<K> unit_cochain(int n, int cap, const K& one) {
    Cochain<K> u(n, cap, 0);
    u.set(0, {}, MV<K>::basis(n, 0, one));
    return u;
}

// P_v: insert v everywhere and project to length zero. Dropped lengths
// contribute from x-degree length_cap + 1 on, so the output is trusted to
// the length cap.
template <class K>
MVR<K> insertion_map(const Cochain<K>& phi, int order) {
    int n = phi.n;
    int trust = std::min(order, phi.length_cap);
    MVR<K> out(n);
    for (int r = 0; r <= phi.length_cap; ++r) {
        for (const auto& [key, val] : phi.comp[r]) {
            Tuple tu(r);
            Mono mono = Mono::one();
            bool skip = false;
            for (int p = 0; p < r; ++p) {
                tu[p] = Subset((key >> (6 * p)) & 0x3f);
                if (subset_size(tu[p]) != 1) { skip = true; break; }
                mono = mono * Mono::var(subset_indices(tu[p])[0], n);
            }
            if (skip || mono.degree() > trust) continue;
            for (const auto& [s, c] : val.coeffs()) {
                Series<K> coeff(n, trust);
                coeff.add_term(mono, c);
                out.add_term(s, coeff);
            }
        }
    }
    return out;
}

// ---- the v-deformed algebra A_v and the Clifford complex ------------------------

// flat coordinates on E_R at a fixed order
template <class K>
struct AvSpace {
    int n = 0, order = 0;
    K one;
    std::vector<Mono> mons;
    std::map<Mono, int, MonoLess> mono_index;
    std::vector<Subset> subsets;
    std::map<Subset, int, SubsetLess> subset_index;

    AvSpace() = default;
    AvSpace(int nvars, int ord, const K& o) : n(nvars), order(ord), one(o) {
        mons = monomials_up_to(n, order);
        for (int i = 0; i < int(mons.size()); ++i) mono_index[mons[i]] = i;
        subsets = all_subsets(n);
        for (int i = 0; i < int(subsets.size()); ++i) subset_index[subsets[i]] = i;
    }
    int dim() const { return int(mons.size()) * int(subsets.size()); }
    int of(int mono, int sub) const { return mono * int(subsets.size()) + sub; }
    int mono_of(int idx) const { return idx / int(subsets.size()); }
    int sub_of(int idx) const { return idx % int(subsets.size()); }
    int valuation_of(int idx) const { return mons[mono_of(idx)].degree(); }
    int parity_of(int idx) const { return subset_size(subsets[sub_of(idx)]) % 2; }

    std::vector<std::pair<int, K>> to_flat(const MVR<K>& v) const {
        std::vector<std::pair<int, K>> out;
        for (const auto& [s, c] : v.coeffs())
            for (const auto& [m, k] : c.terms())
                out.emplace_back(of(mono_index.at(m), subset_index.at(s)), k);
        return out;
    }
    MVR<K> from_flat(const std::vector<std::pair<int, K>>& v) const {
        MVR<K> out(n);
        for (auto& [idx, c] : v) {
            Series<K> s(n, order);
            s.add_term(mons[mono_of(idx)], c);
            out.add_term(subsets[sub_of(idx)], s);
        }
        return out;
    }

    // R-linear operator from its values on the subset basis
    std::vector<std::vector<K>> matrix_of(const std::function<MVR<K>(Subset)>& act) const {
        K zero = one.zero_like();
        std::vector<std::vector<K>> d(dim(), std::vector<K>(dim(), zero));
        for (int sub = 0; sub < int(subsets.size()); ++sub) {
            MVR<K> img = act(subsets[sub]);
            for (auto& [idx, c] : to_flat(img)) {
                for (int mi = 0; mi < int(mons.size()); ++mi) {
                    Mono m2 = mons[mono_of(idx)] * mons[mi];
                    if (m2.degree() > order) continue;
                    d[of(mono_index.at(m2), sub_of(idx))][of(mi, sub)] += c;
                }
            }
        }
        return d;
    }
};

// The dg-algebra C = (Cl(-1/2 Hess P), -dP -| .). Elements are stored on
// the ordered-word basis vbar_I with truncated series coefficients one
// trust order below the potential's.
template <class K>
struct CliffordComplex {
    int n = 0;
    int order = 0;
    K one;
    HalfHessian<K> hess;
    std::vector<Series<K>> dP;

    CliffordComplex() = default;
    CliffordComplex(const Series<K>& p, const K& o) : n(p.nvars()), one(o) {
        if (!p.is_zero() && p.valuation() < 2)
            throw std::invalid_argument("CliffordComplex: potential not in m^2");
        order = std::max(0, p.order() - 1);
        hess = half_hessian(p);
        for (int i = 1; i <= n; ++i) dP.push_back(partial_derivative(p, i).truncated(order));
    }

    // v_i . vbar_I normalised to the word basis
    MVR<K> gen_mul(int i, Subset s) const {
        MVR<K> out(n);
        Subset bit = Subset(1) << (i - 1);
        if (s == 0 || subset_indices(s)[0] > i) {
            if (s & bit) throw std::logic_error("gen_mul: internal");
            out.set(s | bit, Series<K>::constant(n, order, one));
            return out;
        }
        int j = subset_indices(s)[0];  // smallest letter of the word
        Subset rest = s & ~(Subset(1) << (j - 1));
        if (j == i) {
            // v_i v_i = -(1/2) Hess_ii
            MVR<K> r(n);
            r.set(rest, -hess.diag[i - 1].truncated(order));
            return r;
        }
        // j < i: v_i v_j = -v_j v_i - d_i d_j P
        MVR<K> sub = gen_mul(i, rest);
        for (const auto& [w, c] : sub.coeffs()) {
            // prepend v_j: j is smaller than every letter of w
            out.add_term(w | (Subset(1) << (j - 1)), -c);
        }
        const Series<K>& cross = j < i ? hess.cross(j, i) : hess.cross(i, j);
        out.add_term(rest, -cross.truncated(order));
        return out;
    }

    MVR<K> mul(const MVR<K>& a, const MVR<K>& b) const {
        MVR<K> out(n);
        for (const auto& [sa, ca] : a.coeffs()) {
            // multiply b by the word sa from the left, letter by letter,
            // starting with the rightmost letter
            MVR<K> acc = b;
            auto letters = subset_indices(sa);
            for (int li = int(letters.size()) - 1; li >= 0; --li) {
                MVR<K> next(n);
                for (const auto& [w, c] : acc.coeffs()) {
                    MVR<K> g = gen_mul(letters[li], w);
                    for (const auto& [w2, c2] : g.coeffs()) next.add_term(w2, c2 * c);
                }
                acc = next;
            }
            for (const auto& [w, c] : acc.coeffs()) out.add_term(w, c * ca);
        }
        return out;
    }

    // -dP -| vbar_I = sum_j (-1)^j dP/dx_{i_j} vbar_{I minus i_j}
    MVR<K> diff(Subset s) const {
        MVR<K> out(n);
        auto idx = subset_indices(s);
        for (int j = 0; j < int(idx.size()); ++j) {
            K sgn = (j % 2 == 0) ? -one : one;  // (-1)^{j+1-based}
            out.add_term(s & ~(Subset(1) << (idx[j] - 1)), dP[idx[j] - 1].scaled(sgn));
        }
        return out;
    }

    // largest x-degree jump of the differential; 0 when dP vanishes
    int max_jump() const {
        int j = 0;
        for (const auto& d : dP)
            for (const auto& [m, c] : d.terms()) j = std::max(j, m.degree());
        return j;
    }
};

// ---- exact cohomology of finite complexes ---------------------------------------

struct GradedRank {
    int grade = 0;
    int parity = 0;
    int rank = 0;
};

template <class K>
struct CohomologyResult {
    int certified_grade = 0;             // grades <= this are exact
    std::vector<GradedRank> ranks;       // within the certified window
    std::vector<std::vector<std::pair<int, K>>> representatives;  // flat vectors
    std::vector<int> rep_grade, rep_parity;

    int total_rank() const {
        int t = 0;
        for (auto& r : ranks) t += r.rank;
        return t;
    }
    int rank_at(int grade, int parity) const {
        for (auto& r : ranks)
            if (r.grade == grade && r.parity == parity) return r.rank;
        return 0;
    }
};

// Kernel/image ranks of a differential on a graded space, computed per
// parity with graded-lex pivoting; deterministic. coords are ordered by
// (valuation, flat index); classes are reported by the valuation of their
// pivot coordinate within the certified window.
template <class K>
CohomologyResult<K> complex_cohomology(const std::vector<std::vector<K>>& d,
                                       const std::function<int(int)>& val_of,
                                       const std::function<int(int)>& par_of,
                                       int max_grade, int certified_grade, const K& one) {
    int dim = int(d.size());
    K zero = one.zero_like();
    // d^2 = 0
    {
        for (int j = 0; j < dim; ++j) {
            std::vector<K> col(dim, zero);
            for (int i = 0; i < dim; ++i)
                if (!d[i][j].is_zero())
                    for (int k = 0; k < dim; ++k) col[k] += d[k][i] * d[i][j];
            for (int k = 0; k < dim; ++k)
                if (!col[k].is_zero()) throw std::domain_error("complex_cohomology: d^2 != 0");
        }
    }
    CohomologyResult<K> out;
    out.certified_grade = certified_grade;
    for (int parity = 0; parity <= 1; ++parity) {
        std::vector<int> coords;
        for (int i = 0; i < dim; ++i)
            if (par_of(i) == parity) coords.push_back(i);
        std::sort(coords.begin(), coords.end(), [&](int a, int b) {
            if (val_of(a) != val_of(b)) return val_of(a) < val_of(b);
            return a < b;
        });
        std::map<int, int> local;
        for (int i = 0; i < int(coords.size()); ++i) local[coords[i]] = i;
        int nl = int(coords.size());
        // kernel of d restricted to this parity block
        std::vector<std::vector<K>> block;  // rows indexed by opposite-parity coords
        for (int i = 0; i < dim; ++i) {
            if (par_of(i) == parity) continue;
            std::vector<K> row(nl, zero);
            bool nz = false;
            for (int j = 0; j < nl; ++j) {
                row[j] = d[i][coords[j]];
                if (!row[j].is_zero()) nz = true;
            }
            if (nz) block.push_back(std::move(row));
        }
        auto kern = kernel_basis(block, nl, one);
        // image of d landing in this parity block
        std::vector<std::vector<K>> image_rows;
        for (int j = 0; j < dim; ++j) {
            if (par_of(j) == parity) continue;
            std::vector<K> img(nl, zero);
            bool nz = false;
            for (int i = 0; i < nl; ++i) {
                img[i] = d[coords[i]][j];
                if (!img[i].is_zero()) nz = true;
            }
            if (nz) image_rows.push_back(std::move(img));
        }
        auto rim = rref(image_rows, nl);
        std::vector<bool> im_pivot(nl, false);
        std::map<int, int> im_rank_at;
        for (int i = 0; i < rim.rank; ++i) {
            im_pivot[rim.pivot_col[i]] = true;
            im_rank_at[val_of(coords[rim.pivot_col[i]])]++;
        }
        // kernel in row form, reduced
        auto rker = rref(kern, nl);
        std::map<int, int> ker_rank_at;
        for (int i = 0; i < rker.rank; ++i)
            ker_rank_at[val_of(coords[rker.pivot_col[i]])]++;
        // representatives: kernel rows whose pivot is not an image pivot,
        // reduced against the image rows
        for (int i = 0; i < rker.rank; ++i) {
            if (im_pivot[rker.pivot_col[i]]) continue;
            int grade = val_of(coords[rker.pivot_col[i]]);
            if (grade > certified_grade) continue;
            std::vector<std::pair<int, K>> rep;
            for (int j = 0; j < nl; ++j)
                if (!rker.m[i][j].is_zero()) rep.emplace_back(coords[j], rker.m[i][j]);
            out.representatives.push_back(std::move(rep));
            out.rep_grade.push_back(grade);
            out.rep_parity.push_back(parity);
        }
        for (int g = 0; g <= std::min(max_grade, certified_grade); ++g) {
            int r = 0;
            if (ker_rank_at.count(g)) r += ker_rank_at[g];
            if (im_rank_at.count(g)) r -= im_rank_at[g];
            if (r != 0 || g <= certified_grade)
                out.ranks.push_back({g, parity, r});
        }
    }
    return out;
}

// cohomology of the Clifford complex, graded by x-degree
template <class K>
CohomologyResult<K> clifford_cohomology(const CliffordComplex<K>& cl) {
    AvSpace<K> sp(cl.n, cl.order, cl.one);
    auto d = sp.matrix_of([&](Subset s) { return cl.diff(s); });
    int window = cl.order - cl.max_jump();
    return complex_cohomology<K>(
        d, [&](int i) { return sp.valuation_of(i); }, [&](int i) { return sp.parity_of(i); },
        cl.order, window, cl.one);
}

// ---- the Jacobian algebra --------------------------------------------------------

// truncated R/(dP_1, ..., dP_n) with graded-lex normal forms
template <class K>
struct JacobianAlgebra {
    int n = 0, order = 0;
    K one;
    std::vector<Mono> mons;
    std::map<Mono, int, MonoLess> mono_index;
    std::vector<std::vector<K>> reducers;  // rref rows spanning the ideal slice
    std::vector<int> pivot_of_row;
    std::vector<bool> is_pivot;
    std::vector<Mono> normal_forms;

    Series<K> reduce(const Series<K>& s) const {
        std::vector<K> v(mons.size(), one.zero_like());
        for (const auto& [m, c] : s.terms())
            if (m.degree() <= order) v[mono_index.at(m)] = c;
        for (size_t r = 0; r < reducers.size(); ++r) {
            const K& lead = v[pivot_of_row[r]];
            if (lead.is_zero()) continue;
            K f = lead;
            for (size_t j = 0; j < mons.size(); ++j) v[j] -= f * reducers[r][j];
        }
        Series<K> out(n, order);
        for (size_t j = 0; j < mons.size(); ++j) out.add_term(mons[j], v[j]);
        return out;
    }

    int rank() const { return int(normal_forms.size()); }
    int rank_at(int grade) const {
        int r = 0;
        for (const auto& m : normal_forms)
            if (m.degree() == grade) ++r;
        return r;
    }
};

template <class K>
JacobianAlgebra<K> jacobian_algebra(const Series<K>& p, const K& one) {
    if (!p.is_zero() && p.valuation() < 2)
        throw std::invalid_argument("jacobian_algebra: potential not in m^2");
    JacobianAlgebra<K> jac;
    jac.n = p.nvars();
    jac.order = std::max(0, p.order() - 1);
    jac.one = one;
    jac.mons = monomials_up_to(jac.n, jac.order);
    for (int i = 0; i < int(jac.mons.size()); ++i) jac.mono_index[jac.mons[i]] = i;
    std::vector<std::vector<K>> rows;
    for (int i = 1; i <= jac.n; ++i) {
        auto di = partial_derivative(p, i).truncated(jac.order);
        if (di.is_zero()) continue;
        for (const auto& mu : jac.mons) {
            std::vector<K> row(jac.mons.size(), one.zero_like());
            bool nz = false;
            for (const auto& [m, c] : di.terms()) {
                Mono m2 = m * mu;
                if (m2.degree() > jac.order) continue;
                row[jac.mono_index.at(m2)] = c;
                nz = true;
            }
            if (nz) rows.push_back(std::move(row));
        }
    }
    auto r = rref(rows, int(jac.mons.size()));
    jac.is_pivot.assign(jac.mons.size(), false);
    for (int i = 0; i < r.rank; ++i) {
        jac.reducers.push_back(r.m[i]);
        jac.pivot_of_row.push_back(r.pivot_col[i]);
        jac.is_pivot[r.pivot_col[i]] = true;
    }
    for (size_t j = 0; j < jac.mons.size(); ++j)
        if (!jac.is_pivot[j]) jac.normal_forms.push_back(jac.mons[j]);
    return jac;
}

// dg product on A_v: b2 . b1 = (-1)^{|b1|} mu_v^2(b2, b1)
template <class K>
MVR<K> av_product(const Deformation<K>& a, const MVR<K>& b2, const MVR<K>& b1, int order) {
    MVR<K> out(a.nvars());
    for (int par = 0; par <= 1; ++par) {
        MVR<K> part(a.nvars());
        for (const auto& [s, c] : b1.coeffs())
            if (subset_size(s) % 2 == par) part.add_term(s, c);
        if (part.is_zero()) continue;
        std::vector<const MVR<K>*> args = {&b2, &part};
        MVR<K> t = mu_v(a, args, order);
        if (par % 2) t = -t;
        out += t;
    }
    return out;
}

// the differential of A_v with the dg sign rule: d b = (-1)^{|b|} mu_v^1(b)
template <class K>
MVR<K> av_differential(const Deformation<K>& a, const MVR<K>& b, int order) {
    MVR<K> out(a.nvars());
    for (int par = 0; par <= 1; ++par) {
        MVR<K> part(a.nvars());
        for (const auto& [s, c] : b.coeffs())
            if (subset_size(s) % 2 == par) part.add_term(s, c);
        if (part.is_zero()) continue;
        std::vector<const MVR<K>*> args = {&part};
        MVR<K> t = mu_v(a, args, order);
        if (par % 2) t = -t;
        out += t;
    }
    return out;
}

// ---- the length-windowed bar complex --------------------------------------------

// flat coordinates on reduced cochains of length <= L
template <class K>
struct BarSpace {
    int n = 0, L = 0;
    K one;
    struct Slot { int r; uint64_t key; Subset value; };
    std::vector<Slot> basis;
    std::map<std::tuple<int, uint64_t, Subset>, int> index;

    BarSpace() = default;
    BarSpace(int nvars, int cap, const K& o) : n(nvars), L(cap), one(o) {
        for (int r = 0; r <= L; ++r) {
            for_each_reduced_tuple<K>(n, r, [&](const Tuple& tu) {
                for (Subset s : all_subsets(n)) {
                    index[{r, pack_tuple(tu), s}] = int(basis.size());
                    basis.push_back({r, pack_tuple(tu), s});
                }
            });
        }
    }
    int dim() const { return int(basis.size()); }
    // Z/2 degree of the elementary cochain at a slot
    int parity_of(int idx) const {
        const Slot& sl = basis[idx];
        int deg = subset_size(sl.value);
        uint64_t key = sl.key;
        for (int p = 0; p < sl.r; ++p) deg += int(subset_size(Subset((key >> (6 * p)) & 0x3f)));
        return ((deg + sl.r) % 2 + 2) % 2;  // value minus inputs plus r... |phi| = |s| - (sum - r)
    }
    int length_of(int idx) const { return basis[idx].r; }

    Cochain<K> cochain_of(int idx) const {
        const Slot& sl = basis[idx];
        Cochain<K> c(n, L, parity_of(idx));
        Tuple tu(sl.r);
        for (int p = 0; p < sl.r; ++p) tu[p] = Subset((sl.key >> (6 * p)) & 0x3f);
        c.set(sl.r, tu, MV<K>::basis(n, sl.value, one));
        return c;
    }
    std::vector<std::pair<int, K>> to_flat(const Cochain<K>& c) const {
        std::vector<std::pair<int, K>> out;
        for (int r = 0; r <= std::min(L, c.length_cap); ++r)
            for (const auto& [key, val] : c.comp[r])
                for (const auto& [s, k] : val.coeffs())
                    out.emplace_back(index.at({r, key, s}), k);
        return out;
    }
};

template <class K>
struct HHReport {
    int certified_order = 0;
    int certified_length = 0;
    std::vector<GradedRank> bar_ranks;      // per (length grade, parity) in window
    CohomologyResult<K> clifford;           // the C-side
    bool chain_map = false;
    bool cocycles_map = false;
    bool coboundaries_map = false;
    bool cup_matches = false;
    bool unit_maps_to_unit = false;
    bool ranks_match = false;

    bool ok() const {
        return chain_map && cocycles_map && coboundaries_map && cup_matches &&
               unit_maps_to_unit && ranks_match;
    }
};

// Compare the bar-side window with the Clifford complex through the
// insertion map: chain-map identity, behaviour of cocycles, coboundaries,
// cup products and the unit, and the certified-window ranks.
template <class K>
HHReport<K> hh_via_insertion(const Deformation<K>& a, int length_cap) {
    int n = a.nvars();
    K one = a.one();
    HHReport<K> rep;
    Series<K> pot = disc_potential(a);
    int order = std::min(a.order(), length_cap);

    BarSpace<K> bar(n, length_cap, one);
    AvSpace<K> av(n, order, one);

    // bar differential matrix (windowed quotient)
    int bd = bar.dim();
    K zero = one.zero_like();
    std::vector<std::vector<K>> dmat(bd, std::vector<K>(bd, zero));
    std::vector<Cochain<K>> dvals;
    for (int j = 0; j < bd; ++j) {
        Cochain<K> dcj = hochschild_differential(bar.cochain_of(j), a);
        for (auto& [idx, c] : bar.to_flat(dcj)) dmat[idx][j] += c;
        dvals.push_back(std::move(dcj));
    }
    // insertion matrix
    std::vector<std::vector<K>> pmat(av.dim(), std::vector<K>(bd, zero));
    for (int j = 0; j < bd; ++j) {
        MVR<K> img = insertion_map(bar.cochain_of(j), order);
        for (auto& [idx, c] : av.to_flat(img)) pmat[idx][j] += c;
    }
    // mu_v^1 matrix on A_v (no sign rule: the chain-map identity is on the nose)
    std::vector<std::vector<K>> avd = av.matrix_of([&](Subset s) {
        MVR<K> in = MVR<K>::basis(n, s, Series<K>::constant(n, order, one));
        std::vector<const MVR<K>*> args = {&in};
        return mu_v(a, args, order);
    });

    // length jump of the bar differential
    int jump = 1;
    for (int k = 3; k <= a.arity_cap(); ++k)
        if (!a.table(k).empty()) jump = std::max(jump, k - 1);
    rep.certified_length = std::max(0, length_cap - jump);
    rep.certified_order = std::min(order, rep.certified_length);

    // chain map: P d = mu_v^1 P on columns, compared through the trust of
    // the insertion (coordinates of x-degree <= certified window)
    rep.chain_map = true;
    for (int j = 0; j < bd && rep.chain_map; ++j) {
        for (int i = 0; i < av.dim(); ++i) {
            if (av.valuation_of(i) > rep.certified_order) continue;
            K lhs = zero, rhs = zero;
            for (int kk = 0; kk < bd; ++kk)
                if (!dmat[kk][j].is_zero()) lhs += pmat[i][kk] * dmat[kk][j];
            for (int kk = 0; kk < av.dim(); ++kk)
                if (!pmat[kk][j].is_zero()) rhs += avd[i][kk] * pmat[kk][j];
            if (lhs != rhs) { rep.chain_map = false; break; }
        }
    }

    // bar cohomology in the window
    auto barcoh = complex_cohomology<K>(
        dmat, [&](int i) { return bar.length_of(i); }, [&](int i) { return bar.parity_of(i); },
        length_cap, rep.certified_length, one);
    rep.bar_ranks = barcoh.ranks;

    // Clifford side
    CliffordComplex<K> cl(pot, one);
    rep.clifford = clifford_cohomology(cl);

    // ranks match on the common certified window
    rep.ranks_match = true;
    int common = std::min(rep.certified_length, rep.clifford.certified_grade);
    common = std::min(common, rep.certified_order);
    for (int g = 0; g <= common; ++g)
        for (int par = 0; par <= 1; ++par) {
            int br = 0;
            for (auto& r : barcoh.ranks)
                if (r.grade == g && r.parity == par) br = r.rank;
            if (br != rep.clifford.rank_at(g, par)) rep.ranks_match = false;
        }

    // representative behaviour through the insertion map
    auto in_image = [&](const MVR<K>& z) {
        // solve mu_v^1(x) = z on coordinates within the trusted window
        std::vector<int> rows, cols;
        for (int i = 0; i < av.dim(); ++i) {
            if (av.valuation_of(i) <= rep.certified_order) rows.push_back(i);
            cols.push_back(i);
        }
        std::vector<std::vector<K>> m(rows.size(), std::vector<K>(cols.size(), zero));
        for (size_t ri = 0; ri < rows.size(); ++ri)
            for (size_t ci = 0; ci < cols.size(); ++ci) m[ri][ci] = avd[rows[ri]][cols[ci]];
        std::vector<K> b(rows.size(), zero);
        for (auto& [idx, c] : av.to_flat(z)) {
            for (size_t ri = 0; ri < rows.size(); ++ri)
                if (rows[ri] == idx) b[ri] = c;
        }
        return solve_linear(m, b, one).consistent;
    };

    rep.cocycles_map = true;
    rep.coboundaries_map = true;
    for (size_t ri = 0; ri < barcoh.representatives.size(); ++ri) {
        // assemble the representative cochain
        Cochain<K> c(n, length_cap, barcoh.rep_parity[ri]);
        Cochain<K> acc = c;
        for (auto& [idx, k] : barcoh.representatives[ri]) {
            Cochain<K> e = bar.cochain_of(idx);
            for (auto& m : e.comp)
                for (auto& [key, v] : m) v = v.scaled(k);
            acc = acc + e;
        }
        // cocycle goes to a mu_v^1-cocycle within trust
        MVR<K> img = insertion_map(acc, order);
        std::vector<const MVR<K>*> args = {&img};
        MVR<K> dimg = mu_v(a, args, order);
        for (const auto& [s, c2] : dimg.coeffs())
            if (!c2.truncated(rep.certified_order).is_zero()) rep.cocycles_map = false;
        // coboundary: d of anything maps into the image of mu_v^1
        Cochain<K> dc = hochschild_differential(acc, a);
        MVR<K> dimg2 = insertion_map(dc, order);
        if (!in_image(dimg2)) rep.coboundaries_map = false;
    }

    // unit to unit
    {
        MVR<K> u = insertion_map(unit_cochain<K>(n, length_cap, one), order);
        MVR<K> want(n);
        want.set(0, Series<K>::constant(n, std::min(order, length_cap), one));
        rep.unit_maps_to_unit = (u == want);
    }

    // cup products of representatives map to dg-products modulo exact terms
    rep.cup_matches = true;
    for (size_t ri = 0; ri < barcoh.representatives.size() && rep.cup_matches; ++ri) {
        for (size_t rj = 0; rj <= ri && rep.cup_matches; ++rj) {
            Cochain<K> ci(n, length_cap, barcoh.rep_parity[ri]);
            for (auto& [idx, k] : barcoh.representatives[ri]) {
                Cochain<K> e = bar.cochain_of(idx);
                for (auto& m : e.comp)
                    for (auto& [key, v] : m) v = v.scaled(k);
                ci = ci + e;
            }
            Cochain<K> cj(n, length_cap, barcoh.rep_parity[rj]);
            for (auto& [idx, k] : barcoh.representatives[rj]) {
                Cochain<K> e = bar.cochain_of(idx);
                for (auto& m : e.comp)
                    for (auto& [key, v] : m) v = v.scaled(k);
                cj = cj + e;
            }
            MVR<K> lhs = insertion_map(cup_product(ci, cj, a), order);
            MVR<K> rhs = av_product(a, insertion_map(ci, order), insertion_map(cj, order), order);
            MVR<K> diff = lhs - rhs;
            MVR<K> clamped(n);
            for (const auto& [s, c2] : diff.coeffs())
                clamped.add_term(s, c2.truncated(rep.certified_order));
            if (!clamped.is_zero() && !in_image(clamped)) rep.cup_matches = false;
        }
    }
    return rep;
}

// ---- embedding into Cl (x) Jac and centrality -----------------------------------

template <class K>
CheckReport embed_and_centre_check(const Series<K>& p, const K& one) {
    CheckReport rep;
    CliffordComplex<K> cl(p, one);
    rep.certified_order = cl.order - cl.max_jump();
    auto coh = clifford_cohomology(cl);
    auto jac = jacobian_algebra(p, one);
    AvSpace<K> sp(cl.n, cl.order, cl.one);
    int n = cl.n;
    // the differential of C decreases word length by one, so cocycles split
    // into length-homogeneous parts; check centrality for each representative
    // length component: v_l a = (-1)^r a v_l modulo the Jacobian ideal
    for (size_t ri = 0; ri < coh.representatives.size(); ++ri) {
        MVR<K> a = sp.from_flat(coh.representatives[ri]);
        for (int len = 0; len <= n; ++len) {
            MVR<K> part(n);
            for (const auto& [s, c] : a.coeffs())
                if (subset_size(s) == len) part.add_term(s, c);
            if (part.is_zero()) continue;
            for (int l = 1; l <= n; ++l) {
                MVR<K> vl(n);
                vl.set(Subset(1) << (l - 1), Series<K>::constant(n, cl.order, one));
                MVR<K> comm = cl.mul(vl, part);
                MVR<K> right = cl.mul(part, vl);
                if (len % 2) comm += right;
                else comm -= right;
                // reduce coefficients modulo the Jacobian ideal
                bool bad = false;
                for (const auto& [s, c] : comm.coeffs())
                    if (!jac.reduce(c).is_zero()) bad = true;
                if (bad)
                    rep.fail("centrality fails for representative " + std::to_string(ri) +
                             " against v" + std::to_string(l));
            }
        }
    }
    return rep;
}

}  // namespace sfd
