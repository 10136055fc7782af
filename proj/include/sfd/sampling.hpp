#pragma once

#include <random>

#include "sfd/ainfinity.hpp"

namespace sfd {

// Deterministic samplers for the verification suites. All draws go through
// a seeded mt19937 so identical seeds give identical objects.

template <class K>
Series<K> random_potential(std::mt19937& rng, int n, int order, const K& one,
                           int max_terms = 4, int max_degree = 0) {
    if (max_degree <= 0) max_degree = order;
    Series<K> w(n, order);
    auto mons = monomials_up_to(n, std::min(order, max_degree));
    std::vector<Mono> pool;
    for (const auto& m : mons)
        if (m.degree() >= 2) pool.push_back(m);
    int terms = 1 + int(rng() % max_terms);
    for (int t = 0; t < terms; ++t) {
        const Mono& m = pool[rng() % pool.size()];
        long c = long(rng() % 5) - 2;
        if (c == 0) c = 1;
        w.add_term(m, one.from_int_like(c));
    }
    if (w.is_zero() && !pool.empty()) w.add_term(pool[0], one);
    return w;
}

// A strictly unital superfiltered morphism with gr = Id: the identity in
// arity one plus random lower-filtration components. Output grades are
// bounded strictly below the associated-graded level and respect parity.
template <class K>
AMorphism<K> random_gr_trivial_morphism(std::mt19937& rng, int n, int arity_cap,
                                        int order, const K& one, int density = 3) {
    AMorphism<K> delta = AMorphism<K>::identity(n, arity_cap, order, one);
    auto subsets = all_subsets(n);
    for (int k = 2; k <= arity_cap; ++k) {
        for_each_tuple<K>(n, k, [&](const Tuple& t) {
            int deg = 0;
            bool unit = false;
            for (Subset s : t) {
                deg += subset_size(s);
                if (!s) unit = true;
            }
            if (unit) return;
            int top = deg - (k - 1);
            int parity = ((deg + 1 - k) % 2 + 2) % 2;
            MV<K> val(n);
            for (Subset s : subsets) {
                if (subset_size(s) >= top) continue;       // strictly below gr level
                if (subset_size(s) % 2 != parity) continue;
                if (int(rng() % 10) >= density) continue;
                long c = long(rng() % 5) - 2;
                if (c == 0) continue;
                val.add_term(s, one.from_int_like(c));
            }
            if (!val.is_zero()) delta.set_phi(k, t, val);
        });
    }
    return delta;
}

}  // namespace sfd
