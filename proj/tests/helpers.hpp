#pragma once

#include <random>
#include <string>
#include <vector>

#include "sfd/series.hpp"

// Shared test helpers. Parsers here are deliberately primitive: tests feed
// them fixed well-formed strings like "x1^2*x2" or "3/2".

namespace testutil {

using sfd::Mono;
using sfd::Series;

template <class K>
K sc(const std::string& s, const K& like) {
    return sfd::parse_scalar<K>(s, sfd::ring_of(like));
}

// "x1^2*x2" -> Mono (no coefficient part)
inline Mono mono(const std::string& s, int n) {
    std::vector<int> e(n, 0);
    size_t i = 0;
    while (i < s.size()) {
        if (s[i] == '*' || s[i] == ' ') { ++i; continue; }
        if (s[i] == '1' && (i + 1 == s.size())) { ++i; continue; }  // the monomial "1"
        if (s[i] != 'x') throw std::invalid_argument("mono: " + s);
        ++i;
        int var = 0;
        while (i < s.size() && isdigit(s[i])) var = var * 10 + (s[i++] - '0');
        int exp = 1;
        if (i < s.size() && s[i] == '^') {
            ++i;
            exp = 0;
            while (i < s.size() && isdigit(s[i])) exp = exp * 10 + (s[i++] - '0');
        }
        e[var - 1] += exp;
    }
    return Mono::from_exponents(e);
}

// terms: list of (coeff string, monomial string)
template <class K>
Series<K> mk(int n, int order, std::vector<std::pair<std::string, std::string>> terms,
             const K& like) {
    Series<K> s(n, order);
    for (auto& [c, m] : terms) s.add_term(mono(m, n), sc(c, like));
    return s;
}

// deterministic random series in m^minval with small coefficients
template <class K>
Series<K> random_series(std::mt19937& rng, int n, int order, int minval, const K& like,
                        int max_terms = 6) {
    Series<K> s(n, order);
    auto mons = sfd::monomials_up_to(n, order);
    std::vector<Mono> pool;
    for (auto& m : mons)
        if (m.degree() >= minval) pool.push_back(m);
    if (pool.empty()) return s;
    std::uniform_int_distribution<int> pick(0, int(pool.size()) - 1);
    std::uniform_int_distribution<int> cdist(-3, 3);
    int terms = 1 + int(rng() % max_terms);
    for (int t = 0; t < terms; ++t)
        s.add_term(pool[pick(rng)], like.from_int_like(cdist(rng)));
    return s;
}

}  // namespace testutil
