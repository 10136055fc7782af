#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "sfd/exterior.hpp"

using namespace sfd;
using testutil::mk;

static const Rational Q1(1);

static MV<Rational> basis(int n, std::vector<int> ix, long c = 1) {
    return MV<Rational>::basis(n, subset_from_indices(ix, n), Rational(c));
}

TEST_CASE("wedge basics") {
    CHECK(wedge(basis(2, {1}), basis(2, {2})) == basis(2, {1, 2}));
    CHECK(wedge(basis(2, {2}), basis(2, {1})) == basis(2, {1, 2}, -1));
    CHECK(wedge(basis(2, {1}), basis(2, {1})).is_zero());
    CHECK_THROWS(wedge(basis(2, {1}), basis(3, {1})));
}

TEST_CASE("wedge graded commutativity") {
    std::mt19937 rng(7);
    int n = 4;
    auto subsets = all_subsets(n);
    for (int trial = 0; trial < 50; ++trial) {
        Subset a = subsets[rng() % subsets.size()];
        Subset b = subsets[rng() % subsets.size()];
        auto ab = wedge(MV<Rational>::basis(n, a, Q1), MV<Rational>::basis(n, b, Q1));
        auto ba = wedge(MV<Rational>::basis(n, b, Q1), MV<Rational>::basis(n, a, Q1));
        if (subset_size(a) * subset_size(b) % 2)
            CHECK(ab == -ba);
        else
            CHECK(ab == ba);
    }
}

TEST_CASE("contraction basics") {
    CHECK(contract_var(1, basis(2, {1, 2})) == basis(2, {2}));
    CHECK(contract_var(2, basis(2, {1, 2})) == basis(2, {1}, -1));
    CHECK(contract_var(1, basis(2, {})).is_zero());
}

TEST_CASE("contraction is an odd derivation and squares to zero") {
    std::mt19937 rng(13);
    int n = 4, order = 2;
    Covector<Rational> c;
    for (int i = 1; i <= n; ++i)
        c.comp.push_back(testutil::random_series(rng, n, order, 0, Q1, 2));
    auto subsets = all_subsets(n);
    for (int trial = 0; trial < 30; ++trial) {
        Subset sa = subsets[rng() % subsets.size()];
        Subset sb = subsets[rng() % subsets.size()];
        auto a = MVR<Rational>::basis(n, sa, Series<Rational>::constant(n, order, Q1));
        auto b = MVR<Rational>::basis(n, sb, Series<Rational>::constant(n, order, Q1));
        CHECK(contract(c, contract(c, wedge(a, b))).is_zero());
        // c -| (a ^ b) = (c -| a) ^ b + (-1)^|a| a ^ (c -| b)
        auto lhs = contract(c, wedge(a, b));
        auto rhs = wedge(contract(c, a), b);
        auto t2 = wedge(a, contract(c, b));
        if (subset_size(sa) % 2) rhs -= t2; else rhs += t2;
        CHECK(lhs == rhs);
    }
}

TEST_CASE("Cartan commutator [v_l ^, v_m -|] = delta_lm id on E_R") {
    int n = 3, order = 2;
    auto one = Series<Rational>::constant(n, order, Q1);
    for (int l = 1; l <= n; ++l) {
        for (int m = 1; m <= n; ++m) {
            for (Subset s : all_subsets(n)) {
                auto a = MVR<Rational>::basis(n, s, one);
                auto vl = MVR<Rational>::basis(n, subset_from_indices({l}, n), one);
                auto comm = contract_var(m, wedge(vl, a)) + wedge(vl, contract_var(m, a));
                if (l == m)
                    CHECK(comm == a);
                else
                    CHECK(comm.is_zero());
            }
        }
    }
}

TEST_CASE("canonical_v and reduce_mod_m") {
    auto v1 = canonical_v<Rational>(1, 3, Q1);
    CHECK(v1.coeff(1) == mk<Rational>(1, 3, {{"1", "x1"}}, Q1));
    auto v3 = canonical_v<Rational>(3, 2, Q1);
    CHECK(v3.coeffs().size() == 3);
    for (int i = 1; i <= 3; ++i)
        CHECK(v3.coeff(Subset(1) << (i - 1)) ==
              Series<Rational>::variable(i, 3, 2, Q1));

    // reduce_mod_m keeps constant coefficients only
    MVR<Rational> a(1);
    a.set(subset_from_indices({1}, 1), mk<Rational>(1, 2, {{"1", "1"}, {"1", "x1"}}, Q1));
    CHECK(reduce_mod_m(a) == basis(1, {1}));
    MVR<Rational> b(1);
    b.set(subset_from_indices({1}, 1), mk<Rational>(1, 2, {{"1", "x1"}}, Q1));
    CHECK(reduce_mod_m(b).is_zero());
    MVR<Rational> c(2);
    c.set(subset_from_indices({1, 2}, 2), mk<Rational>(2, 2, {{"2", "1"}, {"1", "x1*x2"}}, Q1));
    CHECK(reduce_mod_m(c) == basis(2, {1, 2}, 2));
}

TEST_CASE("rank bookkeeping") {
    int n = 4;
    auto subsets = all_subsets(n);
    CHECK(subsets.size() == 16);
    int per_degree[5] = {0, 0, 0, 0, 0};
    for (Subset s : subsets) per_degree[subset_size(s)]++;
    CHECK(per_degree[0] == 1);
    CHECK(per_degree[1] == 4);
    CHECK(per_degree[2] == 6);
    CHECK(per_degree[3] == 4);
    CHECK(per_degree[4] == 1);
}
