#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "sfd/ainfinity.hpp"

using namespace sfd;
using testutil::mk;

static const Rational Q1(1);
static const GFp F2_1(1, 2);

static MV<Rational> bq(int n, std::vector<int> ix, long c = 1) {
    return MV<Rational>::basis(n, subset_from_indices(ix, n), Rational(c));
}

TEST_CASE("formal structure passes all checks") {
    for (int n = 1; n <= 3; ++n) {
        auto a = Deformation<Rational>::formal(n, 4, 4, Q1);
        CHECK(check_superfiltered_unital(a).ok);
        CHECK(check_ainfinity(a, 4).ok);
        CHECK(disc_potential(a).is_zero());
    }
}

TEST_CASE("n=1 Clifford table passes") {
    // mu^2(v,v) = 1, all higher zero: potential x^2
    auto a = Deformation<Rational>::from_potential_n1(
        mk<Rational>(1, 4, {{"1", "x1^2"}}, Q1), 4, Q1);
    CHECK(check_superfiltered_unital(a).ok);
    CHECK(check_ainfinity(a, 4).ok);
    CHECK(disc_potential(a) == mk<Rational>(1, 4, {{"1", "x1^2"}}, Q1));
}

TEST_CASE("n=1 tables from any potential are consistent") {
    // With one generator the potential is the full generating function of
    // the operations, so every table of this shape satisfies the relations.
    auto p = mk<Rational>(1, 5, {{"1", "x1^3"}, {"-2", "x1^5"}}, Q1);
    auto a = Deformation<Rational>::from_potential_n1(p, 5, Q1);
    CHECK(check_superfiltered_unital(a).ok);
    CHECK(check_ainfinity(a, 5).ok);
    CHECK(disc_potential(a) == p);
}

TEST_CASE("corrupted table fails the relation checker") {
    // n=2: a spurious grade-1 value at mu^3 breaks the arity-4 relations
    // against the Clifford-deformed mu^2
    auto a = Deformation<Rational>::formal(2, 4, 4, Q1);
    a.set_mu(2, {subset_from_indices({1}, 2), subset_from_indices({1}, 2)},
             bq(2, {}, 1));
    a.set_mu(3, {subset_from_indices({1}, 2), subset_from_indices({2}, 2),
                 subset_from_indices({1}, 2)},
             bq(2, {2}, 1));
    auto rep = check_ainfinity(a, 4);
    CHECK_FALSE(rep.ok);
    CHECK(!rep.failures.empty());
}

TEST_CASE("superfiltered/unitality violations are caught") {
    // missing sign: mu^2(v1, v2) = +v12 but gr wants (-1)^{|v2|} v1^v2 = -v12
    auto a = Deformation<Rational>::formal(2, 3, 3, Q1);
    a.set_mu(2, {subset_from_indices({1}, 2), subset_from_indices({2}, 2)},
             bq(2, {1, 2}, 1));
    CHECK_FALSE(check_superfiltered_unital(a).ok);

    // gr mu^3 must vanish: a top-grade value at mu^3 is rejected
    auto b = Deformation<Rational>::formal(3, 3, 3, Q1);
    b.set_mu(3, {subset_from_indices({1}, 3), subset_from_indices({2}, 3),
                 subset_from_indices({3}, 3)},
             bq(3, {1, 2, 3}, 1));
    CHECK_FALSE(check_superfiltered_unital(b).ok);

    // unit inside mu^3
    auto c = Deformation<Rational>::formal(2, 3, 3, Q1);
    c.set_mu(3, {subset_from_indices({1}, 2), Subset(0), subset_from_indices({2}, 2)},
             bq(2, {}, 1));
    CHECK_FALSE(check_superfiltered_unital(c).ok);
}

TEST_CASE("disc potential of char-2 even family") {
    // P = x^2 + c4 x^4 + c6 x^6 over F2
    auto p = mk<GFp>(1, 6, {{"1", "x1^2"}, {"1", "x1^4"}, {"1", "x1^6"}}, F2_1);
    auto a = Deformation<GFp>::from_potential_n1(p, 6, F2_1);
    CHECK(check_ainfinity(a, 6).ok);
    CHECK(disc_potential(a) == p);
}

TEST_CASE("mu_0v on the formal structure") {
    int n = 2, order = 3;
    auto a = Deformation<Rational>::formal(n, 3, order, Q1);
    auto v1 = scalars_to_series(bq(n, {1}), n, order);
    std::vector<const MVR<Rational>*> in = {&v1};
    auto r = mu_0v(a, in, order);
    // mu^2(v1, v) = -v1 ^ v = v ^ v1 = -x2 * v12
    MVR<Rational> want(n);
    want.set(subset_from_indices({1, 2}, n),
             mk<Rational>(2, order, {{"-1", "x2"}}, Q1));
    CHECK(r == want);

    // two inputs: only mu^2(v1,v2) contributes at insertion level 0
    auto v2 = scalars_to_series(bq(n, {2}), n, order);
    std::vector<const MVR<Rational>*> in2 = {&v1, &v2};
    auto r2 = mu_0v(a, in2, order);
    MVR<Rational> want2(n);
    want2.set(subset_from_indices({1, 2}, n),
              mk<Rational>(2, order, {{"-1", "1"}}, Q1));
    CHECK(r2 == want2);
}

TEST_CASE("mu_v identities from the potential") {
    // scalar part of mu_v^1(v_i) equals dP/dx_i, and of mu_v^2(v_i,v_i)
    // equals half the second derivative
    auto p = mk<Rational>(1, 5, {{"1", "x1^2"}, {"3", "x1^4"}}, Q1);
    auto a = Deformation<Rational>::from_potential_n1(p, 5, Q1);
    int n = 1, order = 5;
    auto v = scalars_to_series(bq(1, {1}), n, order);
    std::vector<const MVR<Rational>*> in = {&v};
    auto r = mu_v(a, in, order);
    CHECK(r.coeff(0) == partial_derivative(p, 1));

    std::vector<const MVR<Rational>*> in2 = {&v, &v};
    auto r2 = mu_v(a, in2, order);
    CHECK(r2.coeff(0) == half_hessian(p).diag[0]);

    // formal structure: mu_v^1(v_i) = mu^2(v_i, v) + mu^2(v, v_i) = 0
    auto f = Deformation<Rational>::formal(2, 3, 3, Q1);
    auto w1 = scalars_to_series(bq(2, {1}), 2, 3);
    std::vector<const MVR<Rational>*> inf = {&w1};
    CHECK(mu_v(f, inf, 3).is_zero());
}

TEST_CASE("mu_0v structure relations") {
    auto p = mk<Rational>(1, 4, {{"1", "x1^2"}, {"1", "x1^3"}}, Q1);
    auto a = Deformation<Rational>::from_potential_n1(p, 4, Q1);
    CHECK(check_mu0v_relations(a, 2, 4).ok);

    auto f = Deformation<Rational>::formal(2, 4, 4, Q1);
    CHECK(check_mu0v_relations(f, 2, 4).ok);
}

TEST_CASE("morphism change of variables") {
    int n = 1, order = 4;
    auto id = AMorphism<Rational>::identity(n, 4, order, Q1);
    auto f = morphism_change_of_vars(id);
    CHECK(f.comp[0] == Series<Rational>::variable(1, n, order, Q1));

    // Phi^1 = id, Phi^2(v,v) = v -> f = x + x^2
    auto phi = AMorphism<Rational>::identity(n, 4, order, Q1);
    phi.set_phi(2, {Subset(1), Subset(1)}, bq(1, {1}, 1));
    auto f2 = morphism_change_of_vars(phi);
    CHECK(f2.comp[0] == mk<Rational>(1, order, {{"1", "x1"}, {"1", "x1^2"}}, Q1));
}

TEST_CASE("compose morphisms with identity") {
    int n = 2, order = 3;
    auto id = AMorphism<Rational>::identity(n, 3, order, Q1);
    auto phi = AMorphism<Rational>::identity(n, 3, order, Q1);
    phi.set_phi(2, {subset_from_indices({1}, n), subset_from_indices({2}, n)},
                bq(n, {1}, 2));
    auto c1 = compose_morphisms(id, phi);
    auto c2 = compose_morphisms(phi, id);
    for (int k = 1; k <= 3; ++k) {
        CHECK(c1.table(k) == phi.table(k));
        CHECK(c2.table(k) == phi.table(k));
    }
}

TEST_CASE("linear-only morphisms compose as matrix product") {
    int n = 2, order = 3;
    auto a = AMorphism<Rational>::identity(n, 3, order, Q1);
    a.set_phi(1, {subset_from_indices({1}, n)}, bq(n, {1}, 2));
    auto b = AMorphism<Rational>::identity(n, 3, order, Q1);
    b.set_phi(1, {subset_from_indices({2}, n)}, bq(n, {2}, 3));
    auto c = compose_morphisms(a, b);
    CHECK(*c.phi(1, {subset_from_indices({1}, n)}) == bq(n, {1}, 2));
    CHECK(*c.phi(1, {subset_from_indices({2}, n)}) == bq(n, {2}, 3));
    for (int k = 2; k <= 3; ++k) CHECK(c.table(k).empty());
}

TEST_CASE("pushforward by identity and by linear scaling") {
    auto p = mk<Rational>(1, 4, {{"1", "x1^2"}}, Q1);
    auto a = Deformation<Rational>::from_potential_n1(p, 4, Q1);
    auto idf = FormalDiffeo<Rational>::identity(1, 4, Q1);
    auto delta = diffeo_to_delta(idf, 4, Q1);
    auto pushed = pushforward(a, delta);
    for (int k = 2; k <= 4; ++k) CHECK(pushed.table(k) == a.table(k));

    // formal structure pushed by f = 2x stays formal with potential 0
    FormalDiffeo<Rational> f2x{{mk<Rational>(1, 4, {{"2", "x1"}}, Q1)}};
    auto formal = Deformation<Rational>::formal(1, 4, 4, Q1);
    auto pf = pushforward(formal, diffeo_to_delta(f2x, 4, Q1));
    CHECK(check_superfiltered_unital(pf).ok);
    CHECK(disc_potential(pf).is_zero());
    for (int k = 3; k <= 4; ++k) CHECK(pf.table(k).empty());
}

TEST_CASE("pushforward transports the potential through f inverse") {
    auto p = mk<Rational>(1, 4, {{"1", "x1^2"}}, Q1);
    auto a = Deformation<Rational>::from_potential_n1(p, 4, Q1);
    FormalDiffeo<Rational> f{{mk<Rational>(1, 4, {{"1", "x1"}, {"1", "x1^2"}}, Q1)}};
    auto delta = diffeo_to_delta(f, 4, Q1);
    auto pushed = pushforward(a, delta);
    CHECK(check_ainfinity(pushed, 4).ok);
    CHECK(check_superfiltered_unital(pushed).ok);
    // P_* o f = P, i.e. P_* = P o f^{-1}  (composition oracle)
    auto pstar = disc_potential(pushed);
    CHECK(series_compose(pstar, f) == p);
    CHECK(pstar == series_compose(p, diffeo_invert(f, Q1)));

    // the delta morphism itself is a 1-equivalence a -> pushed
    auto rep = check_d_equivalence(delta, a, pushed, 1);
    CHECK(rep.ok);
}

TEST_CASE("pushforward functoriality on tables") {
    std::mt19937 rng(77);
    auto a = Deformation<Rational>::formal(2, 3, 3, Q1);
    a.set_mu(2, {subset_from_indices({1}, 2), subset_from_indices({2}, 2)},
             *a.mu(2, {subset_from_indices({1}, 2), subset_from_indices({2}, 2)}) +
                 bq(2, {}, 1));
    a.set_mu(2, {subset_from_indices({2}, 2), subset_from_indices({1}, 2)},
             *a.mu(2, {subset_from_indices({2}, 2), subset_from_indices({1}, 2)}) -
                 bq(2, {}, 1));
    FormalDiffeo<Rational> f1, f2;
    for (int i = 1; i <= 2; ++i) {
        auto xi = Series<Rational>::variable(i, 2, 3, Q1);
        f1.comp.push_back(xi + testutil::random_series(rng, 2, 3, 2, Q1, 2));
        f2.comp.push_back(xi + testutil::random_series(rng, 2, 3, 2, Q1, 2));
    }
    auto d1 = diffeo_to_delta(f1, 3, Q1);
    auto d2 = diffeo_to_delta(f2, 3, Q1);
    auto lhs = pushforward(pushforward(a, d1), d2);
    // (Delta2 . Delta1)_* a: transport along the composite morphism
    auto d21 = compose_morphisms(d2, d1);
    auto rhs = pushforward(a, d21);
    for (int k = 2; k <= 3; ++k) CHECK(lhs.table(k) == rhs.table(k));
}

TEST_CASE("inverse morphism composes to the identity") {
    auto p = mk<Rational>(1, 4, {{"1", "x1^2"}, {"1", "x1^4"}}, Q1);
    auto a = Deformation<Rational>::from_potential_n1(p, 4, Q1);
    FormalDiffeo<Rational> f{{mk<Rational>(1, 4, {{"1", "x1"}, {"-1", "x1^3"}}, Q1)}};
    auto delta = diffeo_to_delta(f, 4, Q1);
    auto inv = inverse_morphism(delta);
    auto c = compose_morphisms(inv, delta);
    auto c2 = compose_morphisms(delta, inv);
    auto id = AMorphism<Rational>::identity(1, 4, 4, Q1);
    for (int k = 1; k <= 4; ++k) {
        CHECK(c.table(k) == id.table(k));
        CHECK(c2.table(k) == id.table(k));
    }
    // and f_{inv} is the series inverse of f
    auto finv = morphism_change_of_vars(inv);
    CHECK(finv.comp[0] == diffeo_invert(f, Q1).comp[0]);
}

TEST_CASE("f_{Psi o Phi} = f_Psi o f_Phi") {
    std::mt19937 rng(99);
    for (int trial = 0; trial < 4; ++trial) {
        FormalDiffeo<Rational> f1, f2;
        for (int i = 1; i <= 2; ++i) {
            auto xi = Series<Rational>::variable(i, 2, 4, Q1);
            f1.comp.push_back(xi + testutil::random_series(rng, 2, 4, 2, Q1, 2));
            f2.comp.push_back(xi + testutil::random_series(rng, 2, 4, 2, Q1, 2));
        }
        auto d1 = diffeo_to_delta(f1, 4, Q1);
        auto d2 = diffeo_to_delta(f2, 4, Q1);
        auto fc = morphism_change_of_vars(compose_morphisms(d2, d1));
        auto want = diffeo_compose(f2, f1);
        for (int i = 0; i < 2; ++i) CHECK(fc.comp[i] == want.comp[i]);
    }
}

TEST_CASE("d-equivalence leading conditions") {
    int n = 1, order = 4;
    auto a = Deformation<Rational>::formal(n, 4, order, Q1);
    auto id = AMorphism<Rational>::identity(n, 4, order, Q1);
    CHECK(check_d_equivalence(id, a, a, 4).ok);

    // gr Phi^1 = id but gr Phi^2 != 0: passes d=1, fails d=2
    FormalDiffeo<Rational> f{{mk<Rational>(1, order, {{"1", "x1"}, {"1", "x1^2"}}, Q1)}};
    auto delta = diffeo_to_delta(f, 4, Q1);
    auto pushed = pushforward(a, delta);
    CHECK(check_d_equivalence(delta, a, pushed, 1).ok);
    CHECK_FALSE(check_d_equivalence(delta, a, pushed, 2).ok);
}

TEST_CASE("disc potential lands in m^2") {
    std::mt19937 rng(123);
    for (int trial = 0; trial < 5; ++trial) {
        auto p = testutil::random_series(rng, 1, 5, 2, Q1, 3);
        auto a = Deformation<Rational>::from_potential_n1(p, 5, Q1);
        auto got = disc_potential(a);
        CHECK(got.valuation() >= 2);
        CHECK(got == p);
    }
}
