#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "sfd/transfer.hpp"

using namespace sfd;
using testutil::mk;

static const Rational Q1(1);
static const GFp F2_1(1, 2);
static const GFp F3_1(1, 3);

template <class K>
static TransferData<K> transfer_of(const Series<K>& w, const K& one) {
    return build_transfer(stabilize_skyscraper(w, one));
}

TEST_CASE("cocycles for small potentials") {
    // w = 0: f_i = v_i ^ .
    auto td0 = transfer_of(Series<Rational>::zero(2, 3), Q1);
    for (int i = 1; i <= 2; ++i) {
        auto want = mat_from_action<Rational>(td0.ctx(), [&](Subset s) {
            return wedge(MVR<Rational>::basis(2, Subset(1) << (i - 1),
                                              Series<Rational>::constant(2, 3, Q1)),
                         MVR<Rational>::basis(2, s, Series<Rational>::constant(2, 3, Q1)));
        });
        CHECK(td0.f[i - 1] == want);
    }

    // w = x^2: lambda_11 = -1, f_1 = v_1 ^ . - v_1* -| .
    auto td1 = transfer_of(mk<Rational>(1, 4, {{"1", "x1^2"}}, Q1), Q1);
    CHECK(td1.lambda[0][0] == mk<Rational>(1, 4, {{"-1", "1"}}, Q1));
    auto wedge1 = mat_from_action<Rational>(td1.ctx(), [&](Subset s) {
        return wedge(MVR<Rational>::basis(1, 1, Series<Rational>::constant(1, 4, Q1)),
                     MVR<Rational>::basis(1, s, Series<Rational>::constant(1, 4, Q1)));
    });
    auto contr1 = mat_from_action<Rational>(td1.ctx(), [&](Subset s) {
        return contract_var(1, MVR<Rational>::basis(1, s, Series<Rational>::constant(1, 4, Q1)));
    });
    CHECK(td1.f[0] == wedge1 - contr1);

    // w = x1 x2: f_2 carries the lambda_21 contraction, and stays a cocycle
    auto td2 = transfer_of(mk<Rational>(2, 4, {{"1", "x1*x2"}}, Q1), Q1);
    CHECK(td2.lambda[1][0] == mk<Rational>(2, 4, {{"-1", "1"}}, Q1));
    CHECK(td2.lambda[0][1].is_zero());
}

TEST_CASE("iota and pi basics") {
    auto td = transfer_of(Series<Rational>::zero(2, 3), Q1);
    // iota(1) = id
    CHECK(td.iota[0] == mat_identity(td.ctx()));
    // pi(id) = 1
    CHECK(td.pi(mat_identity(td.ctx())) == MV<Rational>::basis(2, 0, Q1));
    // iota(v12) = (v1^) o (v2^)
    auto w1 = td.f[0], w2 = td.f[1];
    CHECK(td.iota[td.ctx().index.at(subset_from_indices({1, 2}, 2))] == mat_compose(w1, w2));
}

TEST_CASE("eta closed form on the R.id summand") {
    // w = 0: eta(x^a id) = -sum_i m_i(x^a) v_i* -| . exactly
    auto td = transfer_of(Series<Rational>::zero(2, 3), Q1);
    const auto& c = td.ctx();
    for (auto alpha : {testutil::mono("x1", 2), testutil::mono("x2", 2),
                       testutil::mono("x1*x2", 2), testutil::mono("x1^2", 2)}) {
        Mat<Rational> rid(c);
        for (int i = 0; i < c.dim(); ++i) rid.at(i, i).add_term(alpha, Q1);
        Mat<Rational> got = td.eta_of(rid);
        // canonical splitting routes x^a through its largest variable
        int v = alpha.exp(2, 2) > 0 ? 2 : 1;
        Mono rest = alpha.div_var(v, 2);
        Mat<Rational> want = mat_from_action<Rational>(c, [&](Subset s) {
            auto a = MVR<Rational>::basis(2, s, Series<Rational>::constant(2, 3, Q1));
            MVR<Rational> r = contract_var(v, a);
            MVR<Rational> out(2);
            for (const auto& [ss, coeff] : r.coeffs()) {
                Series<Rational> lift(2, 3);
                for (const auto& [m2, c2] : coeff.terms()) lift.add_term(m2 * rest, c2);
                out.add_term(ss, lift);
            }
            return -out;
        });
        CHECK(got == want);
    }
    // eta(id) = 0: the constant id is iota(1)
    CHECK(td.eta_of(mat_identity(c)).is_zero());
}

TEST_CASE("eta closed form grade-(-1) part with nonzero potential") {
    auto td = transfer_of(mk<Rational>(2, 4, {{"1", "x1*x2"}}, Q1), Q1);
    const auto& c = td.ctx();
    Mono alpha = testutil::mono("x1", 2);
    Mat<Rational> rid(c);
    for (int i = 0; i < c.dim(); ++i) rid.at(i, i).add_term(alpha, Q1);
    Mat<Rational> got = mat_graded_part(c, td.eta_of(rid), -1);
    Mat<Rational> want = mat_from_action<Rational>(c, [&](Subset s) {
        return -contract_var(1, MVR<Rational>::basis(2, s, Series<Rational>::constant(2, 4, Q1)));
    });
    // only the x-degree-0 part of the grade-(-1) component is the closed form
    for (int i = 0; i < c.dim(); ++i)
        for (int j = 0; j < c.dim(); ++j)
            CHECK(got.at(i, j).coeff(Mono::one()) == want.at(i, j).coeff(Mono::one()));
}

TEST_CASE("transfer identities hold on the certified window") {
    std::vector<Series<Rational>> pots = {
        Series<Rational>::zero(1, 4),
        mk<Rational>(1, 4, {{"1", "x1^2"}}, Q1),
        mk<Rational>(1, 5, {{"1", "x1^3"}, {"-1", "x1^4"}}, Q1),
        mk<Rational>(2, 4, {{"1", "x1*x2"}}, Q1),
        mk<Rational>(2, 4, {{"1", "x1^2"}, {"1", "x1*x2^2"}}, Q1),
    };
    for (const auto& w : pots) {
        auto td = transfer_of(w, Q1);
        auto rep = check_transfer_data(td);
        INFO("potential ", w.str(), ": ", rep.summary());
        CHECK(rep.ok);
        // the truncation boundary costs one layer; deeper terms of w can
        // cost more through the theta corrections
        CHECK(td.certified_order >= 0);
    }
    // characteristic 2 and 3
    auto td2 = transfer_of(mk<GFp>(2, 4, {{"1", "x1^2"}, {"1", "x1*x2"}}, F2_1), F2_1);
    CHECK(check_transfer_data(td2).ok);
    auto td3 = transfer_of(mk<GFp>(2, 4, {{"1", "x1^3"}, {"2", "x2^2"}}, F3_1), F3_1);
    CHECK(check_transfer_data(td3).ok);

    // a polynomial potential can be re-expanded at a buffered order to
    // certify any requested window
    auto w = mk<Rational>(2, 5, {{"1", "x1^2"}, {"1", "x1*x2^2"}}, Q1);
    auto tdb = build_transfer_window(w, Q1, 4);
    CHECK(tdb.certified_order >= 4);
    CHECK(check_transfer_data(tdb, 4).ok);
    auto tdb2 = build_transfer_window(mk<Rational>(1, 5, {{"1", "x1^3"}, {"-1", "x1^4"}}, Q1),
                                      Q1, 4);
    CHECK(tdb2.certified_order >= 4);
}

TEST_CASE("minimal model of w = 0 is formal") {
    for (int n = 1; n <= 2; ++n) {
        auto td = transfer_of(Series<Rational>::zero(n, 4), Q1);
        auto mm = minimal_model(td, 4);
        auto formal = Deformation<Rational>::formal(n, 4, 4, Q1);
        for (int k = 2; k <= 4; ++k) CHECK(mm.algebra.table(k) == formal.table(k));
    }
}

TEST_CASE("disc potential of the minimal model is w") {
    // the headline transfer theorem, exercised on several potentials
    std::vector<Series<Rational>> pots = {
        mk<Rational>(1, 5, {{"1", "x1^3"}, {"-1", "x1^4"}}, Q1),
        mk<Rational>(1, 4, {{"1", "x1^2"}}, Q1),
        mk<Rational>(2, 4, {{"1", "x1*x2"}, {"1", "x2^3"}}, Q1),
    };
    for (const auto& w : pots) {
        auto td = transfer_of(w, Q1);
        auto mm = minimal_model(td, w.order());
        CHECK(check_superfiltered_unital(mm.algebra).ok);
        CHECK(check_ainfinity(mm.algebra, w.order()).ok);
        CHECK(disc_potential(mm.algebra) == w);
    }
}

TEST_CASE("w = x^3 minimal model has mu^3(v,v,v) = 1") {
    auto w = mk<Rational>(1, 5, {{"1", "x1^3"}}, Q1);
    auto td = transfer_of(w, Q1);
    auto mm = minimal_model(td, 5);
    const MV<Rational>* v3 = mm.algebra.mu(3, {1, 1, 1});
    REQUIRE(v3 != nullptr);
    CHECK(v3->coeff(0) == Q1);
    CHECK(disc_potential(mm.algebra) == w);
}

TEST_CASE("minimal models over finite fields") {
    auto w2 = mk<GFp>(2, 4, {{"1", "x1*x2"}, {"1", "x1^4"}}, F2_1);
    auto td2 = transfer_of(w2, F2_1);
    auto mm2 = minimal_model(td2, 4);
    CHECK(check_ainfinity(mm2.algebra, 4).ok);
    CHECK(check_superfiltered_unital(mm2.algebra).ok);
    CHECK(disc_potential(mm2.algebra) == w2);

    auto w3 = mk<GFp>(1, 5, {{"1", "x1^2"}, {"2", "x1^5"}}, F3_1);
    auto td3 = transfer_of(w3, F3_1);
    auto mm3 = minimal_model(td3, 5);
    CHECK(check_ainfinity(mm3.algebra, 5).ok);
    CHECK(disc_potential(mm3.algebra) == w3);
}

TEST_CASE("unit inputs die in the kernels") {
    auto w = mk<Rational>(2, 4, {{"1", "x1*x2"}}, Q1);
    auto td = transfer_of(w, Q1);
    const auto& c = td.ctx();
    auto el = [&](Subset s) {
        return Element<Rational>{td.iota[c.index.at(s)], subset_size(s) % 2};
    };
    Subset v1 = subset_from_indices({1}, 2), v2 = subset_from_indices({2}, 2);
    for (auto args : {std::vector<Element<Rational>>{el(0), el(v1), el(v2)},
                      std::vector<Element<Rational>>{el(v1), el(0), el(v2)},
                      std::vector<Element<Rational>>{el(v1), el(v2), el(0)}}) {
        auto p = markl_p(td, args);
        CHECK(td.pi(p.m).is_zero());
        CHECK(td.eta_of(p.m).is_zero());
    }
}

TEST_CASE("clifford_check") {
    // w = 0: exterior relations
    auto td0 = transfer_of(Series<Rational>::zero(2, 3), Q1);
    auto mm0 = minimal_model(td0, 3);
    CHECK(clifford_check(mm0.algebra, Series<Rational>::zero(2, 3)).ok);

    // w = -x^2: v.v = 1, i.e. mu^2(v,v) = -1 = coeff of x^2 in P
    auto wneg = mk<Rational>(1, 4, {{"-1", "x1^2"}}, Q1);
    auto tdn = transfer_of(wneg, Q1);
    auto mmn = minimal_model(tdn, 4);
    CHECK(clifford_check(mmn.algebra, wneg).ok);
    CHECK(mmn.algebra.mu(2, {1, 1})->coeff(0) == Rational(-1));

    // w = x1 x2: v1 v2 + v2 v1 = -1 consistent with Q(a1v1+a2v2) = -a1a2
    auto w12 = mk<Rational>(2, 4, {{"1", "x1*x2"}}, Q1);
    auto td12 = transfer_of(w12, Q1);
    auto mm12 = minimal_model(td12, 4);
    CHECK(clifford_check(mm12.algebra, w12).ok);

    // and a deliberate mismatch is flagged
    CHECK_FALSE(clifford_check(mm12.algebra, Series<Rational>::zero(2, 4)).ok);
}

TEST_CASE("Pi is an A-infinity morphism on iota tuples") {
    auto w = mk<Rational>(2, 4, {{"1", "x1*x2"}, {"1", "x1^3"}}, Q1);
    auto td = transfer_of(w, Q1);
    int cap = 4;
    auto mm = minimal_model(td, cap);
    const auto& c = td.ctx();
    DgEndView<Rational> dg{&td.e0};

    // Pi^1 = pi
    for (Subset s : c.basis) {
        std::vector<Element<Rational>> args = {{td.iota[c.index.at(s)], subset_size(s) % 2}};
        CHECK(pi_component(td, args) == MV<Rational>::basis(2, s, Q1));
    }

    // morphism equation on tuples of iota images
    std::mt19937 rng(2024);
    auto subsets = all_subsets(2);
    for (int trial = 0; trial < 24; ++trial) {
        int m = 2 + int(rng() % 3);  // arity 2..4
        std::vector<Element<Rational>> args;
        Tuple t;
        for (int i = 0; i < m; ++i) {
            Subset s = subsets[rng() % subsets.size()];
            t.push_back(s);
            args.push_back({td.iota[c.index.at(s)], subset_size(s) % 2});
        }
        MV<Rational> lhs(2);
        for (int j = 1; j <= m; ++j) {
            for (int i = 0; i + j <= m; ++i) {
                std::vector<Element<Rational>> inner(args.begin() + (m - i - j),
                                                     args.begin() + (m - i));
                Element<Rational> innerv{Mat<Rational>(c), 0};
                if (j == 1) {
                    auto [dm, dp] = dg.mu1(inner[0].m, inner[0].parity);
                    innerv = {dm, dp};
                } else if (j == 2) {
                    innerv = mu2_b0(td, inner[0], inner[1]);
                } else {
                    continue;  // dg-algebra: mu^{>=3} = 0
                }
                if (innerv.m.is_zero()) continue;
                std::vector<Element<Rational>> outer(args.begin(), args.begin() + (m - i - j));
                outer.push_back(innerv);
                for (int p = m - i; p < m; ++p) outer.push_back(args[p]);
                MV<Rational> term = pi_component(td, outer);
                int sgn = 0;
                for (int p = 1; p <= i; ++p) sgn += args[m - p].parity + 1;
                if (sgn % 2) term = -term;
                lhs += term;
            }
        }
        MV<Rational> rhs(2);
        std::vector<int> parts;
        std::function<void(int)> rec = [&](int left) {
            if (left == 0) {
                int r = int(parts.size());
                if (r < 2 || r > cap) return;
                std::vector<MV<Rational>> blocks;
                int pos = 0;
                for (int b = 0; b < r; ++b) {
                    std::vector<Element<Rational>> blk(args.begin() + pos,
                                                       args.begin() + pos + parts[b]);
                    blocks.push_back(pi_component(td, blk));
                    pos += parts[b];
                }
                rhs += eval_mu(mm.algebra, r, blocks);
                return;
            }
            for (int s = 1; s <= left; ++s) {
                parts.push_back(s);
                rec(left - s);
                parts.pop_back();
            }
        };
        rec(m);
        INFO("tuple ", tuple_str(t));
        CHECK(lhs == rhs);
    }
}
