#include "catch_amalgamated.hpp"
#include "oracle.hpp"
#include "rsum/dist.hpp"

#include <sstream>

using namespace rsum;
using oracle::Gen;
using oracle::q;

static std::vector<Rational> ones(unsigned n) { return std::vector<Rational>(n, Rational(1)); }

TEST_CASE("rational parsing keeps decimals exact") {
    CHECK(parse_rational("0.31") == Rational(31, 100));
    CHECK(parse_rational("-3/6") == Rational(-1, 2));
    CHECK(parse_rational("1.5e-3") == Rational(3, 2000));
    CHECK(parse_rational("  7 ") == Rational(7));
    CHECK_THROWS_AS(parse_rational("abc"), ParseError);
    CHECK_THROWS_AS(parse_rational("1/0"), ParseError);
    CHECK_THROWS_AS(parse_rational("0.3x"), ParseError);
}

TEST_CASE("weight vector validation and file format") {
    WeightVector w({Rational(1, 3), Rational(1), Rational(1, 2)});
    CHECK(w[0] == 1);
    CHECK(w[2] == Rational(1, 3));
    CHECK(w.variance() == Rational(1) + Rational(1, 4) + Rational(1, 9));
    CHECK_THROWS_AS(WeightVector({Rational(1), Rational(0)}), InvalidWeights);
    CHECK_THROWS_AS(WeightVector(std::vector<Rational>{}), InvalidWeights);
    std::istringstream in("# header\n0.5\n1/3  # trailing\n\n2\n");
    auto f = WeightVector::parse_stream(in);
    REQUIRE(f.n() == 3);
    CHECK(f[0] == 2);
    CHECK(f[2] == Rational(1, 3));
    std::istringstream bad("0.5\nfoo\n");
    CHECK_THROWS_AS(WeightVector::parse_stream(bad), ParseError);
}

TEST_CASE("surd sign is exact") {
    auto s2 = SurdValue::sqrt(2);
    CHECK((s2 * s2) == SurdValue(2));
    CHECK(SurdValue::sqrt(Rational(9, 4)).is_rational());
    // 1.4142135623730950488 vs 1.41421356237309504: the double filter cannot separate these
    SurdValue close = s2 - SurdValue(parse_rational("1.4142135623730950488016887242096980785696"));
    CHECK(close.sign() > 0);
    SurdValue close2 = s2 - SurdValue(parse_rational("1.4142135623730950488016887242096980785697"));
    CHECK(close2.sign() < 0);
    // sqrt2 + sqrt3 vs sqrt(5 + 2 sqrt6) are equal
    SurdValue lhs = s2 + SurdValue::sqrt(3);
    CHECK((lhs.square() - (SurdValue(5) + SurdValue::sqrt(6) * Rational(2))).sign() == 0);
    CHECK(SurdValue::sqrt(8) == s2 * Rational(2));
    CHECK(SurdValue::sqrt(Rational(1, 2)).div_sqrt(Rational(1, 2)) == SurdValue(1));
    CHECK((SurdValue::sqrt(5) - SurdValue::sqrt(3) - SurdValue::sqrt(Rational(3, 10))).sign() < 0);
    CHECK(SurdValue::sqrt(10).floor() == 3);
    CHECK((-SurdValue::sqrt(10)).floor() == -4);
}

TEST_CASE("surd sign agrees with high-precision evaluation on random expressions") {
    Gen g(11);
    for (int it = 0; it < 400; ++it) {
        SurdValue e;
        long double ref = 0;
        for (int t = 0; t < 4; ++t) {
            Rational c = q(g.uniform(-30, 30), g.uniform(1, 7));
            Rational r = q(g.uniform(1, 40), g.uniform(1, 5));
            e += SurdValue::sqrt(r) * c;
            ref += static_cast<long double>(c.get_d()) * std::sqrt(static_cast<long double>(r.get_d()));
        }
        if (std::fabs(static_cast<double>(ref)) > 1e-12) CHECK(e.sign() == (ref > 0 ? 1 : -1));
        CHECK((e - e).sign() == 0);
    }
}

TEST_CASE("exact_distribution golden values") {
    auto d1 = exact_distribution(WeightVector(ones(1)));
    auto at = d1.atoms();
    REQUIRE(at.size() == 2);
    CHECK(at[Rational(-1)] == Rational(1, 2));
    CHECK(at[Rational(1)] == Rational(1, 2));

    auto d4 = exact_distribution(WeightVector(ones(4)));
    auto a4 = d4.atoms();
    CHECK(a4[Rational(-4)] == q(1, 16));
    CHECK(a4[Rational(-2)] == q(4, 16));
    CHECK(a4[Rational(0)] == q(6, 16));
    CHECK(a4[Rational(2)] == q(4, 16));
    CHECK(a4[Rational(4)] == q(1, 16));

    auto d9 = exact_distribution(WeightVector(ones(9)));
    auto s = d9.weights().sigma();
    CHECK(d9.prob_lt(s) - d9.prob_le(-s) == Rational(63, 128));
}

TEST_CASE("distribution matches the brute-force oracle") {
    Gen g(3);
    for (int it = 0; it < 40; ++it) {
        unsigned n = static_cast<unsigned>(g.uniform(1, 11));
        auto a = g.weights(n);
        ExactDist d{WeightVector(a)};
        auto ref = oracle::enumerate(a);
        auto got = d.atoms();
        REQUIRE(got.size() == ref.size());
        for (const auto& [v, c] : ref) CHECK(got[v] == Rational(c) / oracle::total(n));
        CHECK(d.symmetric());
        CHECK(d.probability_mass() == 1);
        CHECK(d.second_moment() == d.variance());
    }
}

TEST_CASE("dimension and overflow guards") {
    CHECK_THROWS_AS(ExactDist(WeightVector(ones(25))), DimensionTooLarge);
    std::vector<Rational> huge{Rational(Integer(1) << 61), Rational(Integer(1) << 61), Rational(1, 3)};
    CHECK_THROWS_AS(ExactDist(WeightVector(huge)), WeightOverflow);
}

TEST_CASE("segment probabilities") {
    ExactDist d1{WeightVector(ones(1))};
    CHECK(d1.hpr(SurdValue(-1), SurdValue(1)) == Rational(1, 2));
    CHECK(d1.hpr(SurdValue(1), SurdValue(-1)) == 0);
    CHECK(d1.hpr(SurdValue(1), SurdValue(1)) == 0);
    CHECK(d1.segment_prob(Segment::between(-1, 1, End::closed, End::closed)) == 1);
    CHECK(d1.segment_prob(Segment::between(-1, 1, End::open, End::open)) == 0);
    CHECK(d1.segment_prob(Segment::between(-1, 1, End::closed, End::open)) == Rational(1, 2));
    CHECK(d1.hpr_tail(SurdValue(1)) == Rational(1, 4));

    Gen g(5);
    for (int it = 0; it < 60; ++it) {
        unsigned n = static_cast<unsigned>(g.uniform(2, 10));
        auto a = g.weights(n);
        ExactDist d{WeightVector(a)};
        // random surd endpoints, some of them landing on atoms
        std::vector<SurdValue> pts;
        for (int k = 0; k < 3; ++k) {
            if (g.uniform(0, 1)) pts.push_back(SurdValue(q(g.uniform(-40, 40), g.uniform(1, 6))));
            else pts.push_back(SurdValue::sqrt(q(g.uniform(1, 200), g.uniform(1, 4))) * Rational(g.uniform(-1, 1)));
        }
        std::sort(pts.begin(), pts.end());
        CHECK(d.hpr(pts[0], pts[2]) == d.hpr(pts[0], pts[1]) + d.hpr(pts[1], pts[2]));
        // rational endpoints against the oracle
        Rational lo = q(g.uniform(-30, 30), g.uniform(1, 6)), hi = lo + q(g.uniform(0, 30), g.uniform(1, 6));
        Rational ref = oracle::prob(a, [&](const Rational& v) { return v > lo && v < hi; }) +
                       oracle::prob(a, [&](const Rational& v) { return v == lo || v == hi; }) / 2;
        if (hi > lo) CHECK(d.hpr(lo, hi) == ref);
    }
}

TEST_CASE("check_tomaszewski") {
    auto r2 = check_tomaszewski(WeightVector(ones(2)));
    CHECK(r2.prob == Rational(1, 2));
    CHECK(r2.holds);
    CHECK(check_tomaszewski(WeightVector(ones(4))).prob == Rational(7, 8));
    CHECK(check_tomaszewski(WeightVector(ones(9))).prob == Rational(105, 128));

    Gen g(7);
    for (int it = 0; it < 200; ++it) {
        unsigned n = static_cast<unsigned>(g.uniform(1, 12));
        auto a = g.weights(n);
        WeightVector w(a);
        auto r = check_tomaszewski(w);
        Rational V = oracle::variance(a);
        CHECK(r.prob == oracle::prob(a, [&](const Rational& v) { return v * v <= V; }));
        CHECK(r.holds);
        Rational lambda = g.rational(9, 7);
        auto rs = check_tomaszewski(w.scaled(lambda));
        CHECK(rs.prob == r.prob);
        CHECK(rs.holds == r.holds);
    }
}

TEST_CASE("check_scale_duality") {
    auto r = check_scale_duality(WeightVector(ones(2)), Rational(1));
    CHECK(r.lhs == Rational(1, 2));
    CHECK(r.rhs == Rational(1, 2));
    CHECK(r.holds);
    auto big = check_scale_duality(WeightVector(ones(3)), Rational(10));
    CHECK(big.lhs == 1);
    CHECK_THROWS_AS(check_scale_duality(WeightVector(ones(3)), Rational(0)), NonpositiveT);

    Gen g(9);
    for (int it = 0; it < 100; ++it) {
        unsigned n = static_cast<unsigned>(g.uniform(1, 14));
        auto a = g.weights(n);
        ExactDist d{WeightVector(a)};
        Rational t = q(g.uniform(1, 299), 100);
        auto res = check_scale_duality(d, t);
        CHECK(res.holds);
        if (n <= 10) {
            Rational V = oracle::variance(a);
            Rational lhs = oracle::prob(a, [&](const Rational& v) { return v * v < t * t * V; });
            Rational rhs = oracle::prob(a, [&](const Rational& v) { return v * v * t * t > V; });
            CHECK(res.lhs == lhs);
            CHECK(res.rhs == rhs);
        }
    }
}

TEST_CASE("cheby_refined") {
    ExactDist d9{WeightVector(ones(9))};
    auto r = cheby_refined(d9, std::vector<Rational>{0, Rational(1, 3), 1}, std::vector<Rational>{1, Rational(5, 3)});
    // oracle: X/3 takes values k/3; <c,c'> with half weights
    auto at = d9.atoms();
    auto hp = [&](Rational lo, Rational hi) {
        Rational s = 0;
        for (auto& [v, p] : at) {
            Rational x = v / 3;
            if (x > lo && x < hi) s += p;
            if (x == lo || x == hi) s += p / 2;
        }
        return s;
    };
    Rational lhs = hp(0, Rational(1, 3)) + Rational(8, 9) * hp(Rational(1, 3), 1);
    Rational rhs = 0;
    for (auto& [v, p] : at)
        if (v / 3 >= Rational(5, 3)) rhs += Rational(16, 9) * p;
    CHECK(r.lhs == SurdValue(lhs));
    CHECK(r.rhs == SurdValue(rhs));
    CHECK(r.holds);

    CHECK_THROWS_AS(cheby_refined(d9, std::vector<Rational>{0, Rational(1, 2), Rational(1, 3), 1},
                                  std::vector<Rational>{1}), GridNotMonotone);
    CHECK_THROWS_AS(cheby_refined(d9, std::vector<Rational>{Rational(1, 5), 1}, std::vector<Rational>{1}),
                    NotNormalizedGrid);
    CHECK_THROWS_AS(cheby_refined(d9, std::vector<Rational>{0, 1}, std::vector<Rational>{2}), NotNormalizedGrid);
    auto rep = cheby_refined(d9, std::vector<Rational>{0, Rational(1, 2), Rational(1, 2), 1}, std::vector<Rational>{1, 2});
    CHECK(rep.holds);
}

TEST_CASE("cheby identity and unconditional validity") {
    Gen g(13);
    for (int it = 0; it < 50; ++it) {
        ExactDist d{g.weight_vector(static_cast<unsigned>(g.uniform(1, 12)))};
        auto [in, out] = cheby_identity_sides(d);
        CHECK(in == out);
    }
    for (int it = 0; it < 500; ++it) {
        ExactDist d{g.weight_vector(static_cast<unsigned>(g.uniform(1, 10)))};
        std::vector<SurdValue> c{SurdValue(0)}, e{SurdValue(1)};
        int nc = static_cast<int>(g.uniform(0, 4));
        std::vector<Rational> cs;
        for (int k = 0; k < nc; ++k) cs.push_back(q(g.uniform(0, 100), 100));
        std::sort(cs.begin(), cs.end());
        for (auto& x : cs) c.push_back(SurdValue(x));
        c.push_back(SurdValue(1));
        int nd = static_cast<int>(g.uniform(1, 4));
        std::vector<SurdValue> ds;
        for (int k = 0; k < nd; ++k) ds.push_back(SurdValue::sqrt(q(g.uniform(100, 900), 100)));
        std::sort(ds.begin(), ds.end());
        for (auto& x : ds) e.push_back(x);
        CHECK(cheby_refined(d, c, e, ChebyVariant::tail).holds);
        CHECK(cheby_refined(d, c, e, ChebyVariant::segment).holds);
    }
}
