#include "catch_amalgamated.hpp"
#include "oracle.hpp"
#include "quadgen.hpp"
#include "rsum/compare.hpp"

using namespace rsum;
using oracle::Gen;
using oracle::q;

TEST_CASE("prec_relation classification") {
    SurdValue t = SurdValue::sqrt(Rational(1, 3));
    CHECK(prec_relation({0, 1, 2, 2, 1}) == Relation::degenerate);
    CHECK(prec_relation({-t, t, t, t * Rational(2), Rational(1, 2)}) == Relation::lemma2);
    // M larger than t: lemma2 fails, lemma1 needs D - C + 2M <= B - A
    CHECK(prec_relation({-t, t, t, t * Rational(2), Rational(2)}) == Relation::none);
    // A, B, C, D = -t, 2t, kt, (k+1)t with M <= t/2: lemma1 (D - C + 2M = 2t <= 3t)
    for (int k = 2; k < 6; ++k) {
        CompareQuad qd{-t, t * Rational(2), t * Rational(k), t * Rational(k + 1), Rational(1, 4)};
        CHECK(lemma1_holds(qd));
        CHECK(prec_relation(qd) != Relation::none);
    }
}

TEST_CASE("check_seg_compare on fixed instances") {
    ExactDist d{WeightVector(std::vector<Rational>(9, Rational(1)))};
    // t = 1/3 on the normalized scale is 1 here; M = 1 <= t
    SurdValue t = d.weights().scale(SurdValue(Rational(1, 3)));
    CompareQuad qd{-t, t, t, t * Rational(2), Rational(1)};
    REQUIRE(prec_relation(qd) == Relation::lemma2);
    auto r = check_seg_compare(d, qd);
    CHECK(r.holds);
    // direct count: <-1,1> = (P(X=-1)+P(X=1))/2, <1,2> = P(X=1)/2 (no atom at 2)
    CHECK(r.rhs == d.prob_eq(SurdValue(1)));
    CHECK(r.lhs == d.prob_eq(SurdValue(1)) / 2);

    CompareQuad deg{0, 1, 5, 4, 1};
    auto dr = check_seg_compare(d, deg);
    CHECK(dr.lhs == 0);
    CHECK(dr.holds);
    CHECK_THROWS_AS(check_seg_compare(d, CompareQuad{0, 1, 5, 9, 1}), HypothesisNotSatisfied);
    CHECK_THROWS_AS(check_seg_compare(d, CompareQuad{-t, t, t, t * Rational(2), Rational(1, 2)}), HypothesisNotSatisfied);
}

TEST_CASE("segment injection: all large coordinates") {
    // S empty: every a_i >= (D - B)/2. X(v) in [C, D] with a_L.v_L > 0 uses the recursive flip only.
    WeightVector w({3, 3, 2});
    CompareQuad qd{-2, 4, 6, 8, 3};
    REQUIRE(lemma2_holds(qd));
    SegmentInjection f(w, qd);
    CHECK(f.small().empty());
    IntWeights a(w);
    for (std::uint32_t x = 0; x < 8; ++x) {
        SignVector v(x, 3);
        if (!f.in_domain(v)) continue;
        SignVector u = f.apply(v);
        CHECK(u == recursive_flip(a, v));
    }
}

TEST_CASE("segment injection is injective, lands in [A,B], respects endpoints") {
    Gen g(31);
    for (int it = 0; it < 50; ++it) {
        unsigned n = static_cast<unsigned>(g.uniform(2, 10));
        WeightVector w = g.weight_vector(n, 10, 3);
        ExactDist d(w);
        CompareQuad qd = quadgen::lemma2_quad(g, d);
        SegmentInjection f(w, qd);
        auto rep = audit_injection(f, f.int_weights(), qd);
        INFO(rep.witness);
        CHECK(rep.ok());
    }
}

TEST_CASE("prefix injection for the first lemma") {
    Gen g(37);
    for (int it = 0; it < 50; ++it) {
        unsigned n = static_cast<unsigned>(g.uniform(2, 10));
        WeightVector w = g.weight_vector(n, 10, 3);
        ExactDist d(w);
        CompareQuad qd = quadgen::lemma1_quad(g, d);
        PrefixInjection f(w, qd);
        auto rep = audit_injection(f, IntWeights(w), qd, false);
        INFO(rep.witness);
        CHECK(rep.ok());
    }
}

TEST_CASE("theorem: Pr<C,D> <= Pr<A,B> on random instances") {
    Gen g(41);
    for (int it = 0; it < 500; ++it) {
        unsigned n = static_cast<unsigned>(g.uniform(1, 14));
        WeightVector w = g.weight_vector(n, 12, 4);
        ExactDist d(w);
        CompareQuad qd = g.uniform(0, 1) ? quadgen::lemma2_quad(g, d) : quadgen::lemma1_quad(g, d);
        auto r = check_seg_compare(d, qd);
        CHECK(r.holds);
        for (End lo : {End::closed, End::open, End::half})
            for (End hi : {End::closed, End::open, End::half}) CHECK(check_other_segment_types(d, qd, lo, hi).holds);
        if (qd.A.abs() <= qd.C && lemma1_holds(qd) && qd.D > qd.B) CHECK(check_semi_compare(d, qd).holds);
    }
}

TEST_CASE("semi-compare needs D > B") {
    // A = C = 0: the atom at 0 is inside [C,D> but not inside (A,B>
    ExactDist d{WeightVector({1, 1})};
    CompareQuad qd{0, 4, 0, 2, 1};
    CHECK(lemma1_holds(qd));
    CHECK(d.segment_prob(Segment::between(0, 2, End::closed, End::half)) >
          d.segment_prob(Segment::between(0, 4, End::open, End::half)));
    CHECK_THROWS_AS(check_semi_compare(d, qd), HypothesisNotSatisfied);
}

TEST_CASE("weaker 2-to-1 bound") {
    // |A| <= C, 2M <= C - A and 2(D - B) <= C - A
    Gen g(43);
    for (int it = 0; it < 200; ++it) {
        WeightVector w = g.weight_vector(static_cast<unsigned>(g.uniform(1, 12)), 12, 4);
        ExactDist d(w);
        CompareQuad qd = quadgen::lemma2_quad(g, d);
        CHECK(d.hpr(qd.C, qd.D) <= 2 * d.hpr(qd.A, qd.B));
    }
}
