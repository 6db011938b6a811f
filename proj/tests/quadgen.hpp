#pragma once
// Random quads satisfying one of the comparison hypotheses. Endpoints are often placed on
// atoms of X so the endpoint conventions get exercised.

#include "oracle.hpp"
#include "rsum/compare.hpp"

namespace quadgen {

using namespace rsum;

inline Rational pick_point(oracle::Gen& g, const ExactDist& d) {
    if (g.uniform(0, 2) == 0) {
        Rational total = 0;
        for (const auto& a : d.weights().weights()) total += a;
        return oracle::q(g.uniform(-1000, 1000), 1000) * total;
    }
    std::size_t i = static_cast<std::size_t>(g.uniform(0, static_cast<long>(d.support_size()) - 1));
    return Rational(Integer(d.scaled_value(i))) / d.scale();
}

inline Rational nonneg(oracle::Gen& g, const Rational& scale) {
    long k = g.uniform(0, 4);
    if (k == 0) return 0;
    return scale * oracle::q(g.uniform(0, 100), 100);
}

inline Rational absq(const Rational& x) { return x < 0 ? Rational(-x) : x; }

inline CompareQuad lemma2_quad(oracle::Gen& g, const ExactDist& d) {
    Rational M = d.weights().max_weight();
    for (;;) {
        Rational A = pick_point(g, d);
        Rational C = absq(pick_point(g, d));
        if (C < absq(A)) C = absq(A);
        if (C - A < 2 * M) C = A + 2 * M + nonneg(g, M);
        Rational half = (C - A) / 2;
        Rational gap = half - nonneg(g, half);
        Rational B, D;
        if (g.uniform(0, 1)) {
            D = pick_point(g, d);
            if (D <= C) D = C + M * oracle::q(g.uniform(1, 300), 100);
            B = D - gap;
        } else {
            B = pick_point(g, d);
            D = B + gap;
            if (D <= C) continue;
        }
        CompareQuad q{A, B, C, D, M};
        if (lemma2_holds(q)) return q;
    }
}

inline CompareQuad lemma1_quad(oracle::Gen& g, const ExactDist& d) {
    Rational M = d.weights().max_weight();
    for (;;) {
        Rational A = pick_point(g, d);
        Rational B = pick_point(g, d);
        if (B < A) std::swap(A, B);
        if (B - A <= 2 * M) B = A + 2 * M + M * oracle::q(g.uniform(1, 300), 100);
        Rational m = absq(A) < absq(B) ? absq(A) : absq(B);
        Rational C = m + nonneg(g, m + M);
        Rational room = B - A - 2 * M;
        Rational D = C + room - nonneg(g, room);
        CompareQuad q{A, B, C, D, M};
        if (lemma1_holds(q)) return q;
    }
}

}  // namespace quadgen
