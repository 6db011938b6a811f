#include "catch_amalgamated.hpp"
#include "oracle.hpp"
#include "rsum/dist.hpp"
#include "rsum/prawitz.hpp"

#include <cmath>
#include <map>

using namespace rsum;
using oracle::Gen;
using oracle::q;

namespace {

// loose targets keep the unit suite quick; the acceptance binary uses the default 1e-6
constexpr double kFast = 2e-6;

double max_normalized(const WeightVector& w) { return w.normalized(0); }

}  // namespace

TEST_CASE("characteristic function and envelopes") {
    CHECK(phi_X(WeightVector({Rational(1), Rational(2)}), 0) == 1);
    CHECK(phi_X(WeightVector({Rational(1)}), M_PI) == Catch::Approx(-1.0));
    Gen g(41);
    double th = theta_root();
    for (int it = 0; it < 100; ++it) {
        auto w = g.weight_vector(static_cast<unsigned>(g.uniform(1, 30)), 20, 3);
        double a1 = max_normalized(w);
        for (int j = 0; j < 40; ++j) {
            double v = g.real(0, 4 * M_PI / a1);
            double phi = phi_X(w, v);
            if (a1 * v <= th) CHECK(std::fabs(phi) <= std::exp(-v * v / 2) + 1e-12);
            CHECK(std::fabs(phi) <= h_envelope(v, a1) + 1e-12);
            CHECK(std::fabs(phi - std::exp(-v * v / 2)) <= g_envelope(v, a1) + 1e-12);
        }
    }
}

TEST_CASE("kernel") {
    for (double u : {0.1, 0.37, 0.5, 0.93})
        CHECK(prawitz_kernel(u, 0, 12) == Catch::Approx(1 - u).margin(1e-14));
    // both terms tend to sin(Tx)/pi at the right end
    CHECK(prawitz_kernel(1 - 1e-9, 1.3, 7) == Catch::Approx(0).margin(1e-7));
    CHECK(prawitz_kernel(1, 1.3, 7) == 0);
    CHECK(prawitz_kernel(1e-9, 1.3, 7) == Catch::Approx((M_PI - 7 * 1.3) / M_PI).margin(1e-7));
    Gen g(8);
    for (int i = 0; i < 2000; ++i) {
        double u = g.real(1e-6, 1 - 1e-6), x = g.real(0, 2), T = g.real(1, 20);
        CHECK(std::fabs(prawitz_kernel(u, x, T)) <= 1 + 2 * T * x / M_PI + 1e-12);
    }
}

TEST_CASE("derivative bounds hold on sampled difference quotients") {
    struct P {
        double a, x, T;
    };
    for (P p : {P{0.31, 1, 10}, P{0.22, 1.65, 14.5}, P{0.22, 0.35, 14.5}}) {
        auto B = derivative_bounds(p.x, p.T);
        auto f1 = [&](double u) { return std::fabs(prawitz_kernel(u, p.x, p.T)) * g_envelope(p.T * u, p.a); };
        auto f2 = [&](double u) { return std::fabs(prawitz_kernel(u, p.x, p.T)) * h_envelope(p.T * u, p.a); };
        auto f3 = [&](double u) { return prawitz_kernel(u, p.x, p.T) * std::exp(-p.T * p.T * u * u / 2); };
        const double h = 1e-7;
        double m1 = 0, m2 = 0, m3 = 0;
        for (int k = 1; k < 20000; ++k) {
            double u = k / 20000.0;
            if (u + h < 0.4) {
                m1 = std::max(m1, std::fabs(f1(u + h) - f1(u)) / h);
                m3 = std::max(m3, std::fabs(f3(u + h) - f3(u)) / h);
            } else if (u > 0.4 && u + h < 1) {
                m2 = std::max(m2, std::fabs(f2(u + h) - f2(u)) / h);
            }
        }
        CHECK(m1 <= B.B1);
        CHECK(m2 <= B.B2);
        CHECK(m3 <= B.B3);
        CHECK(std::exp(-0.5) / std::sqrt(2 * M_PI) < B.B4);
    }
}

TEST_CASE("Prawitz bound reproduces the reference values") {
    auto r = prawitz_bound({q(31, 100), 1, 10, 0.4, 0, 0, 0, kFast});
    CHECK(r.total.upper() <= 0.09115);
    CHECK(std::fabs(r.total.mid - 0.09114) <= 2e-5);
    CHECK(r.total.rad <= 1e-5);
    // the four pieces against an independent adaptive evaluation
    auto e = prawitz_bound({q(31, 100), 1, 10, 0.4, 0, 0, 0, kFast}, false);
    CHECK(r.S1.contains(e.S1.mid));
    CHECK(r.S2.contains(e.S2.mid));
    CHECK(r.S3.contains(e.S3.mid));
    CHECK(r.S4.contains(e.S4.mid));
    CHECK(!e.rigorous);

    auto s = prawitz_bound({q(22, 100), 1.65, 14.5, 0.4, 0, 0, 0, kFast});
    CHECK(s.total.upper() < 0.0314);
}

TEST_CASE("Prawitz bound edge cases") {
    auto r = prawitz_bound({q(31, 100), 1, 10, 0, 0, 0, 0, kFast});
    CHECK(r.S1.mid == 0);
    CHECK(r.S3.mid == 0);
    CHECK(r.N1 == 0);
    CHECK(r.total.contains(r.S2.mid + r.S4.mid));
    CHECK_THROWS_AS(prawitz_bound({q(31, 100), 1, 10, 1.5}), InvalidParams);
    CHECK_THROWS_AS(prawitz_bound({Rational(1), 1, 10, 0.4}), InvalidParams);
    CHECK_THROWS_AS(prawitz_bound({q(31, 100), 1, -2, 0.4}), InvalidParams);
    CHECK_THROWS_AS(prawitz_bound({q(31, 100), -1, 10, 0.4}), InvalidParams);
}

TEST_CASE("enclosures shrink as panels grow") {
    double prev = 1;
    for (std::size_t N : {1000u, 4000u, 16000u, 64000u}) {
        auto r = prawitz_bound({q(31, 100), 1, 10, 0.4, N, N, N});
        CHECK(r.total.rad < prev);
        prev = r.total.rad;
    }
}

TEST_CASE("largest weight 0.31") {
    auto rep = verify_max_weight_031(kFast);
    CHECK(rep.bound_ok);
    CHECK(rep.prob_lt_1 >= 0.7501);
    CHECK(rep.prob_abs_lt_1 >= 0.5002);
    CHECK(rep.monotone_ok);
    CHECK(rep.ok());
    // exact sums in range clear 0.5002
    Gen g(99);
    for (int it = 0; it < 20; ++it) {
        auto a = g.bounded_weights(static_cast<unsigned>(g.uniform(11, 16)), q(31, 100), 6, 12);
        WeightVector w(a);
        ExactDist d(w);
        Rational p = d.prob_lt(w.sigma()) - d.prob_le(-w.sigma());
        INFO(w.str());
        CHECK(p.get_d() >= 0.5002);
    }
}

TEST_CASE("sequence bookkeeping and single pairs") {
    const auto& xs = sequence_points();
    CHECK(xs.size() == 94);
    CHECK(xs.front() == 0.35);
    CHECK(xs.back() == 1.65);
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) CHECK(xs[i] < xs[i + 1]);
    SequenceSettings s;
    s.target = kFast;
    auto first = check_sequence_pair(xs, 0, s);
    CHECK(first.ok);
    CHECK(first.gauss_step.upper() < 0.084 - first.bound.upper());
    // the tightest pair needs the default budget
    auto tight = check_sequence_pair(xs, 56);
    CHECK(tight.ok);
    CHECK(tight.margin >= 2e-5);
    s.threshold = 0.02;
    CHECK_FALSE(check_sequence_pair(xs, 0, s).ok);
    // a short synthetic grid exercises the report and the failure path
    SequenceSettings t;
    t.target = kFast;
    auto rep = verify_sequence({1.2, 1.38, 1.65}, t, [](const PairCheck&) {});
    CHECK(rep.pairs == 2);
    CHECK(rep.ok());
    CHECK(rep.endpoint_prob > 0.919);
    t.threshold = 0.05;
    auto bad = verify_sequence({0.35, 0.5, 1.65}, t, [](const PairCheck&) {});
    CHECK_FALSE(bad.ok());
    CHECK_THROWS_AS(require_sequence(bad), MarginViolated);
}

TEST_CASE("largest weight 0.22 case split") {
    std::map<double, std::string> expect{{0.0, "below_a1"}, {0.1, "below_a1"}, {0.3, "middle"},
                                         {0.35, "sequence"}, {0.9, "sequence"}, {2.0, "tail"}};
    for (auto [x, branch] : expect) {
        auto r = verify_max_weight_022(x, 0.22, kFast);
        INFO("x = " << x);
        CHECK(r.branch == branch);
        CHECK(r.ok);
    }
    auto small = verify_max_weight_022(0.15, 0.1, kFast);
    CHECK(small.branch == "small");
    CHECK(small.ok);
    auto mid = verify_max_weight_022(0.35 - 1e-9, 0.22, kFast);
    CHECK(mid.derivative_ok);
    CHECK(mid.lhs >= mid.rhs);
}

TEST_CASE("soundness against exact sums") {
    // the bound depends only on (a1, x, T, q), so each is computed once and reused
    Gen g(1234);
    for (double x : {0.5, 1.0, 1.5}) {
        auto b = prawitz_bound({q(31, 100), x, 10, 0.4, 0, 0, 0, 1e-5}).total;
        for (int it = 0; it < 10; ++it) {
            auto a = g.bounded_weights(static_cast<unsigned>(g.uniform(11, 16)), q(31, 100), 5, 12);
            WeightVector w(a);
            ExactDist d(w);
            double gap = gauss_cdf(x) - d.prob_lt(w.scale(SurdValue(Rational(x)))).get_d();
            INFO(w.str() << " x = " << x);
            CHECK(gap <= b.upper());
        }
    }
    // largest weight 0.22 needs n >= 21; near-equal integer weights keep the support small
    for (int it = 0; it < 6; ++it) {
        auto a = g.bounded_weights(static_cast<unsigned>(g.uniform(21, 24)), q(22, 100), 27, 29);
        WeightVector w(a);
        ExactDist d(w);
        double a1 = max_normalized(w);
        for (double x : {0.0, 0.1, 0.3, 0.5, 0.8, 1.2, 1.7}) {
            double p = d.prob_le(w.scale(SurdValue(Rational(x)))).get_d();
            CHECK(p >= gauss_cdf(x) - std::max(0.084, gauss_cdf(a1) - 0.5));
        }
    }
}
