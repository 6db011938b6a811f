#include "catch_amalgamated.hpp"
#include "oracle.hpp"
#include "rsum/certificates.hpp"

#include <sstream>

using namespace rsum;
using oracle::Gen;
using oracle::q;

namespace {

Poly P(const std::string& s) { return parse_poly(s); }

Catalog parse_text(const std::string& text) {
    std::istringstream in(text);
    return parse_catalog(in);
}

CertReport verify_text(const std::string& text) {
    auto cat = parse_text(text);
    return verify_certificate(cat.certs.at(0), &cat);
}

const Catalog& shipped() {
    static const Catalog c = load_catalog();
    return c;
}

// Schwartz-Zippel: distinct polynomials of low degree almost never agree at random rationals
bool agree_at_random_points(const Poly& a, const Poly& b, Gen& g) {
    auto vs = a.variables();
    for (const auto& v : b.variables()) vs.insert(v);
    for (int k = 0; k < 6; ++k) {
        std::map<std::string, Rational> at;
        for (const auto& v : vs) at[v] = g.rational(1000, 997) - q(1, 2);
        if (a.eval(at) != b.eval(at)) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("polynomial arithmetic and parsing") {
    CHECK(poly_identity(P("a^2 - b^2"), P("(a - b)*(a + b)")));
    CHECK_FALSE(poly_identity(P("a^2 - b^2"), P("(a - b)^2")));
    CHECK(P("0.0142") == Poly(q(71, 5000)));
    CHECK(P("3/4*x - x*0.75").is_zero());
    CHECK(P("-x^2") == -(Poly::var("x") * Poly::var("x")));
    CHECK(P("2*(x + 1)^3").degree() == 3);
    CHECK(P("x*y + 1").variables() == std::set<std::string>{"x", "y"});
    CHECK(P("1 - 2*x").is_affine());
    CHECK(P("2*x*y + x^2").str() == "x^2 + 2*x*y");
    CHECK(P("(s - 1)^2").eval({{"s", Rational(3)}}) == 4);
    PolyMacros m{{"S", P("1 - x^2")}};
    CHECK(parse_poly("2*S", m) == P("2 - 2*x^2"));
    CHECK_THROWS_AS(P("x/y"), ParseError);
    CHECK_THROWS_AS(P("x^-1"), ParseError);
    CHECK_THROWS_AS(P("(x + 1"), ParseError);
    CHECK_THROWS_AS(P("x $ 2"), ParseError);
}

TEST_CASE("published identities hold exactly") {
    CHECK(poly_identity(P("a1^4 - 11*a1^3 + 55*a1^2 - 52*a1 + 14"),
                        P("(a1^2 - 11/2*a1 + 3)^2 + 75/4*(a1 - 38/75)^2 + 14/75")));
    // t^2 (1/t^2 - 1 - C_t) for t <= 1/3 is a third of 2t^4 - 8t + 3
    CHECK(poly_identity(P("(1 - t^2) - (t^2 + 2*t^2*(1 - t^2) + 4*(t - t^2 - (t - t^4)/3))"),
                        P("(2*t^4 - 8*t + 3)/3")));
    // at a1 = 1/2 the first-pair slack of the 0.42 entry is exactly 0.08
    CHECK(P("2*(1 - a1)^2 - 0.42").eval({{"a1", q(1, 2)}}) == q(2, 25));
}

TEST_CASE("expansion agrees with evaluation") {
    Gen g(17);
    const char* vars[] = {"a", "b", "c"};
    for (int it = 0; it < 200; ++it) {
        auto rnd = [&] {
            Poly p(g.rational(9, 4));
            for (int k = 0; k < 3; ++k) p += Poly(g.rational(7, 3) - 2) * Poly::var(vars[g.uniform(0, 2)]);
            return p;
        };
        Poly x = rnd(), y = rnd(), z = rnd();
        Poly lhs = (x + y) * (x - z) * y;
        Poly rhs = x * x * y - x * y * z + y * y * x - y * y * z;
        CHECK(poly_identity(lhs, rhs));
        CHECK(agree_at_random_points(lhs, rhs, g));
        Poly off = rhs + Poly(q(1, 1000)) * Poly::var(vars[g.uniform(0, 2)]);
        CHECK_FALSE(poly_identity(lhs, off));
        CHECK_FALSE(agree_at_random_points(lhs, off, g));
    }
}

TEST_CASE("vertex enumeration") {
    auto cube = parse_text("cert c\n var x 0 1\n var y 0 1\n var z 0 1\n target 0\nend\n");
    CHECK(build_polytope(cube.certs[0]).vertices.size() == 8);
    auto tri = parse_text("cert c\n var x 0 1\n var y 0 1\n region 1 - x - y\n target 0\nend\n");
    auto T = build_polytope(tri.certs[0]);
    CHECK(T.vertices.size() == 3);
    CHECK(T.nonneg(P("1 - x - y")));
    CHECK_FALSE(T.nonneg(P("x - y")));
    auto r = T.range("x");
    CHECK(r.first == 0);
    CHECK(r.second == 1);
    // a nonlinear constraint does not shape the polytope
    auto disc = parse_text("cert c\n var x -1 1\n var y -1 1\n region 1 - x^2 - y^2\n target 0\nend\n");
    CHECK(build_polytope(disc.certs[0]).vertices.size() == 4);
}

TEST_CASE("univariate signs through Bernstein coefficients") {
    CHECK(univariate_sign(P("(x - 1/3)^2 + 1/10^6"), "x", 0, 1) == SignVerdict::nonnegative);
    CHECK(univariate_sign(P("x^2 - 1/4"), "x", 0, 1) == SignVerdict::negative);
    CHECK(univariate_sign(P("x^2 - 1/4"), "x", q(1, 2), 1) == SignVerdict::nonnegative);
    CHECK(univariate_sign(P("11*x^2 - 12*x + 3"), "x", q(1, 3), q(387, 1000)) == SignVerdict::nonnegative);
    CHECK(univariate_sign(P("11*x^2 - 12*x + 3"), "x", q(1, 3), q(389, 1000)) == SignVerdict::negative);
    CHECK(univariate_sign(P("x - 1/2"), "x", q(1, 2), q(1, 2)) == SignVerdict::nonnegative);
    // against dense exact sampling
    Gen g(5);
    for (int it = 0; it < 150; ++it) {
        Poly p;
        for (unsigned k = 0; k <= 4; ++k)
            p += Poly(g.rational(20, 5) - 2) * Poly::var("x").pow(k);
        Rational lo = g.rational(10, 10) - 1, hi = lo + g.rational(10, 10);
        auto s = univariate_sign(p, "x", lo, hi);
        bool sampled_negative = false;
        for (int k = 0; k <= 400; ++k)
            if (p.eval({{"x", lo + (hi - lo) * q(k, 400)}}) < 0) sampled_negative = true;
        INFO(p.str() << " on [" << lo << ", " << hi << "]");
        if (sampled_negative) CHECK(s == SignVerdict::negative);
        if (s == SignVerdict::nonnegative) CHECK_FALSE(sampled_negative);
    }
}

TEST_CASE("small certificates") {
    SECTION("zero certificate") {
        auto r = verify_text("cert zero\n var x 0 1\n target 0\nend\n");
        CHECK(r.ok());
        CHECK_NOTHROW(require_certificate(r));
    }
    SECTION("sum of squares") {
        auto r = verify_text("cert sos\n var x -2 2\n target x^2 - 2*x + 2\n term 1 ; square x - 1\n term 1\nend\n");
        CHECK(r.ok());
    }
    SECTION("identity mismatch") {
        auto r = verify_text("cert bad\n var x -2 2\n target x^2 - 2*x + 3\n term 1 ; square x - 1\n term 1\nend\n");
        CHECK_FALSE(r.identity_ok);
        CHECK(r.failure == CertFailure::identity);
        CHECK(r.failed_item == "target - terms = 1");
        CHECK_THROWS_AS(require_certificate(r), IdentityMismatch);
    }
    SECTION("linear factor negative at a vertex") {
        auto r = verify_text("cert bad\n var x 0 1\n target 1/2 - x\n term 1 ; linear 1/2 - x\nend\n");
        CHECK(r.identity_ok);
        CHECK_FALSE(r.signs_ok);
        CHECK_THROWS_AS(require_certificate(r), UnjustifiedFactor);
        auto ok = verify_text("cert good\n var x 0 1\n region 1/2 - x\n target 1/2 - x\n term 1 ; linear 1/2 - x\nend\n");
        CHECK(ok.ok());
    }
    SECTION("other unjustified factors") {
        CHECK(verify_text("cert n\n var x 0 1\n target -x\n term -1 ; linear x\nend\n").failure ==
              CertFailure::unjustified);
        CHECK(verify_text("cert n\n var x 0 1\n target x^2\n term 1 ; linear x^2\nend\n").failure ==
              CertFailure::unjustified);
        CHECK(verify_text("cert n\n var x 0 1\n target x\n term 1 ; region x\nend\n").failure ==
              CertFailure::unjustified);
        CHECK(verify_text("cert n\n var x 0 1\n target x^2 - 1/4\n term 1 ; univariate x^2 - 1/4\nend\n").failure ==
              CertFailure::unjustified);
        CHECK(verify_text("cert n\n var x 0 1\n var y 0 1\n target x*y\n term 1 ; univariate x*y\nend\n").failure ==
              CertFailure::unjustified);
        CHECK(verify_text("cert n\n var x 0 1\n target y^2\n term 1 ; square y\nend\n").failure ==
              CertFailure::unjustified);
    }
    SECTION("region unsatisfiable") {
        auto r = verify_text("cert e\n var x 0 1\n region x - 2\n target 0\nend\n");
        CHECK(r.failure == CertFailure::region);
        CHECK_THROWS_AS(require_certificate(r), RegionUnsatisfiable);
        // linear part fine, quadratic constraint misses every sample
        auto s = verify_text("cert e\n var x 0 1\n region x^2 - 4\n target 0\nend\n");
        CHECK_FALSE(s.region_ok);
        CHECK_THROWS_AS(require_certificate(s), RegionUnsatisfiable);
    }
    SECTION("references") {
        const char* base =
            "cert base\n var x 0 1\n target 3*x^2 + 1\n term 3 ; square x\n term 1\nend\n";
        auto good = parse_text(std::string(base) +
                               "cert use\n var x 0 1/2\n target 6*x^2 + 2\n term 2 ; ref:base 3*x^2 + 1\nend\n");
        CHECK(verify_certificate(good.certs[1], &good).ok());
        CHECK_FALSE(verify_certificate(good.certs[1]).ok());  // no catalog to resolve against
        auto wide = parse_text(std::string(base) +
                               "cert use\n var x 0 2\n target 3*x^2 + 1\n term 1 ; ref:base 3*x^2 + 1\nend\n");
        CHECK(verify_certificate(wide.certs[1], &wide).failure == CertFailure::unjustified);
        auto cyc = parse_text("cert a\n var x 0 1\n target x\n term 1 ; ref:b x\nend\n"
                              "cert b\n var x 0 1\n target x\n term 1 ; ref:a x\nend\n");
        auto r = verify_certificate(cyc.certs[0], &cyc);
        CHECK_FALSE(r.ok());
        CHECK(r.failed_item.find("cycle") != std::string::npos);
    }
}

TEST_CASE("catalog format errors") {
    CHECK_THROWS_AS(parse_text("cert a\n var x 0 1\n target x\n"), ParseError);
    CHECK_THROWS_AS(parse_text("target x\n"), ParseError);
    CHECK_THROWS_AS(parse_text("cert a\n var x 1 0\n target x\nend\n"), ParseError);
    CHECK_THROWS_AS(parse_text("cert a\n target x\n term 1 ; cube x\nend\n"), ParseError);
    CHECK_THROWS_AS(parse_text("cert a\n target x\n term x ; square x\nend\n"), ParseError);
    CHECK_THROWS_AS(parse_text("cert a\n target x\nend\ncert a\n target x\nend\n"), ParseError);
    auto c = parse_text("let S = 1 - x\ncert a\n let T = 2*S\n var x 0 1\n target T\n term 2 ; linear S\nend\n"
                        "delegate d numerics some text\n");
    CHECK(c.certs[0].target == P("2 - 2*x"));
    CHECK(c.delegates.size() == 1);
    CHECK(c.delegates[0].module == "numerics");
    CHECK(verify_certificate(c.certs[0], &c).ok());
}

TEST_CASE("shipped catalog verifies") {
    const auto& cat = shipped();
    CHECK(cat.certs.size() >= 40);
    auto rep = verify_catalog(cat);
    for (const auto& e : rep.entries) {
        INFO(e.id << ": " << e.failed_item);
        CHECK(e.ok());
        if (!e.analytic) {
            CHECK(e.samples > 0);
            CHECK(e.min_target_sampled >= 0);
        }
    }
    for (const auto& d : rep.delegates) {
        INFO(d.id << ": " << d.detail);
        CHECK(d.ok);
    }
    CHECK(rep.ok());
    CHECK(rep.passed() == cat.certs.size());
    for (const char* id : {"tsum.case1", "tsum.case3.sum", "aux05.quartic", "tail2.derivative", "l34.quadratic",
                           "five.t12", "sfin.c1", "sfin.bad32.kappa"})
        CHECK(cat.find(id) != nullptr);
}

TEST_CASE("targets are nonnegative at random points of each region") {
    // independent of the decompositions: plain double evaluation at rejection-sampled points
    Gen g(2024);
    for (const auto& c : shipped().certs) {
        if (!c.analytic.empty()) continue;
        int accepted = 0;
        for (int it = 0; it < 4000 && accepted < 150; ++it) {
            std::map<std::string, Rational> at;
            for (const auto& v : c.vars) at[v.name] = v.lo + (v.hi - v.lo) * q(g.uniform(0, 1000), 1000);
            bool in = true;
            for (const auto& r : c.region) in = in && r.eval(at) >= 0;
            if (!in) continue;
            ++accepted;
            INFO(c.id);
            CHECK(c.target.eval(at) >= 0);
        }
    }
}

TEST_CASE("perturbing any coefficient breaks the identity") {
    Gen g(77);
    for (const auto& c : shipped().certs) {
        if (!c.analytic.empty() || c.terms.empty()) continue;
        Certificate m = c;
        auto& t = m.terms[static_cast<std::size_t>(g.uniform(0, static_cast<long>(m.terms.size()) - 1))];
        t.coef += q(1, 1000);
        auto r = verify_certificate(m, &shipped());
        INFO(c.id);
        CHECK(r.failure == CertFailure::identity);
        CHECK_THROWS_AS(require_certificate(r), IdentityMismatch);

        Certificate n = c;
        n.target += Poly(q(1, 997)) * (c.vars.empty() ? Poly(1) : Poly::var(c.vars[0].name));
        CHECK_FALSE(verify_certificate(n, &shipped()).identity_ok);
    }
}

TEST_CASE("sum below integral, independently") {
    auto sum_minus_bound = [](double t) {
        double s = 0;
        for (int k = 2; k < std::ceil(1 / t); ++k) s += 1 - k * k * t * t;
        return s - (1 / t - 1 - (1 / t - t * t) / 3);
    };
    for (int k = 1; k <= 300; ++k) CHECK(sum_minus_bound(k / 900.0) <= 1e-12);
    auto r = verify_certificate(*shipped().find("tsum.case3.sum"));
    CHECK(r.ok());
    CHECK(r.samples == 200);
    auto bad = parse_text("cert x\n var t 0 1/2\n analytic no-such-check\nend\n");
    CHECK(verify_certificate(bad.certs[0]).failure == CertFailure::unjustified);
}

TEST_CASE("delegated steps") {
    for (const auto& d : shipped().delegates) {
        auto r = run_delegate(d);
        INFO(d.id << " " << r.detail);
        CHECK(r.ok);
    }
    CHECK_FALSE(run_delegate({"x", "nowhere", ""}).ok);
}
