#pragma once

#include "rsum/gridcert.hpp"
#include "rsum/numerics.hpp"
#include "rsum/parallel.hpp"
#include "rsum/poly.hpp"
#include "rsum/rational.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rsum {

struct IdentityMismatch : std::domain_error {
    using std::domain_error::domain_error;
};
struct UnjustifiedFactor : std::domain_error {
    using std::domain_error::domain_error;
};
struct RegionUnsatisfiable : std::domain_error {
    using std::domain_error::domain_error;
};

enum class FactorTag { square, region, linear, univariate, ref };

inline const char* tag_name(FactorTag t) {
    switch (t) {
        case FactorTag::square: return "square";
        case FactorTag::region: return "region";
        case FactorTag::linear: return "linear";
        case FactorTag::univariate: return "univariate";
        default: return "ref";
    }
}

struct Factor {
    FactorTag tag = FactorTag::square;
    std::string ref;  // target certificate id for FactorTag::ref
    std::string text;
    Poly poly;

    // square contributes poly^2, everything else poly itself
    Poly value() const { return tag == FactorTag::square ? poly * poly : poly; }
};

struct CertTerm {
    Rational coef;
    std::string coef_text;
    std::vector<Factor> factors;

    Poly value() const {
        Poly p(coef);
        for (const auto& f : factors) p *= f.value();
        return p;
    }
};

struct VarBox {
    std::string name;
    Rational lo, hi;
};

struct Certificate {
    std::string id, title;
    std::vector<VarBox> vars;
    std::vector<Poly> region;  // each entry means poly >= 0
    std::vector<std::string> region_text;
    Poly target;
    std::string target_text;
    std::vector<CertTerm> terms;
    std::string analytic;  // non-empty: checked by a built-in exact routine instead
    std::vector<std::string> notes;

    Poly decomposition() const {
        Poly s;
        for (const auto& t : terms) s += t.value();
        return s;
    }
};

struct Delegation {
    std::string id, module, text;
};

struct Catalog {
    std::vector<Certificate> certs;
    std::vector<Delegation> delegates;

    const Certificate* find(const std::string& id) const {
        for (const auto& c : certs)
            if (c.id == id) return &c;
        return nullptr;
    }
};

namespace detail {

inline std::vector<std::string> split_on(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(std::string(trim(cur)));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(std::string(trim(cur)));
    return out;
}

inline std::pair<std::string, std::string> head_rest(const std::string& s) {
    auto t = std::string(trim(s));
    auto sp = t.find_first_of(" \t");
    if (sp == std::string::npos) return {t, ""};
    return {t.substr(0, sp), std::string(trim(std::string_view(t).substr(sp)))};
}

}  // namespace detail

inline Catalog parse_catalog(std::istream& in) {
    Catalog cat;
    PolyMacros global, local;
    Certificate* cur = nullptr;
    std::string raw;
    int lineno = 0;
    auto fail = [&](const std::string& what) -> void {
        throw ParseError("catalog line " + std::to_string(lineno) + ": " + what);
    };
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw.substr(0, raw.find('#'));
        if (detail::trim(line).empty()) continue;
        auto [kw, rest] = detail::head_rest(line);
        try {
            if (kw == "cert") {
                if (cur) fail("nested cert");
                if (rest.empty()) fail("cert needs an id");
                if (cat.find(rest)) fail("duplicate id " + rest);
                cat.certs.push_back({});
                cur = &cat.certs.back();
                cur->id = rest;
                local = global;
            } else if (kw == "end") {
                if (!cur) fail("end without cert");
                if (!cur->analytic.empty() && !cur->terms.empty()) fail("analytic entry with terms");
                if (cur->analytic.empty() && cur->target_text.empty()) fail("entry without target");
                cur = nullptr;
            } else if (kw == "let") {
                auto eq = rest.find('=');
                if (eq == std::string::npos) fail("let needs '='");
                std::string name(detail::trim(std::string_view(rest).substr(0, eq)));
                Poly body = parse_poly(rest.substr(eq + 1), cur ? local : global);
                (cur ? local : global)[name] = body;
                if (!cur) local = global;
            } else if (kw == "delegate") {
                if (cur) fail("delegate inside cert");
                auto [id, r2] = detail::head_rest(rest);
                auto [mod, text] = detail::head_rest(r2);
                if (id.empty() || mod.empty()) fail("delegate needs an id and a module");
                cat.delegates.push_back({id, mod, text});
            } else {
                if (!cur) fail("'" + kw + "' outside cert");
                if (kw == "title") {
                    cur->title = rest;
                } else if (kw == "note") {
                    cur->notes.push_back(rest);
                } else if (kw == "var") {
                    std::istringstream ss(rest);
                    std::string n, lo, hi, extra;
                    if (!(ss >> n >> lo >> hi) || (ss >> extra)) fail("var NAME LO HI");
                    Rational l = parse_rational(lo), h = parse_rational(hi);
                    if (l > h) fail("empty range for " + n);
                    cur->vars.push_back({n, l, h});
                } else if (kw == "region") {
                    cur->region.push_back(parse_poly(rest, local));
                    cur->region_text.push_back(rest);
                } else if (kw == "target") {
                    cur->target = parse_poly(rest, local);
                    cur->target_text = rest;
                } else if (kw == "analytic") {
                    cur->analytic = rest;
                } else if (kw == "term") {
                    auto parts = detail::split_on(rest, ';');
                    CertTerm t;
                    Poly c = parse_poly(parts[0], local);
                    if (!c.is_constant()) fail("term coefficient must be a constant");
                    t.coef = c.constant();
                    t.coef_text = parts[0];
                    for (std::size_t i = 1; i < parts.size(); ++i) {
                        auto [tag, expr] = detail::head_rest(parts[i]);
                        Factor f;
                        if (tag == "square") f.tag = FactorTag::square;
                        else if (tag == "region") f.tag = FactorTag::region;
                        else if (tag == "linear") f.tag = FactorTag::linear;
                        else if (tag == "univariate") f.tag = FactorTag::univariate;
                        else if (tag.rfind("ref:", 0) == 0) {
                            f.tag = FactorTag::ref;
                            f.ref = tag.substr(4);
                        } else {
                            fail("unknown factor tag '" + tag + "'");
                        }
                        if (expr.empty()) fail("factor without expression");
                        f.text = expr;
                        f.poly = parse_poly(expr, local);
                        t.factors.push_back(std::move(f));
                    }
                    cur->terms.push_back(std::move(t));
                } else {
                    fail("unknown keyword '" + kw + "'");
                }
            }
        } catch (const ParseError& e) {
            std::string m = e.what();
            if (m.rfind("catalog line", 0) == 0) throw;
            fail(m);
        }
    }
    if (cur) throw ParseError("catalog ends inside cert " + cur->id);
    return cat;
}

inline std::string default_catalog_path() { return std::string(RSUM_DATA_DIR) + "/certificates.txt"; }

inline Catalog load_catalog(const std::string& path = default_catalog_path()) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open catalog " + path);
    return parse_catalog(in);
}

// ---------------------------------------------------------------------------
// Polytope of the box bounds and the affine region constraints, by exact vertex enumeration.

struct Polytope {
    std::vector<std::string> vars;
    std::vector<Poly> ineqs;  // affine, each >= 0
    std::vector<std::vector<Rational>> vertices;

    std::map<std::string, Rational> point(const std::vector<Rational>& x) const {
        std::map<std::string, Rational> m;
        for (std::size_t i = 0; i < vars.size(); ++i) m[vars[i]] = x[i];
        return m;
    }
    // affine p >= 0 on the polytope iff it holds at every vertex
    bool nonneg(const Poly& p) const {
        for (const auto& v : vertices)
            if (p.eval(point(v)) < 0) return false;
        return true;
    }
    std::pair<Rational, Rational> range(const std::string& v) const {
        auto it = std::find(vars.begin(), vars.end(), v);
        std::size_t i = static_cast<std::size_t>(it - vars.begin());
        Rational lo = vertices.front()[i], hi = lo;
        for (const auto& x : vertices) {
            lo = std::min(lo, x[i]);
            hi = std::max(hi, x[i]);
        }
        return {lo, hi};
    }
};

namespace detail {

// Solve A x = b exactly; false if singular.
inline bool solve_exact(std::vector<std::vector<Rational>> A, std::vector<Rational> b, std::vector<Rational>& x) {
    std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        while (p < n && A[p][c] == 0) ++p;
        if (p == n) return false;
        std::swap(A[p], A[c]);
        std::swap(b[p], b[c]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == c || A[r][c] == 0) continue;
            Rational f = A[r][c] / A[c][c];
            for (std::size_t k = c; k < n; ++k) A[r][k] -= f * A[c][k];
            b[r] -= f * b[c];
        }
    }
    x.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = b[i] / A[i][i];
        x[i].canonicalize();
    }
    return true;
}

}  // namespace detail

inline Polytope build_polytope(const Certificate& c) {
    Polytope P;
    for (const auto& v : c.vars) {
        P.vars.push_back(v.name);
        P.ineqs.push_back(Poly::var(v.name) - Poly(v.lo));
        P.ineqs.push_back(Poly(v.hi) - Poly::var(v.name));
    }
    for (const auto& r : c.region)
        if (r.is_affine()) P.ineqs.push_back(r);
    std::size_t n = P.vars.size(), m = P.ineqs.size();
    std::vector<std::vector<Rational>> rows(m, std::vector<Rational>(n));
    std::vector<Rational> rhs(m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) rows[i][j] = P.ineqs[i].linear_coeff(P.vars[j]);
        rhs[i] = -P.ineqs[i].constant();
    }
    std::set<std::vector<Rational>> seen;
    std::vector<std::size_t> pick;
    std::function<void(std::size_t)> rec = [&](std::size_t start) {
        if (pick.size() == n) {
            std::vector<std::vector<Rational>> A;
            std::vector<Rational> b;
            for (auto i : pick) {
                A.push_back(rows[i]);
                b.push_back(rhs[i]);
            }
            std::vector<Rational> x;
            if (!detail::solve_exact(A, b, x)) return;
            for (std::size_t i = 0; i < m; ++i) {
                Rational s = -rhs[i];
                for (std::size_t j = 0; j < n; ++j) s += rows[i][j] * x[j];
                if (s < 0) return;
            }
            seen.insert(x);
            return;
        }
        for (std::size_t i = start; i + (n - pick.size()) <= m; ++i) {
            pick.push_back(i);
            rec(i + 1);
            pick.pop_back();
        }
    };
    rec(0);
    P.vertices.assign(seen.begin(), seen.end());
    return P;
}

// ---------------------------------------------------------------------------
// Exact nonnegativity of a univariate polynomial on [lo, hi] through Bernstein coefficients.

enum class SignVerdict { nonnegative, negative, undecided };

namespace detail {

inline Rational binom(unsigned n, unsigned k) {
    Integer r;
    mpz_bin_uiui(r.get_mpz_t(), n, k);
    return Rational(r);
}

// power-basis coefficients of p(lo + (hi - lo) u)
inline std::vector<Rational> rescale(const std::vector<Rational>& c, const Rational& lo, const Rational& hi) {
    std::size_t n = c.size();
    std::vector<Rational> out(n, Rational(0));
    // Horner in the polynomial ring: r(u) = r(u) * (lo + w u) + c_k
    Rational w = hi - lo;
    for (std::size_t k = n; k-- > 0;) {
        std::vector<Rational> next(n, Rational(0));
        for (std::size_t j = 0; j < n; ++j) {
            if (out[j] == 0) continue;
            next[j] += out[j] * lo;
            if (j + 1 < n) next[j + 1] += out[j] * w;
        }
        next[0] += c[k];
        out = std::move(next);
    }
    for (auto& x : out) x.canonicalize();
    return out;
}

inline std::vector<Rational> to_bernstein(const std::vector<Rational>& a) {
    unsigned n = static_cast<unsigned>(a.size() - 1);
    std::vector<Rational> b(n + 1, Rational(0));
    for (unsigned k = 0; k <= n; ++k)
        for (unsigned j = 0; j <= k; ++j) b[k] += binom(k, j) / binom(n, j) * a[j];
    for (auto& x : b) x.canonicalize();
    return b;
}

inline SignVerdict bernstein_sign(const std::vector<Rational>& b, int depth) {
    if (b.front() < 0 || b.back() < 0) return SignVerdict::negative;
    if (std::all_of(b.begin(), b.end(), [](const Rational& x) { return x >= 0; })) return SignVerdict::nonnegative;
    if (depth == 0) return SignVerdict::undecided;
    // de Casteljau at u = 1/2
    std::size_t n = b.size();
    std::vector<Rational> left(n), right(n), w = b;
    for (std::size_t r = 0; r < n; ++r) {
        left[r] = w[0];
        right[n - 1 - r] = w[n - 1 - r];
        for (std::size_t i = 0; i + 1 < n - r; ++i) {
            w[i] = (w[i] + w[i + 1]) / 2;
            w[i].canonicalize();
        }
    }
    SignVerdict l = bernstein_sign(left, depth - 1);
    if (l == SignVerdict::negative) return l;
    SignVerdict r = bernstein_sign(right, depth - 1);
    if (r != SignVerdict::nonnegative) return r;
    return l;
}

}  // namespace detail

inline SignVerdict univariate_sign(const Poly& p, const std::string& v, const Rational& lo, const Rational& hi,
                                   int depth = 40) {
    auto c = p.univariate_coeffs(v);
    if (lo == hi) return p.eval({{v, lo}}) >= 0 ? SignVerdict::nonnegative : SignVerdict::negative;
    return detail::bernstein_sign(detail::to_bernstein(detail::rescale(c, lo, hi)), depth);
}

// ---------------------------------------------------------------------------
// Analytic entries: exact checks that are not polynomial identities.

namespace detail {

// sum_{k=2}^{ceil(1/t)-1} (1 - (kt)^2) <= 1/t - 1 - (1/t - t^2)/3, checked exactly at
// 200 rational t spread over the entry's range of t.
inline bool sum_below_integral(const Certificate& c, std::string& detail_out, std::size_t& samples) {
    if (c.vars.size() != 1) {
        detail_out = "expects a single variable t";
        return false;
    }
    const auto& v = c.vars[0];
    for (unsigned k = 1; k <= 200; ++k) {
        Rational t = v.lo + (v.hi - v.lo) * ratio(k, 200);
        t.canonicalize();
        if (t <= 0) continue;
        Rational inv = 1 / t;
        Integer K = ceil_q(inv) - 1;
        Rational sum = 0;
        for (Integer j = 2; j <= K; ++j) sum += 1 - j * j * t * t;
        Rational bound = inv - 1 - (inv - t * t) / 3;
        ++samples;
        if (sum > bound) {
            detail_out = "sum exceeds the integral at t = " + t.get_str();
            return false;
        }
    }
    return true;
}

using AnalyticCheck = std::function<bool(const Certificate&, std::string&, std::size_t&)>;

inline const std::map<std::string, AnalyticCheck>& analytic_checks() {
    static const std::map<std::string, AnalyticCheck> m{{"sum-below-integral", sum_below_integral}};
    return m;
}

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace detail

// ---------------------------------------------------------------------------

enum class CertFailure { none, identity, unjustified, region };

inline const char* failure_name(CertFailure f) {
    switch (f) {
        case CertFailure::identity: return "IdentityMismatch";
        case CertFailure::unjustified: return "UnjustifiedFactor";
        case CertFailure::region: return "RegionUnsatisfiable";
        default: return "";
    }
}

struct CertReport {
    std::string id;
    bool analytic = false;
    bool identity_ok = false;
    bool signs_ok = false;
    bool region_ok = false;
    CertFailure failure = CertFailure::none;
    std::string failed_item;
    std::size_t vertices = 0;
    std::size_t samples = 0;          // sampled points that satisfy the full region
    double min_target_sampled = 0;    // diagnostic; >= 0 whenever the checks pass
    std::vector<std::string> notes;

    bool ok() const { return failure == CertFailure::none && identity_ok && signs_ok && region_ok; }
};

struct CertOptions {
    std::size_t random_samples = 64;
    int bernstein_depth = 40;
};

namespace detail {

class CertVerifier {
public:
    CertVerifier(const Catalog* cat, CertOptions opt) : cat_(cat), opt_(opt) {}

    CertReport run(const Certificate& c, std::vector<std::string>& stack) {
        CertReport r;
        r.id = c.id;
        r.notes = c.notes;
        auto fail = [&](CertFailure f, const std::string& item) {
            if (r.failure == CertFailure::none) {
                r.failure = f;
                r.failed_item = item;
            }
        };
        if (!c.analytic.empty()) {
            r.analytic = true;
            auto it = analytic_checks().find(c.analytic);
            if (it == analytic_checks().end()) {
                fail(CertFailure::unjustified, "unknown analytic check '" + c.analytic + "'");
                return r;
            }
            std::string d;
            bool ok = it->second(c, d, r.samples);
            r.identity_ok = r.region_ok = true;
            r.signs_ok = ok;
            if (!ok) fail(CertFailure::unjustified, d);
            return r;
        }

        std::set<std::string> declared;
        for (const auto& v : c.vars) declared.insert(v.name);
        auto undeclared = [&](const Poly& p) {
            for (const auto& v : p.variables())
                if (!declared.count(v)) return v;
            return std::string();
        };

        // identity
        Poly diff = c.target - c.decomposition();
        r.identity_ok = diff.is_zero();
        if (!r.identity_ok) fail(CertFailure::identity, "target - terms = " + diff.str());

        // region: polytope vertices plus sampled convex combinations must meet every constraint
        for (std::size_t i = 0; i < c.region.size(); ++i)
            if (auto v = undeclared(c.region[i]); !v.empty())
                fail(CertFailure::unjustified, "region '" + c.region_text[i] + "' uses undeclared " + v);
        if (auto v = undeclared(c.target); !v.empty()) fail(CertFailure::unjustified, "target uses undeclared " + v);
        if (r.failure == CertFailure::unjustified) return r;

        Polytope P = build_polytope(c);
        r.vertices = P.vertices.size();
        if (P.vertices.empty()) {
            fail(CertFailure::region, "linear constraints are infeasible");
            return r;
        }
        std::vector<std::vector<Rational>> pts = P.vertices;
        std::mt19937_64 rng(fnv1a(c.id));
        std::uniform_int_distribution<int> wdist(0, 8);
        for (std::size_t s = 0; s < opt_.random_samples; ++s) {
            std::vector<Rational> x(P.vars.size(), Rational(0));
            long tot = 0;
            std::vector<int> w(P.vertices.size());
            for (auto& wi : w) tot += (wi = wdist(rng));
            if (tot == 0) {
                w[s % w.size()] = 1;
                tot = 1;
            }
            for (std::size_t k = 0; k < w.size(); ++k)
                if (w[k])
                    for (std::size_t j = 0; j < x.size(); ++j) x[j] += ratio(w[k], tot) * P.vertices[k][j];
            for (auto& xj : x) xj.canonicalize();
            pts.push_back(std::move(x));
        }
        bool first = true;
        for (const auto& x : pts) {
            auto at = P.point(x);
            bool in = std::all_of(c.region.begin(), c.region.end(), [&](const Poly& g) { return g.eval(at) >= 0; });
            if (!in) continue;
            ++r.samples;
            double tv = c.target.eval(at).get_d();
            r.min_target_sampled = first ? tv : std::min(r.min_target_sampled, tv);
            first = false;
        }
        r.region_ok = r.samples > 0;
        if (!r.region_ok) fail(CertFailure::region, "no sampled point satisfies every region constraint");

        // signs
        r.signs_ok = true;
        auto bad = [&](const std::string& item) {
            r.signs_ok = false;
            fail(CertFailure::unjustified, item);
        };
        for (std::size_t ti = 0; ti < c.terms.size(); ++ti) {
            const auto& t = c.terms[ti];
            std::string where = "term " + std::to_string(ti + 1);
            if (t.coef < 0) bad(where + ": negative coefficient " + t.coef.get_str());
            for (const auto& f : t.factors) {
                std::string item = where + ": " + tag_name(f.tag) + " " + f.text;
                if (auto v = undeclared(f.poly); !v.empty()) {
                    bad(item + " uses undeclared " + v);
                    continue;
                }
                switch (f.tag) {
                    case FactorTag::square: break;
                    case FactorTag::region:
                        if (std::find(c.region.begin(), c.region.end(), f.poly) == c.region.end())
                            bad(item + " is not a region constraint");
                        break;
                    case FactorTag::linear:
                        if (!f.poly.is_affine()) bad(item + " is not affine");
                        else if (!P.nonneg(f.poly)) bad(item + " is negative at a vertex");
                        break;
                    case FactorTag::univariate: {
                        auto vs = f.poly.variables();
                        if (vs.size() > 1) {
                            bad(item + " has more than one variable");
                        } else if (vs.empty()) {
                            if (f.poly.constant() < 0) bad(item + " is a negative constant");
                        } else {
                            auto [lo, hi] = P.range(*vs.begin());
                            auto s = univariate_sign(f.poly, *vs.begin(), lo, hi, opt_.bernstein_depth);
                            if (s == SignVerdict::negative) bad(item + " is negative on its range");
                            else if (s == SignVerdict::undecided) bad(item + " could not be certified");
                        }
                        break;
                    }
                    case FactorTag::ref: {
                        std::string why = check_ref(c, P, f, stack);
                        if (!why.empty()) bad(item + ": " + why);
                        break;
                    }
                }
            }
        }
        return r;
    }

private:
    std::string check_ref(const Certificate& c, const Polytope& P, const Factor& f, std::vector<std::string>& stack) {
        if (!cat_) return "no catalog to resolve " + f.ref;
        const Certificate* d = cat_->find(f.ref);
        if (!d) return "unknown entry " + f.ref;
        if (!d->analytic.empty()) return "cannot reference an analytic entry";
        if (std::find(stack.begin(), stack.end(), f.ref) != stack.end()) return "reference cycle through " + f.ref;
        if (d->target != f.poly) return "expression differs from the target of " + f.ref;
        // the referenced region must contain this one
        std::set<std::string> mine(P.vars.begin(), P.vars.end());
        for (const auto& v : d->vars) {
            if (!mine.count(v.name)) return f.ref + " ranges over " + v.name + ", which is not a variable here";
            if (!P.nonneg(Poly::var(v.name) - Poly(v.lo)) || !P.nonneg(Poly(v.hi) - Poly::var(v.name)))
                return "the box of " + f.ref + " does not contain this region in " + v.name;
        }
        for (std::size_t i = 0; i < d->region.size(); ++i) {
            const Poly& g = d->region[i];
            bool implied = g.is_affine() ? P.nonneg(g)
                                         : std::find(c.region.begin(), c.region.end(), g) != c.region.end();
            if (!implied) return "constraint '" + d->region_text[i] + "' of " + f.ref + " is not implied here";
        }
        stack.push_back(c.id);
        CertReport sub = run(*d, stack);
        stack.pop_back();
        if (!sub.ok()) return f.ref + " does not verify (" + sub.failed_item + ")";
        return {};
    }

    const Catalog* cat_;
    CertOptions opt_;
};

}  // namespace detail

// `cat` resolves ref factors; without it a ref factor is unjustified.
inline CertReport verify_certificate(const Certificate& c, const Catalog* cat = nullptr, CertOptions opt = {}) {
    std::vector<std::string> stack;
    return detail::CertVerifier(cat, opt).run(c, stack);
}

inline void require_certificate(const CertReport& r) {
    std::string msg = r.id + ": " + r.failed_item;
    switch (r.failure) {
        case CertFailure::identity: throw IdentityMismatch(msg);
        case CertFailure::unjustified: throw UnjustifiedFactor(msg);
        case CertFailure::region: throw RegionUnsatisfiable(msg);
        default: break;
    }
}

// ---------------------------------------------------------------------------
// Delegated steps are checked by the module that owns them.

struct DelegateReport {
    std::string id, module, text;
    bool ok = false;
    std::string detail;
};

inline DelegateReport run_delegate(const Delegation& d, unsigned workers = 0) {
    DelegateReport r{d.id, d.module, d.text, false, ""};
    std::ostringstream os;
    os.precision(10);
    if (d.module == "gridcert" && d.id == "net31") {
        auto g = verify_net31(false, workers);
        r.ok = g.ok();
        os << "max " << g.max_value << " over " << g.points << " net points, certified bound " << g.certified_bound;
    } else if (d.module == "numerics" && d.id == "tail2.value") {
        double v = gauss_cdf(-std::sqrt(1.0 / 3)) + gauss_cdf(-std::sqrt(3.0));
        double up = v + 2 * kGaussCdfErr + 1e-15;
        r.ok = up <= 0.324;
        os << "value " << v << " (upper " << up << ")";
    } else {
        os << "no checker for " << d.module << "/" << d.id;
    }
    r.detail = os.str();
    return r;
}

struct CatalogReport {
    std::vector<CertReport> entries;
    std::vector<DelegateReport> delegates;

    std::size_t passed() const {
        return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(), [](const CertReport& r) { return r.ok(); }));
    }
    bool ok() const {
        return passed() == entries.size() &&
               std::all_of(delegates.begin(), delegates.end(), [](const DelegateReport& d) { return d.ok; });
    }
};

inline CatalogReport verify_catalog(const Catalog& cat, bool run_delegates = true, unsigned workers = 0,
                                    CertOptions opt = {}) {
    CatalogReport rep;
    rep.entries.resize(cat.certs.size());
    parallel_for(cat.certs.size(), [&](std::size_t i) { rep.entries[i] = verify_certificate(cat.certs[i], &cat, opt); },
                 workers);
    for (const auto& d : cat.delegates) {
        if (run_delegates) {
            rep.delegates.push_back(run_delegate(d, workers));
        } else {
            rep.delegates.push_back({d.id, d.module, d.text, false, "not run"});
        }
    }
    return rep;
}

inline CatalogReport verify_catalog() { return verify_catalog(load_catalog()); }

}  // namespace rsum
