#pragma once

#include "rsum/numerics.hpp"
#include "rsum/rational.hpp"
#include "rsum/weights.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace rsum {

struct InvalidParams : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct MarginViolated : std::runtime_error {
    std::size_t index;
    MarginViolated(std::size_t i, const std::string& what) : std::runtime_error(what), index(i) {}
};

struct PrawitzParams {
    Rational a1;
    double x = 1;
    double T = 10;
    double q = 0.4;
    std::size_t N1 = 0, N2 = 0, N3 = 0;  // 0: derive from target
    double target = 1e-6;                // radius budget per integral
};

// Characteristic function prod cos(a_i t / sqrt V).
inline double phi_X(const WeightVector& w, double t) {
    double p = 1;
    for (double a : w.normalized_doubles()) p *= std::cos(a * t);
    return p;
}

// (1-u) sin(pi u - T u x)/sin(pi u) - sin(T u x)/pi, with the limits at u = 0 and u = 1.
inline double prawitz_kernel(double u, double x, double T) {
    double s = M_PI - T * x;
    if (u <= 0) return s / M_PI;
    if (u >= 1) return 0;  // (1-u)/sin(pi u) -> 1/pi and sin(pi - Tx) = sin(Tx)
    double sp = std::sin(M_PI * std::min(u, 1 - u));
    return (1 - u) * std::sin(s * u) / sp - std::sin(T * u * x) / M_PI;
}

// Envelope of |phi_X(v) - exp(-v^2/2)|; the first branch owns a1 v = pi/2 exactly.
inline double g_envelope(double v, double a1) {
    double e = std::exp(-0.5 * v * v);
    if (a1 * v <= M_PI / 2) return e - std::pow(std::cos(a1 * v), 1 / (a1 * a1));
    return e + 1;
}

// Envelope of |phi_X(v)|.
inline double h_envelope(double v, double a1) {
    double y = a1 * v;
    if (y <= theta_root()) return std::exp(-0.5 * v * v);
    if (y <= M_PI) return std::pow(-std::cos(y), 1 / (a1 * a1));
    return 1;
}

struct DerivativeBounds {
    double B1, B2, B3, B4;
};

inline DerivativeBounds derivative_bounds(double x, double T) {
    double kmax = 1 + 2 * T * x / M_PI;
    double dk = (T * x) * (T * x) / (2 * M_PI) + M_PI;
    return {kmax * T + dk * 1.1, kmax * T + dk, kmax * 2 * T / 3 + dk, 0.25};
}

struct PrawitzResult {
    RigorousValue S1, S2, S3, S4, total;
    std::size_t N1 = 0, N2 = 0, N3 = 0;
    bool rigorous = true;
};

namespace detail {

inline void validate(const PrawitzParams& p) {
    if (!(p.a1 > 0 && p.a1 < 1)) throw InvalidParams("a1 must lie in (0,1)");
    if (!(p.T > 0)) throw InvalidParams("T must be positive");
    if (!(p.q >= 0 && p.q <= 1)) throw InvalidParams("q must lie in [0,1]");
    if (!(p.x >= 0) || !std::isfinite(p.x)) throw InvalidParams("x must be finite and nonnegative");
    if (!(p.target > 0)) throw InvalidParams("target must be positive");
}

// Integrates over [lo, hi] split at the given interior points, panels proportional to length.
template <class F>
RigorousValue piecewise(F&& f, double lo, double hi, std::vector<double> cuts, double B, std::size_t N, double target,
                        bool rigorous, EvalModel model, std::size_t& used) {
    used = 0;
    if (!(hi > lo)) return {};
    std::vector<double> pts{lo};
    for (double c : cuts)
        if (c > lo && c < hi) pts.push_back(c);
    pts.push_back(hi);
    RigorousValue acc;
    used = 0;
    double len = hi - lo;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        double a = pts[i], b = pts[i + 1];
        if (!rigorous) {
            acc.mid += adaptive_simpson(f, a, b, 1e-12);
            continue;
        }
        std::size_t n;
        if (N > 0) n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(N * (b - a) / len)));
        else n = panels_for(B, a, b, target * (b - a) / len);
        used += n;
        acc += rigorous_integrate(f, a, b, B, n, model);
    }
    // branch points carry the rounding of theta and of pi/(a1 T)
    if (rigorous && pts.size() > 2) acc = acc.widened(1e-12 * static_cast<double>(pts.size() - 2));
    return acc;
}

}  // namespace detail

// Upper bound on Pr[Z < x] - Pr[X < x] for normalized X with largest weight a1.
inline PrawitzResult prawitz_bound(const PrawitzParams& p, bool rigorous = true) {
    detail::validate(p);
    // the bound increases with a1, so rounding a1 upward keeps it valid
    double a = detail::up(p.a1.get_d());
    double x = p.x, T = p.T, q = p.q;
    DerivativeBounds B = derivative_bounds(x, T);
    EvalModel model{256, (1 + 2 * T * x / M_PI) * 2.1};
    double th = theta_root();
    PrawitzResult r;
    r.rigorous = rigorous;
    r.S1 = detail::piecewise([&](double u) { return std::fabs(prawitz_kernel(u, x, T)) * g_envelope(T * u, a); }, 0, q,
                             {M_PI / (2 * a * T)}, B.B1, p.N1, p.target, rigorous, model, r.N1);
    r.S2 = detail::piecewise([&](double u) { return std::fabs(prawitz_kernel(u, x, T)) * h_envelope(T * u, a); }, q, 1,
                             {th / (a * T), M_PI / (a * T)}, B.B2, p.N2, p.target, rigorous, model, r.N2);
    r.S3 = detail::piecewise(
        [&](double u) {
            double v = T * u;
            return prawitz_kernel(u, x, T) * std::exp(-0.5 * v * v);
        },
        0, q, {}, B.B3, p.N3, p.target, rigorous, model, r.N3);
    r.S4 = rigorous ? gauss_cdf_rigorous(x) - RigorousValue(0.5) : RigorousValue(gauss_cdf(x) - 0.5);
    r.total = r.S1 + r.S2 + r.S3 + r.S4;
    return r;
}

struct MaxWeight031Report {
    PrawitzResult bound;
    PrawitzResult bound_030;
    bool bound_ok;             // upper edge <= 0.09115
    double prob_lt_1;          // lower bound on Pr[X < 1]
    double prob_abs_lt_1;      // lower bound on Pr[|X| < 1]
    bool prob_ok;              // >= 0.7501 and >= 0.5002
    bool monotone_ok;          // bound(0.30) <= bound(0.31)
    bool ok() const { return bound_ok && prob_ok && monotone_ok; }
};

inline MaxWeight031Report verify_max_weight_031(double target = 1e-6) {
    PrawitzParams p{Rational(31, 100), 1, 10, 0.4, 0, 0, 0, target};
    MaxWeight031Report r;
    r.bound = prawitz_bound(p);
    r.bound_ok = r.bound.total.upper() <= 0.09115;
    RigorousValue lt = gauss_cdf_rigorous(1) - RigorousValue(0.09115);
    r.prob_lt_1 = lt.lower();
    r.prob_abs_lt_1 = (lt * 2 - RigorousValue(1)).lower();
    r.prob_ok = r.prob_lt_1 >= 0.7501 && r.prob_abs_lt_1 >= 0.5002;
    PrawitzParams p30 = p;
    p30.a1 = Rational(3, 10);
    r.bound_030 = prawitz_bound(p30);
    r.monotone_ok = r.bound_030.total.mid <= r.bound.total.mid;
    return r;
}

// The listed grid from 0.35 to 1.65: 94 values, 93 consecutive pairs.
inline const std::vector<double>& sequence_points() {
    static const std::vector<double> xs{
        0.35,  0.358, 0.366, 0.374, 0.38,  0.386, 0.39,  0.395, 0.399, 0.403, 0.406, 0.409, 0.412, 0.415, 0.417, 0.419,
        0.421, 0.423, 0.425, 0.427, 0.428, 0.429, 0.43,  0.431, 0.432, 0.433, 0.434, 0.435, 0.436, 0.437, 0.438, 0.439,
        0.44,  0.441, 0.442, 0.443, 0.444, 0.445, 0.446, 0.447, 0.448, 0.449, 0.45,  0.451, 0.452, 0.453, 0.454, 0.455,
        0.456, 0.457, 0.458, 0.459, 0.46,  0.461, 0.462, 0.463, 0.464, 0.466, 0.468, 0.47,  0.472, 0.474, 0.476, 0.478,
        0.481, 0.484, 0.487, 0.49,  0.494, 0.499, 0.504, 0.51,  0.517, 0.526, 0.537, 0.55,  0.567, 0.589, 0.61,  0.63,
        0.65,  0.67,  0.69,  0.71,  0.73,  0.76,  0.8,   0.85,  0.91,  0.98,  1.07,  1.2,   1.38,  1.65};
    return xs;
}

struct SequenceSettings {
    Rational a1{11, 50};
    double T = 14.5;
    double q = 0.4;
    double threshold = 0.084;
    double required_margin = 2e-5;
    double target = 1e-6;
};

struct PairCheck {
    std::size_t i;
    double x0, x1;
    RigorousValue bound;       // Prawitz bound at x0
    RigorousValue gauss_step;  // Pr[Z in [x0, x1)]
    double margin;             // threshold - upper(bound + step)
    bool ok;
};

// Pr[Z in [x_i, x_{i+1})] < threshold - (bound at x_i), with the required spare.
inline PairCheck check_sequence_pair(const std::vector<double>& xs, std::size_t i, const SequenceSettings& s = {}) {
    if (i + 1 >= xs.size()) throw std::out_of_range("pair index out of range");
    PairCheck c{i, xs[i], xs[i + 1], {}, {}, 0, false};
    c.bound = prawitz_bound({s.a1, xs[i], s.T, s.q, 0, 0, 0, s.target}).total;
    c.gauss_step = gauss_cdf_rigorous(xs[i + 1]) - gauss_cdf_rigorous(xs[i]);
    c.margin = detail::down(s.threshold - (c.bound + c.gauss_step).upper());
    c.ok = c.margin >= s.required_margin;
    return c;
}

struct SequenceReport {
    std::size_t values = 0, pairs = 0;
    std::vector<PairCheck> checks;
    double min_margin = 1;
    std::size_t argmin = 0;
    RigorousValue endpoint_bound;  // at the last point
    bool endpoint_ok = false;      // < 0.0314
    double endpoint_prob = 0;      // lower bound on Pr[X < last point]
    bool ok() const {
        if (!endpoint_ok) return false;
        for (const auto& c : checks)
            if (!c.ok) return false;
        return true;
    }
    const PairCheck* first_failure() const {
        for (const auto& c : checks)
            if (!c.ok) return &c;
        return nullptr;
    }
};

template <class Progress>
SequenceReport verify_sequence(const std::vector<double>& xs, const SequenceSettings& s, Progress&& progress) {
    SequenceReport r;
    r.values = xs.size();
    r.pairs = xs.empty() ? 0 : xs.size() - 1;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        r.checks.push_back(check_sequence_pair(xs, i, s));
        if (r.checks.back().margin < r.min_margin) {
            r.min_margin = r.checks.back().margin;
            r.argmin = i;
        }
        progress(r.checks.back());
    }
    if (!xs.empty()) {
        r.endpoint_bound = prawitz_bound({s.a1, xs.back(), s.T, s.q, 0, 0, 0, s.target}).total;
        r.endpoint_ok = r.endpoint_bound.upper() < 0.0314;
        r.endpoint_prob = (gauss_cdf_rigorous(xs.back()) - r.endpoint_bound).lower();
    }
    return r;
}

inline SequenceReport verify_sequence(const SequenceSettings& s = {}) {
    return verify_sequence(sequence_points(), s, [](const PairCheck&) {});
}

inline void require_sequence(const SequenceReport& r) {
    if (const PairCheck* c = r.first_failure())
        throw MarginViolated(c->i, "pair " + std::to_string(c->i) + " has margin " + std::to_string(c->margin));
    if (!r.endpoint_ok) throw MarginViolated(r.values - 1, "endpoint bound is not below 0.0314");
}

// Case split for Pr[X <= x] >= Phi(x) - max(0.084, Pr[|Z| <= a1]/2) with a1 = 0.22.
struct MaxWeight022Report {
    double x;
    std::string branch;  // below_a1, small, middle, sequence, tail
    bool ok;
    double lhs, rhs;     // the inequality evaluated on the chosen branch
    bool derivative_ok = true;
    std::vector<PairCheck> pairs;
};

// a1 <= 0.22 is the actual largest weight; the Prawitz steps always run at 0.22.
inline MaxWeight022Report verify_max_weight_022(double x, double a1 = 0.22, double target = 1e-6) {
    if (!(x >= 0)) throw InvalidParams("x must be nonnegative");
    if (!(a1 > 0 && a1 <= 0.22)) throw InvalidParams("a1 must lie in (0, 0.22]");
    MaxWeight022Report r{x, "", false, 0, 0, true, {}};
    if (x < a1) {
        // 1/2 >= Phi(x) - Pr[|Z| <= a1]/2
        r.branch = "below_a1";
        r.lhs = 0.5;
        r.rhs = gauss_cdf(x) - (gauss_cdf(a1) - 0.5);
        r.ok = r.lhs >= r.rhs + 2 * kGaussCdfErr;
    } else if (x <= 0.2) {
        r.branch = "small";
        r.lhs = 0.5;
        r.rhs = gauss_cdf(x) - 0.084;
        r.ok = gauss_cdf(0.2) + kGaussCdfErr <= 0.58 && r.lhs >= r.rhs;
    } else if (x < 0.35) {
        // 1/2 + (Phi(2x) - 0.584)/3 >= Phi(x) - 0.084, monotone in x, so x = 0.35 suffices
        r.branch = "middle";
        auto gap = [](double y) { return 0.5 + (gauss_cdf(2 * y) - 0.584) / 3 - gauss_cdf(y) + 0.084; };
        for (int k = 0; k <= 1000; ++k) {
            double y = 0.2 + 0.15 * k / 1000;
            if (2 * gauss_pdf(2 * y) / 3 - gauss_pdf(y) >= 0) r.derivative_ok = false;
        }
        r.lhs = 0.5 + (gauss_cdf(0.7) - 0.584) / 3;
        r.rhs = gauss_cdf(0.35) - 0.084;
        r.ok = r.derivative_ok && gap(0.35) > 4 * kGaussCdfErr && gap(x) > 4 * kGaussCdfErr;
    } else if (x < 1.65) {
        r.branch = "sequence";
        const auto& xs = sequence_points();
        SequenceSettings s;
        s.target = target;
        std::size_t i = 0;
        while (xs[i + 1] < x) ++i;
        r.pairs.push_back(check_sequence_pair(xs, i, s));
        r.lhs = s.threshold;
        r.rhs = (r.pairs.back().bound + r.pairs.back().gauss_step).upper();
        r.ok = r.pairs.back().ok;
    } else {
        r.branch = "tail";
        RigorousValue b = prawitz_bound({Rational(11, 50), 1.65, 14.5, 0.4, 0, 0, 0, target}).total;
        // Pr[X <= x] >= Pr[X < 1.65] > 0.919 >= 1 - 0.084
        r.lhs = (gauss_cdf_rigorous(1.65) - b).lower();
        r.rhs = 1 - 0.084;
        r.ok = b.upper() < 0.0314 && r.lhs > 0.919 && 0.919 >= r.rhs;
    }
    return r;
}

}  // namespace rsum
