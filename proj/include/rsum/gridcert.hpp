#pragma once

#include "rsum/numerics.hpp"
#include "rsum/parallel.hpp"
#include "rsum/rational.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rsum {

struct InvalidPoint : std::domain_error {
    using std::domain_error::domain_error;
};
struct NetTooCoarse : std::domain_error {
    using std::domain_error::domain_error;
};
struct PointwiseViolated : std::domain_error {
    using std::domain_error::domain_error;
};

// Net points lo + step*k for k < count; the domain is [dom_lo, dom_hi] on this axis.
struct GridAxis {
    Rational dom_lo, dom_hi;
    Rational lo, step;
    std::size_t count = 0;

    double point(std::size_t k) const { return Rational(lo + step * static_cast<unsigned long>(k)).get_d(); }
    Rational last() const { return lo + step * static_cast<unsigned long>(count - 1); }
};

struct GridSpec {
    std::vector<GridAxis> axes;
    double lipschitz = 0;
    double pointwise_bound = 0;
    double target_bound = 0;
    // absolute error of one evaluation of f; must not exceed max_eval_error
    double eval_error = 0;
    double max_eval_error = 1e-5;
    bool collect_rows = false;
};

struct GridReport {
    std::size_t points = 0;
    double max_value = -std::numeric_limits<double>::infinity();
    std::vector<double> argmax;
    double covering_radius = 0;
    double certified_bound = 0;  // max over the net + eval error + C * radius
    bool covering_ok = false;
    bool pointwise_ok = false;
    std::vector<double> row_max;  // by index on the first axis, when requested

    bool ok() const { return covering_ok && pointwise_ok; }

    std::string rows_csv() const {
        std::ostringstream os;
        os.precision(10);
        os << "row,max\n";
        for (std::size_t i = 0; i < row_max.size(); ++i) os << i << ',' << row_max[i] << '\n';
        return os.str();
    }
};

// Largest distance from a domain point to the net, per axis, then combined in l2.
inline double covering_radius(const GridSpec& g) {
    double s = 0;
    for (const auto& a : g.axes) {
        if (a.count == 0 || a.step <= 0) throw std::invalid_argument("empty grid axis");
        Rational r = a.step / 2;
        Rational below = a.lo - a.dom_lo, above = a.dom_hi - a.last();
        if (below > r) r = below;
        if (above > r) r = above;
        double rd = detail::up(r.get_d());
        s = detail::up(s + detail::up(rd * rd));
    }
    return detail::up(std::sqrt(s));
}

inline bool covering_inequality_holds(const GridSpec& g, double radius) {
    double lhs = detail::up(g.pointwise_bound + detail::up(g.lipschitz * radius));
    return lhs <= g.target_bound;
}

// f takes a point of dimension axes.size(). Ties for the maximum go to the first net point
// in row-major order.
inline GridReport grid_verify(const std::function<double(const std::vector<double>&)>& f, const GridSpec& g,
                              unsigned workers = 0) {
    std::size_t dim = g.axes.size();
    if (dim == 0 || dim > 3) throw std::invalid_argument("grid dimension must be 1, 2 or 3");
    if (g.eval_error > g.max_eval_error) throw std::invalid_argument("evaluation error exceeds the allowed budget");
    GridReport rep;
    rep.covering_radius = covering_radius(g);
    rep.covering_ok = covering_inequality_holds(g, rep.covering_radius);
    if (!rep.covering_ok) return rep;

    std::size_t n = 1;
    for (const auto& a : g.axes) n *= a.count;
    rep.points = n;
    auto coords = [&](std::size_t idx) {
        std::vector<double> x(dim);
        for (std::size_t d = dim; d-- > 0;) {
            x[d] = g.axes[d].point(idx % g.axes[d].count);
            idx /= g.axes[d].count;
        }
        return x;
    };
    std::vector<double> values(n);
    parallel_for(n, [&](std::size_t i) { values[i] = f(coords(i)); }, workers);

    std::size_t best = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (std::isnan(values[i])) throw InvalidPoint("f returned NaN at a net point");
        if (values[i] > values[best]) best = i;
    }
    rep.max_value = values[best];
    rep.argmax = coords(best);
    double with_err = g.eval_error == 0 ? rep.max_value : detail::up(rep.max_value + g.eval_error);
    rep.pointwise_ok = with_err <= g.pointwise_bound;
    rep.certified_bound = detail::up(with_err + detail::up(g.lipschitz * rep.covering_radius));
    if (g.collect_rows) {
        std::size_t per_row = n / g.axes[0].count;
        rep.row_max.assign(g.axes[0].count, -std::numeric_limits<double>::infinity());
        for (std::size_t i = 0; i < n; ++i) rep.row_max[i / per_row] = std::max(rep.row_max[i / per_row], values[i]);
    }
    return rep;
}

inline void require_grid(const GridReport& r) {
    if (!r.covering_ok) throw NetTooCoarse("pointwise bound plus C times the covering radius exceeds the target");
    if (!r.pointwise_ok) {
        std::ostringstream os;
        os.precision(10);
        os << "f = " << r.max_value << " at (";
        for (std::size_t i = 0; i < r.argmax.size(); ++i) os << (i ? ", " : "") << r.argmax[i];
        os << ")";
        throw PointwiseViolated(os.str());
    }
}

// Sum over the four sign patterns of Pr[Z > (1 +- a1 +- a2)/sigma], sigma^2 = 1 - a1^2 - a2^2.
inline double f_31a3s(double a1, double a2) {
    // every step commutes in a1, a2, so f(a1, a2) == f(a2, a1) bit for bit
    double v = 1 - (a1 * a1 + a2 * a2);
    if (!(v > 0)) throw InvalidPoint("need a1^2 + a2^2 < 1");
    double s = std::sqrt(v);
    std::array<double, 4> tails{};
    std::size_t i = 0;
    for (double e1 : {1.0, -1.0})
        for (double e2 : {1.0, -1.0}) tails[i++] = gauss_cdf(-(1 + (e1 * a1 + e2 * a2)) / s);
    std::sort(tails.begin(), tails.end());
    return ((tails[0] + tails[1]) + tails[2]) + tails[3];
}

// four CDF calls plus a few roundings of values below 1
constexpr double kF31EvalErr = 4 * kGaussCdfErr + 1e-13;

inline GridSpec net31_spec() {
    GridAxis ax{ratio(19, 100), ratio(1, 2), ratio(37, 200), ratio(3, 2000), 211};
    GridSpec g;
    g.axes = {ax, ax};
    g.lipschitz = 4;
    g.pointwise_bound = 0.6597;
    g.target_bound = 0.664;
    g.eval_error = kF31EvalErr;
    return g;
}

inline GridReport verify_net31(bool rows = false, unsigned workers = 0) {
    GridSpec g = net31_spec();
    g.collect_rows = rows;
    return grid_verify([](const std::vector<double>& x) { return f_31a3s(x[0], x[1]); }, g, workers);
}

struct GradBoundReport {
    double t_star = 0;         // (sqrt 6 - sqrt 2)/2
    double inner_at_star = 0;  // e^{-T^2/2}(T + sqrt 2) at t_star
    double inner_max = 0;      // certified upper bound over all real T
    double partial_bound = 0;  // 4/sqrt(2 pi) * inner_max
    double grad_bound = 0;     // sqrt 2 * partial_bound
    bool inner_ok = false;     // inner_max < 1.69
    bool partial_ok = false;   // partial_bound < 2.7
    bool grad_ok = false;      // sqrt 2 * 2.7 < 4

    bool ok() const { return inner_ok && partial_ok && grad_ok; }
};

// Certified maximum of g(T) = e^{-T^2/2}(T + sqrt 2): g <= 0 for T <= -sqrt 2,
// g <= (T + sqrt 2) e^{-T^2/2} < 1e-20 for T >= 10, and on [-sqrt 2, 10] a uniform
// sample plus |g'| * h/2 bounds the rest. |g'| = e^{-T^2/2}|1 - T^2 - sqrt 2 T| <= 3.
inline GradBoundReport grad_bound_check(std::size_t samples = 200000) {
    GradBoundReport r;
    const double r2 = std::sqrt(2.0), r6 = std::sqrt(6.0);
    auto g = [&](double T) { return std::exp(-T * T / 2) * (T + r2); };
    r.t_star = (r6 - r2) / 2;
    r.inner_at_star = g(r.t_star);
    const double lo = -r2, hi = 10, L = 3;
    double h = (hi - lo) / static_cast<double>(samples);
    double best = 0;
    for (std::size_t k = 0; k < samples; ++k) best = std::max(best, g(lo + (static_cast<double>(k) + 0.5) * h));
    double slack = L * h / 2 + 64 * detail::kEps;
    r.inner_max = detail::up(std::max(best + slack, 1e-20));
    r.inner_ok = r.inner_max < 1.69;
    r.partial_bound = detail::up(4 / std::sqrt(2 * M_PI) * r.inner_max * (1 + 8 * detail::kEps));
    r.partial_ok = r.partial_bound < 2.7;
    r.grad_bound = detail::up(r2 * 2.7 * (1 + 8 * detail::kEps));
    r.grad_ok = r.grad_bound < 4;
    return r;
}

}  // namespace rsum
