#pragma once

#include "rsum/parallel.hpp"

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace rsum {

struct InvalidBounds : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

namespace detail {
constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr long double kEpsLd = std::numeric_limits<long double>::epsilon();
// four units in the last place of x
inline double ulp4(double x) { return 4 * kEps * std::fabs(x) + 4 * std::numeric_limits<double>::denorm_min(); }
inline double up(double x) { return std::nextafter(x, std::numeric_limits<double>::infinity()); }
inline double down(double x) { return std::nextafter(x, -std::numeric_limits<double>::infinity()); }
}  // namespace detail

// The interval [mid - rad, mid + rad]. Every operation widens rad by its own rounding slack.
struct RigorousValue {
    double mid = 0;
    double rad = 0;

    RigorousValue() = default;
    RigorousValue(double m, double r = 0) : mid(m), rad(r) {}  // NOLINT(implicit)

    double lower() const { return detail::down(mid - rad); }
    double upper() const { return detail::up(mid + rad); }
    bool contains(double x) const { return lower() <= x && x <= upper(); }
    RigorousValue widened(double r) const { return {mid, detail::up(rad + r)}; }

    friend RigorousValue operator+(const RigorousValue& a, const RigorousValue& b) {
        double m = a.mid + b.mid;
        return {m, detail::up(detail::up(a.rad + b.rad) + detail::ulp4(m))};
    }
    friend RigorousValue operator-(const RigorousValue& a, const RigorousValue& b) {
        double m = a.mid - b.mid;
        return {m, detail::up(detail::up(a.rad + b.rad) + detail::ulp4(m))};
    }
    friend RigorousValue operator-(const RigorousValue& a) { return {-a.mid, a.rad}; }
    friend RigorousValue operator*(const RigorousValue& a, double s) {
        double m = a.mid * s;
        return {m, detail::up(detail::up(a.rad * std::fabs(s)) + detail::ulp4(m))};
    }
    friend RigorousValue operator*(double s, const RigorousValue& a) { return a * s; }
    RigorousValue& operator+=(const RigorousValue& o) { return *this = *this + o; }
};

// Rounding model for one integrand evaluation: |f_hat - f| <= kappa * eps * (|f_hat| + scale).
struct EvalModel {
    double kappa = 256;
    double scale = 1;
};

inline std::size_t panels_for(double B, double a, double b, double target) {
    if (target <= 0) throw InvalidBounds("target radius must be positive");
    double n = std::ceil(B * (b - a) * (b - a) / (4 * target));
    return n < 1 ? 1 : static_cast<std::size_t>(n);
}

// Midpoint rule with N panels; rad = B (b-a)^2 / (4N) plus the rounding slack of the
// abscissae, the evaluations, the long double summation and the final scaling.
template <class F>
RigorousValue rigorous_integrate(F&& f, double a, double b, double B, std::size_t N, EvalModel model = {},
                                 unsigned workers = 0) {
    if (!(b >= a)) throw InvalidBounds("need a <= b");
    if (!(B >= 0)) throw InvalidBounds("derivative bound must be nonnegative");
    if (N < 1) throw InvalidBounds("need N >= 1");
    if (b == a) return {0, 0};
    double h = (b - a) / static_cast<double>(N);
    std::vector<long double> sums(std::max(1u, workers ? workers : effective_jobs()), 0.0L);
    std::vector<long double> abs_sums(sums.size(), 0.0L);
    parallel_chunks(N, [&](std::size_t w, std::size_t lo, std::size_t hi) {
        long double s = 0, sa = 0;
        for (std::size_t k = lo; k < hi; ++k) {
            double u = a + (static_cast<double>(k) + 0.5) * h;
            double v = f(u);
            s += v;
            sa += std::fabs(v);
        }
        sums[w] = s;
        abs_sums[w] = sa;
    }, static_cast<unsigned>(sums.size()));
    long double s = 0, sa = 0;
    for (std::size_t i = 0; i < sums.size(); ++i) {
        s += sums[i];
        sa += abs_sums[i];
    }
    double len = b - a;
    double mid = static_cast<double>(s * static_cast<long double>(h));
    double hsa = static_cast<double>(sa) * h;
    double discretization = B * len * len / (4.0 * static_cast<double>(N));
    double eval = model.kappa * detail::kEps * (hsa + model.scale * len);
    double summation = static_cast<double>(static_cast<long double>(N) * detail::kEpsLd) * hsa * 2;
    double abscissa = B * len * 4 * detail::kEps * std::max(std::fabs(a), std::fabs(b));
    double rad = discretization + eval + summation + abscissa + 2 * detail::ulp4(mid) + 4 * detail::kEps * hsa;
    return {mid, detail::up(rad * (1 + 8 * detail::kEps))};
}

template <class F>
RigorousValue rigorous_integrate_to(F&& f, double a, double b, double B, double target, EvalModel model = {},
                                    unsigned workers = 0) {
    return rigorous_integrate(f, a, b, B, panels_for(B, a, b, target), model, workers);
}

// Exploration only: adaptive Simpson with an error estimate, not an enclosure.
template <class F>
double adaptive_simpson(F&& f, double a, double b, double tol = 1e-10, int depth = 40) {
    std::function<double(double, double, double, double, double, double, double, int)> rec =
        [&](double lo, double hi, double flo, double fm, double fhi, double whole, double eps, int d) {
            double m = 0.5 * (lo + hi);
            double lm = 0.5 * (lo + m), rm = 0.5 * (m + hi);
            double flm = f(lm), frm = f(rm);
            double left = (m - lo) / 6 * (flo + 4 * flm + fm);
            double right = (hi - m) / 6 * (fm + 4 * frm + fhi);
            double diff = left + right - whole;
            if (d <= 0 || std::fabs(diff) <= 15 * eps) return left + right + diff / 15;
            return rec(lo, m, flo, flm, fm, left, eps / 2, d - 1) + rec(m, hi, fm, frm, fhi, right, eps / 2, d - 1);
        };
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    double whole = (b - a) / 6 * (fa + 4 * fm + fb);
    return rec(a, b, fa, fm, fb, whole, tol, depth);
}

// Absolute error budget granted to gauss_cdf.
constexpr double kGaussCdfErr = 1e-12;

// Phi(x) = erfc(-x/sqrt 2)/2
inline double gauss_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
inline RigorousValue gauss_cdf_rigorous(double x) { return {gauss_cdf(x), kGaussCdfErr}; }
inline double gauss_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2 * M_PI); }

// Bisection for the root of exp(-y^2/2) + cos y on [0, pi].
inline RigorousValue theta_enclosure() {
    double lo = 0, hi = M_PI;
    auto f = [](double y) { return std::exp(-0.5 * y * y) + std::cos(y); };
    while (hi - lo > 1e-13) {
        double m = 0.5 * (lo + hi);
        if (f(m) > 0) lo = m;
        else hi = m;
    }
    return {0.5 * (lo + hi), 0.5 * (hi - lo) + 1e-14};
}

inline double theta_root() {
    static const double t = theta_enclosure().mid;
    return t;
}

}  // namespace rsum
