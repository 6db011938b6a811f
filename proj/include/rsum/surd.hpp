#pragma once

#include "rsum/rational.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rsum {

struct MismatchedVariance : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Exact element of Q[sqrt(g_1), ..., sqrt(g_k)] for positive rational generators g_i.
// coef_[mask] multiplies the product of sqrt(g_i) over the bits set in mask.
// Thresholds such as (1 - a_1 + a_2)/sigma end up here once denominators are cleared.
class SurdValue {
public:
    SurdValue() : coef_{Rational(0)} {}
    SurdValue(const Rational& r) : coef_{r} {}  // NOLINT(implicit)
    SurdValue(long v) : coef_{Rational(v)} {}   // NOLINT(implicit)
    SurdValue(int v) : coef_{Rational(v)} {}    // NOLINT(implicit)

    static SurdValue sqrt(const Rational& g) {
        if (g < 0) throw std::domain_error("sqrt of negative rational");
        if (g == 0) return SurdValue();
        Rational root;
        if (exact_sqrt(g, root)) return SurdValue(root);
        // sqrt(p/q) = sqrt(p*q)/q, with small square factors pulled out of p*q.
        Integer n = g.get_num() * g.get_den();
        Rational scale(1, g.get_den());
        static const unsigned primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47};
        for (unsigned p : primes) {
            unsigned long pp = static_cast<unsigned long>(p) * p;
            while (mpz_divisible_ui_p(n.get_mpz_t(), pp) != 0) {
                mpz_divexact_ui(n.get_mpz_t(), n.get_mpz_t(), pp);
                scale *= p;
            }
        }
        if (mpz_perfect_square_p(n.get_mpz_t()) != 0) {
            Integer r;
            mpz_sqrt(r.get_mpz_t(), n.get_mpz_t());
            return SurdValue(Rational(scale * r));
        }
        SurdValue s;
        s.gens_ = {Rational(n)};
        s.coef_ = {Rational(0), scale};
        return s;
    }

    // p + q*sqrt(V)
    static SurdValue pqv(const Rational& p, const Rational& q, const Rational& V) {
        return SurdValue(p) + SurdValue::sqrt(V) * q;
    }

    bool is_rational() const { return gens_.empty(); }
    const Rational& rational_part() const { return coef_[0]; }
    Rational rational() const {
        if (!is_rational()) throw std::logic_error("surd value is not rational");
        return coef_[0];
    }
    const std::vector<Rational>& generators() const { return gens_; }

    SurdValue operator-() const {
        SurdValue r = *this;
        for (auto& c : r.coef_) c = -c;
        return r;
    }

    friend SurdValue operator+(const SurdValue& a, const SurdValue& b) { return combine(a, b, false); }
    friend SurdValue operator-(const SurdValue& a, const SurdValue& b) { return combine(a, b, true); }

    friend SurdValue operator*(const SurdValue& a, const SurdValue& b) {
        if (a.is_rational()) return b * a.coef_[0];
        if (b.is_rational()) return a * b.coef_[0];
        std::vector<Rational> gens;
        std::vector<std::uint32_t> ma, mb;
        merge_gens(a.gens_, b.gens_, gens, ma, mb);
        SurdValue r;
        r.gens_ = gens;
        r.coef_.assign(std::size_t{1} << gens.size(), Rational(0));
        for (std::size_t i = 0; i < a.coef_.size(); ++i) {
            if (a.coef_[i] == 0) continue;
            std::uint32_t mi = remap(static_cast<std::uint32_t>(i), ma);
            for (std::size_t j = 0; j < b.coef_.size(); ++j) {
                if (b.coef_[j] == 0) continue;
                std::uint32_t mj = remap(static_cast<std::uint32_t>(j), mb);
                Rational c = a.coef_[i] * b.coef_[j];
                std::uint32_t common = mi & mj;
                for (std::size_t g = 0; g < gens.size(); ++g)
                    if (common & (1u << g)) c *= gens[g];
                r.coef_[mi ^ mj] += c;
            }
        }
        r.prune();
        return r;
    }

    friend SurdValue operator*(const SurdValue& a, const Rational& s) {
        SurdValue r = a;
        for (auto& c : r.coef_) c *= s;
        if (s == 0) r.prune();
        return r;
    }
    friend SurdValue operator*(const Rational& s, const SurdValue& a) { return a * s; }
    friend SurdValue operator/(const SurdValue& a, const Rational& s) {
        if (s == 0) throw std::domain_error("division by zero");
        SurdValue r = a;
        for (auto& c : r.coef_) c /= s;
        return r;
    }

    SurdValue& operator+=(const SurdValue& o) { return *this = *this + o; }
    SurdValue& operator-=(const SurdValue& o) { return *this = *this - o; }
    SurdValue& operator*=(const SurdValue& o) { return *this = *this * o; }

    // x / sqrt(g) = x * sqrt(g) / g
    SurdValue div_sqrt(const Rational& g) const {
        if (g <= 0) throw std::domain_error("div_sqrt by nonpositive");
        return (*this * SurdValue::sqrt(g)) / g;
    }

    SurdValue square() const { return *this * *this; }

    // 1/E via the conjugate over the top generator: (A - B sqrt g) / (A^2 - B^2 g).
    SurdValue inverse() const {
        if (is_rational()) {
            if (coef_[0] == 0) throw std::domain_error("division by zero");
            return SurdValue(Rational(1 / coef_[0]));
        }
        std::size_t half = coef_.size() / 2;
        SurdValue a, b;
        a.gens_.assign(gens_.begin(), gens_.end() - 1);
        b.gens_ = a.gens_;
        a.coef_.assign(coef_.begin(), coef_.begin() + static_cast<std::ptrdiff_t>(half));
        b.coef_.assign(coef_.begin() + static_cast<std::ptrdiff_t>(half), coef_.end());
        a.prune();
        b.prune();
        SurdValue conj = a - b * SurdValue::sqrt(gens_.back());
        SurdValue norm = a * a - b * b * gens_.back();
        return conj * norm.inverse();
    }
    friend SurdValue operator/(const SurdValue& a, const SurdValue& b) { return a * b.inverse(); }
    friend SurdValue operator/(const SurdValue& a, int s) { return a / Rational(s); }
    friend SurdValue operator/(const SurdValue& a, long s) { return a / Rational(s); }

    double to_double() const {
        double v = 0;
        for (std::size_t m = 0; m < coef_.size(); ++m) {
            if (coef_[m] == 0) continue;
            v += coef_[m].get_d() * basis_double(static_cast<std::uint32_t>(m));
        }
        return v;
    }

    int sign() const {
        if (is_rational()) return sgn(coef_[0]);
        // Floating filter: accept the double sign when it clears a generous error bound.
        double v = 0, mag = 0;
        for (std::size_t m = 0; m < coef_.size(); ++m) {
            if (coef_[m] == 0) continue;
            double t = coef_[m].get_d() * basis_double(static_cast<std::uint32_t>(m));
            v += t;
            mag += std::fabs(t);
        }
        if (std::isfinite(v) && std::isfinite(mag) && mag > 1e-280 && std::fabs(v) > 1e-9 * mag)
            return v > 0 ? 1 : -1;
        return exact_sign(gens_, coef_);
    }

    friend bool operator==(const SurdValue& a, const SurdValue& b) { return (a - b).sign() == 0; }
    friend bool operator!=(const SurdValue& a, const SurdValue& b) { return !(a == b); }
    friend bool operator<(const SurdValue& a, const SurdValue& b) { return (a - b).sign() < 0; }
    friend bool operator<=(const SurdValue& a, const SurdValue& b) { return (a - b).sign() <= 0; }
    friend bool operator>(const SurdValue& a, const SurdValue& b) { return (a - b).sign() > 0; }
    friend bool operator>=(const SurdValue& a, const SurdValue& b) { return (a - b).sign() >= 0; }

    friend SurdValue max(const SurdValue& a, const SurdValue& b) { return a < b ? b : a; }
    friend SurdValue min(const SurdValue& a, const SurdValue& b) { return b < a ? b : a; }
    SurdValue abs() const { return sign() < 0 ? -*this : *this; }

    // Largest integer <= value.
    Integer floor() const {
        if (is_rational()) return floor_q(coef_[0]);
        double d = to_double();
        Integer c(std::floor(d));
        while ((*this - SurdValue(Rational(c))).sign() < 0) c -= 1;
        while ((*this - SurdValue(Rational(c + 1))).sign() >= 0) c += 1;
        return c;
    }
    Integer ceil() const { return -((-*this).floor()); }

    std::string str() const {
        std::ostringstream os;
        bool first = true;
        for (std::size_t m = 0; m < coef_.size(); ++m) {
            if (coef_[m] == 0) continue;
            Rational c = coef_[m];
            if (!first) os << (c < 0 ? " - " : " + ");
            else if (c < 0) os << "-";
            Rational ac = abs_q(c);
            bool unit = (ac == 1 && m != 0);
            if (!unit) os << ac.get_str();
            for (std::size_t g = 0; g < gens_.size(); ++g) {
                if (!(m & (1u << g))) continue;
                if (!unit) os << "*";
                os << "sqrt(" << gens_[g].get_str() << ")";
                unit = false;
            }
            first = false;
        }
        if (first) os << "0";
        return os.str();
    }

private:
    std::vector<Rational> gens_;
    std::vector<Rational> coef_;

    static int sgn(const Rational& r) { return r > 0 ? 1 : (r < 0 ? -1 : 0); }
    static Rational abs_q(const Rational& r) { return r < 0 ? Rational(-r) : r; }

    double basis_double(std::uint32_t m) const {
        double b = 1;
        for (std::size_t g = 0; g < gens_.size(); ++g)
            if (m & (1u << g)) b *= std::sqrt(gens_[g].get_d());
        return b;
    }

    static std::uint32_t remap(std::uint32_t m, const std::vector<std::uint32_t>& map) {
        std::uint32_t r = 0;
        for (std::size_t b = 0; b < map.size(); ++b)
            if (m & (1u << b)) r |= 1u << map[b];
        return r;
    }

    static void merge_gens(const std::vector<Rational>& a, const std::vector<Rational>& b,
                           std::vector<Rational>& out, std::vector<std::uint32_t>& ma,
                           std::vector<std::uint32_t>& mb) {
        out.clear();
        std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
        out.erase(std::unique(out.begin(), out.end()), out.end());
        if (out.size() > 16) throw std::length_error("too many distinct surd generators");
        ma.resize(a.size());
        mb.resize(b.size());
        for (std::size_t i = 0; i < a.size(); ++i)
            ma[i] = static_cast<std::uint32_t>(std::lower_bound(out.begin(), out.end(), a[i]) - out.begin());
        for (std::size_t i = 0; i < b.size(); ++i)
            mb[i] = static_cast<std::uint32_t>(std::lower_bound(out.begin(), out.end(), b[i]) - out.begin());
    }

    static SurdValue combine(const SurdValue& a, const SurdValue& b, bool subtract) {
        if (a.gens_ == b.gens_) {
            SurdValue r = a;
            for (std::size_t i = 0; i < r.coef_.size(); ++i) {
                if (subtract) r.coef_[i] -= b.coef_[i];
                else r.coef_[i] += b.coef_[i];
            }
            r.prune();
            return r;
        }
        std::vector<Rational> gens;
        std::vector<std::uint32_t> ma, mb;
        merge_gens(a.gens_, b.gens_, gens, ma, mb);
        SurdValue r;
        r.gens_ = gens;
        r.coef_.assign(std::size_t{1} << gens.size(), Rational(0));
        for (std::size_t i = 0; i < a.coef_.size(); ++i)
            if (a.coef_[i] != 0) r.coef_[remap(static_cast<std::uint32_t>(i), ma)] += a.coef_[i];
        for (std::size_t j = 0; j < b.coef_.size(); ++j) {
            if (b.coef_[j] == 0) continue;
            auto& slot = r.coef_[remap(static_cast<std::uint32_t>(j), mb)];
            if (subtract) slot -= b.coef_[j];
            else slot += b.coef_[j];
        }
        r.prune();
        return r;
    }

    // Drops generators that no nonzero coefficient uses.
    void prune() {
        std::size_t k = gens_.size();
        if (k == 0) return;
        std::uint32_t used = 0;
        for (std::size_t m = 0; m < coef_.size(); ++m)
            if (coef_[m] != 0) used |= static_cast<std::uint32_t>(m);
        if (used == (1u << k) - 1) return;
        std::vector<Rational> ng;
        std::vector<int> pos(k, -1);
        for (std::size_t g = 0; g < k; ++g)
            if (used & (1u << g)) {
                pos[g] = static_cast<int>(ng.size());
                ng.push_back(gens_[g]);
            }
        std::vector<Rational> nc(std::size_t{1} << ng.size(), Rational(0));
        for (std::size_t m = 0; m < coef_.size(); ++m) {
            if (coef_[m] == 0) continue;
            std::uint32_t nm = 0;
            for (std::size_t g = 0; g < k; ++g)
                if (m & (1u << g)) nm |= 1u << pos[g];
            nc[nm] = coef_[m];
        }
        gens_ = std::move(ng);
        coef_ = std::move(nc);
    }

    // Writes E = A + B*sqrt(g_top) and recurses; sign(A^2 - B^2 g) settles mixed signs.
    static int exact_sign(const std::vector<Rational>& gens, const std::vector<Rational>& coef) {
        std::size_t k = gens.size();
        if (k == 0) return sgn(coef[0]);
        std::size_t half = std::size_t{1} << (k - 1);
        std::vector<Rational> sub(gens.begin(), gens.end() - 1);
        std::vector<Rational> A(coef.begin(), coef.begin() + static_cast<std::ptrdiff_t>(half));
        std::vector<Rational> B(coef.begin() + static_cast<std::ptrdiff_t>(half), coef.end());
        int sa = exact_sign(sub, A);
        int sb = exact_sign(sub, B);
        if (sb == 0) return sa;
        if (sa == 0) return sb;
        if (sa == sb) return sa;
        SurdValue a, b;
        a.gens_ = sub;
        a.coef_ = A;
        b.gens_ = sub;
        b.coef_ = B;
        SurdValue d = a * a - b * b * gens.back();
        int s = exact_sign(d.gens_, d.coef_);
        return sa > 0 ? s : -s;
    }
};

}  // namespace rsum
