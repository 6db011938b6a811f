#pragma once

#include "rsum/rational.hpp"
#include "rsum/surd.hpp"
#include "rsum/weights.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

namespace rsum {

struct WeightOverflow : std::overflow_error {
    using std::overflow_error::overflow_error;
};
struct NonpositiveT : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct GridNotMonotone : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct NotNormalizedGrid : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Endpoint weight in a segment: closed counts the atom fully, open not at all,
// half counts half of it (the default convention for <a,b>).
enum class End { closed, open, half };

inline const char* end_name(End e) {
    switch (e) {
        case End::closed: return "closed";
        case End::open: return "open";
        default: return "half";
    }
}

struct Segment {
    SurdValue lo, hi;
    End lo_kind = End::half, hi_kind = End::half;
    bool lo_inf = false, hi_inf = false;

    static Segment between(SurdValue lo, SurdValue hi, End lk = End::half, End hk = End::half) {
        return Segment{std::move(lo), std::move(hi), lk, hk, false, false};
    }
    // [x, inf) with the given kind at x.
    static Segment above(SurdValue lo, End lk) {
        Segment s;
        s.lo = std::move(lo);
        s.lo_kind = lk;
        s.hi_inf = true;
        return s;
    }
};

// Law of X = sum a_i x_i. Values are stored as integers in units of 1/D where D is the
// lcm of the weight denominators; counts are out of 2^n.
class ExactDist {
public:
    explicit ExactDist(const WeightVector& w) : w_(w) {
        if (w.n() > kMaxEnumeration)
            throw DimensionTooLarge("n = " + std::to_string(w.n()) + " exceeds the enumeration cap of 24");
        D_ = 1;
        for (const auto& a : w.weights()) D_ = lcm(D_, a.get_den());
        Integer total = 0;
        std::vector<std::int64_t> k;
        for (const auto& a : w.weights()) {
            Integer z = a.get_num() * (D_ / a.get_den());
            total += z;
            if (total > Integer(1) << 62 || !fits_int64(z))
                throw WeightOverflow("scaled weights exceed 2^62; use coarser rationals");
            k.push_back(to_int64(z));
        }
        S_ = 0;
        for (auto z : k) S_ += Integer(z) * Integer(z);
        build(k);
    }

    const WeightVector& weights() const { return w_; }
    std::size_t n() const { return w_.n(); }
    const Rational& variance() const { return w_.variance(); }
    const Integer& scale() const { return D_; }
    // sum of squared scaled weights, equals V * D^2.
    const Integer& scaled_variance() const { return S_; }
    std::size_t support_size() const { return vals_.size(); }
    std::int64_t scaled_value(std::size_t i) const { return vals_[i]; }
    std::uint64_t count_at(std::size_t i) const { return cum_[i + 1] - cum_[i]; }
    std::uint64_t total() const { return cum_.back(); }

    Rational to_prob(std::uint64_t count) const { return Rational(Integer(count)) / pow2q(static_cast<unsigned>(n())); }
    // Same probability measured in units of 2^-(n+1); used for half-weighted endpoints.
    Rational to_prob_half(const Integer& halves) const {
        return Rational(halves) / pow2q(static_cast<unsigned>(n() + 1));
    }

    std::map<Rational, Rational> atoms() const {
        std::map<Rational, Rational> m;
        for (std::size_t i = 0; i < vals_.size(); ++i)
            m.emplace(Rational(Integer(vals_[i])) / D_, to_prob(count_at(i)));
        return m;
    }

    // Number of outcomes with X < x (strict) or X <= x.
    std::uint64_t count_below(const SurdValue& x, bool inclusive) const {
        auto [f, exact] = to_units(x);
        std::int64_t key;
        if (f >= Integer(vals_.back())) {
            key = vals_.back();
            if (f > Integer(vals_.back())) return total();
        } else if (f < Integer(vals_.front())) {
            return 0;
        } else {
            key = to_int64(f);
        }
        // values <= f, minus the atom at f when x is exactly f and the bound is strict
        bool strict_at_key = exact && !inclusive;
        auto it = strict_at_key ? std::lower_bound(vals_.begin(), vals_.end(), key)
                                : std::upper_bound(vals_.begin(), vals_.end(), key);
        return cum_[static_cast<std::size_t>(it - vals_.begin())];
    }
    std::uint64_t count_eq(const SurdValue& x) const { return count_below(x, true) - count_below(x, false); }

    Rational prob_lt(const SurdValue& x) const { return to_prob(count_below(x, false)); }
    Rational prob_le(const SurdValue& x) const { return to_prob(count_below(x, true)); }
    Rational prob_gt(const SurdValue& x) const { return to_prob(total() - count_below(x, true)); }
    Rational prob_ge(const SurdValue& x) const { return to_prob(total() - count_below(x, false)); }
    Rational prob_eq(const SurdValue& x) const { return to_prob(count_eq(x)); }

    Rational segment_prob(const Segment& s) const {
        if (!s.lo_inf && !s.hi_inf && s.hi <= s.lo) return Rational(0);
        // interior count in halves, plus endpoint atoms weighted 2/1/0
        std::uint64_t below_hi = s.hi_inf ? total() : count_below(s.hi, false);
        std::uint64_t upto_lo = s.lo_inf ? 0 : count_below(s.lo, true);
        Integer halves = Integer(below_hi - upto_lo) * 2;
        if (!s.lo_inf) halves += Integer(count_eq(s.lo)) * end_weight(s.lo_kind);
        if (!s.hi_inf) halves += Integer(count_eq(s.hi)) * end_weight(s.hi_kind);
        return to_prob_half(halves);
    }

    // <lo, hi> with half-weighted endpoints.
    Rational hpr(const SurdValue& lo, const SurdValue& hi) const { return segment_prob(Segment::between(lo, hi)); }
    // <lo, inf): Pr[X > lo] + Pr[X = lo]/2.
    Rational hpr_tail(const SurdValue& lo) const { return segment_prob(Segment::above(lo, End::half)); }

    Rational probability_mass() const { return to_prob(total()); }

    Rational second_moment() const {
        Integer acc = 0;
        for (std::size_t i = 0; i < vals_.size(); ++i)
            acc += Integer(vals_[i]) * Integer(vals_[i]) * Integer(count_at(i));
        return Rational(acc) / (Rational(D_ * D_) * pow2q(static_cast<unsigned>(n())));
    }

    bool symmetric() const {
        std::size_t m = vals_.size();
        for (std::size_t i = 0; i < m; ++i)
            if (vals_[i] != -vals_[m - 1 - i] || count_at(i) != count_at(m - 1 - i)) return false;
        return true;
    }

    // floor(x * D) and whether x * D is an integer.
    std::pair<Integer, bool> to_units(const SurdValue& x) const {
        SurdValue y = x * Rational(D_);
        if (y.is_rational()) {
            Rational r = y.rational();
            return {floor_q(r), r.get_den() == 1};
        }
        // an irrational value is never an integer
        return {y.floor(), false};
    }

private:
    WeightVector w_;
    Integer D_;
    Integer S_;
    std::vector<std::int64_t> vals_;
    std::vector<std::uint64_t> cum_;

    static int end_weight(End e) { return e == End::closed ? 2 : (e == End::half ? 1 : 0); }

    // Sorted-merge convolution with one +-k step per weight.
    void build(const std::vector<std::int64_t>& k) {
        std::vector<std::int64_t> v{0}, nv;
        std::vector<std::uint64_t> c{1}, nc;
        for (std::int64_t step : k) {
            nv.clear();
            nc.clear();
            nv.reserve(v.size() * 2);
            nc.reserve(v.size() * 2);
            std::size_t i = 0, j = 0, m = v.size();
            while (i < m || j < m) {
                std::int64_t lo = i < m ? v[i] - step : INT64_MAX;
                std::int64_t hi = j < m ? v[j] + step : INT64_MAX;
                std::int64_t val;
                std::uint64_t cnt = 0;
                if (lo <= hi) {
                    val = lo;
                    cnt += c[i++];
                    if (lo == hi) cnt += c[j++];
                } else {
                    val = hi;
                    cnt += c[j++];
                }
                if (!nv.empty() && nv.back() == val) nc.back() += cnt;
                else {
                    nv.push_back(val);
                    nc.push_back(cnt);
                }
            }
            v.swap(nv);
            c.swap(nc);
        }
        vals_ = std::move(v);
        cum_.assign(c.size() + 1, 0);
        for (std::size_t i = 0; i < c.size(); ++i) cum_[i + 1] = cum_[i] + c[i];
    }
};

inline ExactDist exact_distribution(const WeightVector& w) { return ExactDist(w); }

inline Rational segment_prob(const ExactDist& d, const Segment& s) { return d.segment_prob(s); }

struct TomaszewskiResult {
    bool holds;
    Rational prob;
};

// Pr[X^2 <= V]. With integer scaled values k this is |k| <= isqrt(V D^2).
inline TomaszewskiResult check_tomaszewski(const ExactDist& d) {
    Integer r;
    mpz_sqrt(r.get_mpz_t(), d.scaled_variance().get_mpz_t());
    Rational rr(r);
    std::uint64_t inside = d.count_below(SurdValue(rr / d.scale()), true) - d.count_below(SurdValue(-rr / d.scale()), false);
    Rational p = d.to_prob(inside);
    return {p >= Rational(1, 2), p};
}

inline TomaszewskiResult check_tomaszewski(const WeightVector& w) { return check_tomaszewski(ExactDist(w)); }

struct DualityResult {
    bool holds;
    Rational lhs, rhs;
};

// Pr[|X| < t sqrt(V)] against Pr[|X| > sqrt(V)/t].
inline DualityResult check_scale_duality(const ExactDist& d, const Rational& t) {
    if (t <= 0) throw NonpositiveT("t must be positive");
    SurdValue c = d.weights().scale(SurdValue(t));
    SurdValue e = d.weights().scale(SurdValue(Rational(1) / t));
    Rational lhs = d.prob_lt(c) - d.prob_le(-c);
    Rational rhs = d.prob_gt(e) + d.prob_lt(-e);
    return {lhs >= rhs, lhs, rhs};
}

inline DualityResult check_scale_duality(const WeightVector& w, const Rational& t) {
    return check_scale_duality(ExactDist(w), t);
}

struct ChebyResult {
    SurdValue lhs, rhs;
    bool holds;
};

enum class ChebyVariant { tail, segment };

// Refined Chebyshev on a symmetric law with grids in normalized units:
//   sum (1 - c_i^2) <c_i, c_{i+1}>  >=  sum (d_i^2 - d_{i-1}^2) Pr[X >= d_i]        (tail)
//   sum (1 - c_i^2) <c_i, c_{i+1}>  >=  sum (d_i^2 - 1) <d_i, d_{i+1}>, d_{m+1} = inf  (segment)
inline ChebyResult cheby_refined(const ExactDist& d, const std::vector<SurdValue>& c,
                                 const std::vector<SurdValue>& dseq, ChebyVariant variant = ChebyVariant::tail) {
    if (c.size() < 2 || dseq.empty()) throw NotNormalizedGrid("grids need c_0..c_n with n >= 1 and d_0");
    if (c.front().sign() != 0 || c.back() != SurdValue(1) || dseq.front() != SurdValue(1))
        throw NotNormalizedGrid("grid must satisfy c_0 = 0, c_n = 1, d_0 = 1");
    for (std::size_t i = 1; i < c.size(); ++i)
        if (c[i] < c[i - 1]) throw GridNotMonotone("c grid decreases at index " + std::to_string(i));
    for (std::size_t i = 1; i < dseq.size(); ++i)
        if (dseq[i] < dseq[i - 1]) throw GridNotMonotone("d grid decreases at index " + std::to_string(i));
    const auto& w = d.weights();
    SurdValue lhs, rhs;
    for (std::size_t i = 0; i + 1 < c.size(); ++i) {
        Rational p = d.hpr(w.scale(c[i]), w.scale(c[i + 1]));
        if (p != 0) lhs += (SurdValue(1) - c[i].square()) * p;
    }
    for (std::size_t i = 1; i < dseq.size(); ++i) {
        SurdValue x = w.scale(dseq[i]);
        if (variant == ChebyVariant::tail) {
            Rational p = d.prob_ge(x);
            if (p != 0) rhs += (dseq[i].square() - dseq[i - 1].square()) * p;
        } else {
            Rational p = i + 1 < dseq.size() ? d.hpr(x, w.scale(dseq[i + 1])) : d.hpr_tail(x);
            if (p != 0) rhs += (dseq[i].square() - SurdValue(1)) * p;
        }
    }
    return {lhs, rhs, lhs >= rhs};
}

inline ChebyResult cheby_refined(const ExactDist& d, const std::vector<Rational>& c, const std::vector<Rational>& dseq,
                                 ChebyVariant variant = ChebyVariant::tail) {
    return cheby_refined(d, std::vector<SurdValue>(c.begin(), c.end()), std::vector<SurdValue>(dseq.begin(), dseq.end()),
                         variant);
}

// E[(1 - X^2) 1{|X| < sqrt V}] and E[(X^2 - 1) 1{|X| > sqrt V}] on the normalized scale.
inline std::pair<Rational, Rational> cheby_identity_sides(const ExactDist& d) {
    Integer S = d.scaled_variance();
    Integer in = 0, out = 0;
    for (std::size_t i = 0; i < d.support_size(); ++i) {
        Integer k = d.scaled_value(i);
        Integer k2 = k * k;
        Integer c = d.count_at(i);
        if (k2 < S) in += (S - k2) * c;
        else if (k2 > S) out += (k2 - S) * c;
    }
    Rational den = Rational(S) * pow2q(static_cast<unsigned>(d.n()));
    return {Rational(in) / den, Rational(out) / den};
}

}  // namespace rsum
