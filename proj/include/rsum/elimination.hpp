#pragma once

#include "rsum/compare.hpp"
#include "rsum/dist.hpp"
#include "rsum/surd.hpp"
#include "rsum/weights.hpp"

#include <array>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rsum {

struct TooFewVariables : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct ZeroResidualVariance : std::domain_error {
    using std::domain_error::domain_error;
};
struct DegenerateInterval : std::domain_error {
    using std::domain_error::domain_error;
};
struct RegionViolation : std::domain_error {
    using std::domain_error::domain_error;
};

// sum_i (-1)^{bit} a_i with bit (m-i) of k; a set bit contributes +a_i.
inline Rational signed_prefix_sum(const std::vector<Rational>& a, unsigned k) {
    std::size_t m = a.size();
    Rational s = 0;
    for (std::size_t i = 0; i < m; ++i) {
        bool bit = (k >> (m - 1 - i)) & 1u;
        s += bit ? Rational(-a[i]) : a[i];
    }
    return s;
}

struct EliminationResult {
    std::size_t m;
    Rational sigma_sq;               // V'/V
    WeightVector reduced;            // a_{m+1..n}, unnormalized
    std::vector<SurdValue> thresholds;  // T_j on the normalized scale of X'
    std::vector<SurdValue> scaled;      // T_j sqrt(V'), comparable with the reduced weights
    std::optional<SurdValue> t;         // m = 1 only

    Rational tail_sum(const ExactDist& reduced_dist) const {
        Rational s = 0;
        for (const auto& x : scaled) s += reduced_dist.prob_gt(x);
        return s;
    }
    Rational tail_sum() const { return tail_sum(ExactDist(reduced)); }
    // sum_j Pr[X' > T_j] <= 2^{m-2}
    bool holds(const ExactDist& reduced_dist) const {
        return tail_sum(reduced_dist) * 4 <= pow2q(static_cast<unsigned>(m));
    }
};

inline EliminationResult eliminate(const WeightVector& w, std::size_t m) {
    if (m < 1 || m > 5) throw std::invalid_argument("m must be in 1..5");
    if (m >= w.n()) throw TooFewVariables("need n > m, got n = " + std::to_string(w.n()));
    std::vector<Rational> head(w.weights().begin(), w.weights().begin() + static_cast<std::ptrdiff_t>(m));
    WeightVector reduced = w.tail(m);
    const Rational& Vp = reduced.variance();
    if (Vp <= 0) throw ZeroResidualVariance("residual variance is zero");
    SurdValue rootV = w.sigma();
    EliminationResult r{m, Rational(Vp / w.variance()), reduced, {}, {}, std::nullopt};
    for (unsigned k = 0; k < (1u << m); ++k) {
        SurdValue x = rootV - SurdValue(signed_prefix_sum(head, k));
        r.scaled.push_back(x);
        r.thresholds.push_back(x.div_sqrt(Vp));
    }
    if (m == 1) r.t = r.thresholds[0];
    return r;
}

// 2^m Pr[X > sqrt V] against sum_j Pr[X' > T_j], both computed exactly.
struct ConsistencyResult {
    Rational direct, eliminated;
    bool ok() const { return direct == eliminated; }
};

inline ConsistencyResult elimination_consistency(const WeightVector& w, std::size_t m) {
    EliminationResult e = eliminate(w, m);
    ExactDist full(w);
    Rational direct = full.prob_gt(w.sigma()) * pow2q(static_cast<unsigned>(m));
    return {direct, e.tail_sum()};
}

struct Thresholds2 {
    SurdValue L1, L2, R1, R2;     // normalized
    SurdValue sL1, sL2, sR1, sR2;  // on the reduced scale
    Rational sigma_sq;
};

inline Thresholds2 eliminate2_LR(const WeightVector& w) {
    if (w.n() < 3) throw TooFewVariables("two-variable elimination needs n >= 3");
    const Rational &a1 = w[0], &a2 = w[1];
    Rational Vp = w.tail(2).variance();
    SurdValue r = w.sigma();
    Thresholds2 t;
    t.sL1 = SurdValue(Rational(a1 + a2)) - r;
    t.sL2 = r - SurdValue(Rational(a1 - a2));
    t.sR1 = r + SurdValue(Rational(a1 - a2));
    t.sR2 = r + SurdValue(Rational(a1 + a2));
    t.L1 = t.sL1.div_sqrt(Vp);
    t.L2 = t.sL2.div_sqrt(Vp);
    t.R1 = t.sR1.div_sqrt(Vp);
    t.R2 = t.sR2.div_sqrt(Vp);
    t.sigma_sq = Vp / w.variance();
    return t;
}

// 0 <= L1 < L2 <= R1 < R2
inline bool nm2_ordering(const Thresholds2& t) {
    return t.L1.sign() >= 0 && t.L1 < t.L2 && t.L2 <= t.R1 && t.R1 < t.R2;
}

struct Nm2Result {
    Rational lhs, rhs;
    bool holds() const { return lhs >= rhs; }
};

// Pr[X' in [L1, L2]] against Pr[X' > R1] + Pr[X' > R2].
inline Nm2Result check_nm2(const WeightVector& w) {
    Thresholds2 t = eliminate2_LR(w);
    ExactDist d(w.tail(2));
    return {d.prob_le(t.sL2) - d.prob_lt(t.sL1), d.prob_gt(t.sR1) + d.prob_gt(t.sR2)};
}

struct Thresholds3 {
    std::array<SurdValue, 4> L, R;    // normalized
    std::array<SurdValue, 4> sL, sR;  // reduced scale
    Rational sigma_sq;
};

inline Thresholds3 thresholds3(const Rational& a1, const Rational& a2, const Rational& a3, const Rational& V,
                               const Rational& Vp) {
    if (Vp <= 0) throw ZeroResidualVariance("residual variance is zero");
    SurdValue r = SurdValue::sqrt(V);
    Rational c = a1 - a2 - a3;
    if (c < 0) c = -c;
    Thresholds3 t;
    t.sL = {r - SurdValue(Rational(a1 + a2 + a3)), r - SurdValue(Rational(a1 + a2 - a3)),
            r - SurdValue(Rational(a1 - a2 + a3)), r - SurdValue(c)};
    t.sR = {r + SurdValue(c), r + SurdValue(Rational(a1 - a2 + a3)), r + SurdValue(Rational(a1 + a2 - a3)),
            r + SurdValue(Rational(a1 + a2 + a3))};
    for (std::size_t i = 0; i < 4; ++i) {
        t.L[i] = t.sL[i].div_sqrt(Vp);
        t.R[i] = t.sR[i].div_sqrt(Vp);
    }
    t.sigma_sq = Vp / V;
    return t;
}

inline Thresholds3 eliminate3_LR(const WeightVector& w) {
    if (w.n() < 4) throw TooFewVariables("three-variable elimination needs n >= 4");
    return thresholds3(w[0], w[1], w[2], w.variance(), w.tail(3).variance());
}

// Normalized a1..a3 with the rest of the variance left implicit.
inline Thresholds3 eliminate3_LR(const Rational& a1, const Rational& a2, const Rational& a3) {
    return thresholds3(a1, a2, a3, Rational(1), Rational(1 - a1 * a1 - a2 * a2 - a3 * a3));
}

struct Nm3Result {
    Rational lhs, rhs;
    bool holds() const { return lhs >= rhs; }
};

// Pr[X' in [-L1,L2]] + Pr[X' in [-L3,L4]], taken as 2 - sum_j Pr[X' > L_j] so that it stays exact
// when an interval is reversed, against sum_j Pr[X' > R_j].
inline Nm3Result check_nm3(const WeightVector& w) {
    Thresholds3 t = eliminate3_LR(w);
    ExactDist d(w.tail(3));
    Rational lhs = 2, rhs = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        lhs -= d.prob_gt(t.sL[i]);
        rhs += d.prob_gt(t.sR[i]);
    }
    return {lhs, rhs};
}

// Witness for the auxiliary two-weight sum. Values are kept as numerators over a common denominator
// den = 2 + L1'^2 + L2'^2, so b1 = b1_num/den and so on; nothing is divided until asked.
struct SemiInductiveWitness {
    SurdValue Lp1, Lp2;
    SurdValue den, b1_num, b2_num, sigma_num;

    SurdValue b1() const { return b1_num / den; }
    SurdValue b2() const { return b2_num / den; }
    SurdValue sigma_prime() const { return sigma_num / den; }
    SurdValue sigma_prime_sq() const { return sigma_prime().square(); }
    SurdValue Rp1() const { return (den + b1_num - b2_num) / sigma_num; }
    SurdValue Rp2() const { return (den + b1_num + b2_num) / sigma_num; }

    // 1 - b1^2 - b2^2 = sigma'^2 with sigma' = 2(L2'-L1')/den
    bool identity_ok() const {
        return den.square() - b1_num.square() - b2_num.square() == sigma_num.square() && sigma_num.sign() > 0;
    }
    // L1', L2' = (b1+b2-1)/sigma', (1-b1+b2)/sigma'
    bool representation_ok() const {
        return Lp1 * sigma_num == b1_num + b2_num - den && Lp2 * sigma_num == den - b1_num + b2_num;
    }
    bool inside_disc() const { return b1_num.square() + b2_num.square() < den.square(); }
};

inline SemiInductiveWitness semi_inductive_witness(const SurdValue& Lp1, const SurdValue& Lp2) {
    if (!(Lp1 < Lp2)) throw DegenerateInterval("need L1' < L2'");
    SemiInductiveWitness w;
    w.Lp1 = Lp1;
    w.Lp2 = Lp2;
    SurdValue s1 = Lp1.square(), s2 = Lp2.square();
    w.den = SurdValue(2) + s1 + s2;
    w.b1_num = SurdValue(2) + Rational(2) * (Lp1 * Lp2);
    w.b2_num = s2 - s1;
    w.sigma_num = Rational(2) * (Lp2 - Lp1);
    return w;
}

// One stopping prefix x_3..x_k of the two-variable reduction.
enum class PrefixKind { no_stop, stops_at_end, inner };

inline const char* prefix_kind_name(PrefixKind k) {
    switch (k) {
        case PrefixKind::no_stop: return "no_stop";
        case PrefixKind::stops_at_end: return "stops_at_end";
        default: return "inner";
    }
}

struct PrefixCheck {
    std::vector<int> signs;  // x_3..x_k
    std::size_t k = 0;       // 1-based index of the last fixed variable
    PrefixKind kind = PrefixKind::no_stop;
    Rational Y;              // sum_{i=3}^k a_i x_i, unnormalized
    bool claim_ok = true;    // Y(Y - L1) <= sum_{3..k} a_i^2 (unnormalized)
    bool witness_ok = true;  // identity, representation, disc
    bool rr_ok = true;       // R1' <= (R1 - Y')/s and R2' <= (R2 - Y')/s
    bool need_ok = true;     // the conditional inequality on Z', evaluated exactly
    bool ok() const { return claim_ok && witness_ok && rr_ok && need_ok; }
};

namespace detail {

struct PrefixContext {
    const WeightVector& w;
    Thresholds2 t;
    std::map<std::size_t, ExactDist> tails;

    explicit PrefixContext(const WeightVector& w_) : w(w_), t(eliminate2_LR(w_)) {}

    const ExactDist& tail(std::size_t k) {
        auto it = tails.find(k);
        if (it == tails.end()) it = tails.emplace(k, ExactDist(w.tail(k))).first;
        return it->second;
    }
};

inline PrefixCheck evaluate_prefix(PrefixContext& ctx, const std::vector<int>& signs) {
    const WeightVector& w = ctx.w;
    std::size_t n = w.n();
    PrefixCheck c;
    c.signs = signs;
    c.k = 2 + signs.size();
    Rational Y = 0, Q = 0;
    for (std::size_t j = 0; j < signs.size(); ++j) {
        Y += signs[j] > 0 ? w[2 + j] : Rational(-w[2 + j]);
        Q += w[2 + j] * w[2 + j];
    }
    c.Y = Y;
    SurdValue SY(Y);
    bool stopped = SY >= ctx.t.sL1;
    if (!stopped) {
        c.kind = PrefixKind::no_stop;
        // the whole tail stays below L1 <= R1
        c.need_ok = SY < ctx.t.sR1;
        return c;
    }
    c.claim_ok = (SY * (SY - ctx.t.sL1)) <= SurdValue(Q);
    if (c.k == n) {
        c.kind = PrefixKind::stops_at_end;
        c.need_ok = SY < ctx.t.sR1;
        return c;
    }
    c.kind = PrefixKind::inner;
    Rational rest = w.tail(c.k).variance();
    SurdValue Lp1 = (ctx.t.sL1 - SY).div_sqrt(rest);
    SurdValue Lp2 = (ctx.t.sL2 - SY).div_sqrt(rest);
    SemiInductiveWitness wit = semi_inductive_witness(Lp1, Lp2);
    c.witness_ok = wit.identity_ok() && wit.representation_ok() && wit.inside_disc();
    // R' sqrt(rest) <= R - Y on the reduced scale, cleared of the positive denominator sigma_num
    SurdValue root = SurdValue::sqrt(rest);
    c.rr_ok = (wit.den + wit.b1_num - wit.b2_num) * root <= (ctx.t.sR1 - SY) * wit.sigma_num &&
              (wit.den + wit.b1_num + wit.b2_num) * root <= (ctx.t.sR2 - SY) * wit.sigma_num;
    const ExactDist& z = ctx.tail(c.k);
    Rational lhs = z.prob_le(ctx.t.sL2 - SY) - z.prob_lt(ctx.t.sL1 - SY);
    Rational rhs = z.prob_gt(ctx.t.sR1 - SY) + z.prob_gt(ctx.t.sR2 - SY);
    c.need_ok = lhs >= rhs;
    return c;
}

}  // namespace detail

inline void require_two_large(const WeightVector& w) {
    if (w.n() < 3) throw TooFewVariables("the stopping argument needs n >= 3");
    Rational s = w[0] + w[1];
    if (s * s < w.variance()) throw HypothesisNotSatisfied("requires a1 + a2 >= 1 after normalization");
}

// Checks an explicitly supplied prefix x_3..x_k.
inline PrefixCheck check_stopping_prefix(const WeightVector& w, const std::vector<int>& signs) {
    require_two_large(w);
    if (signs.size() + 2 > w.n()) throw std::invalid_argument("prefix longer than the tail");
    for (int s : signs)
        if (s != 1 && s != -1) throw std::invalid_argument("signs must be +1 or -1");
    detail::PrefixContext ctx(w);
    return detail::evaluate_prefix(ctx, signs);
}

struct PrefixReport {
    std::size_t total = 0, no_stop = 0, at_end = 0, inner = 0;
    std::vector<PrefixCheck> failures;
    bool ordering_ok = true;
    bool ok() const { return ordering_ok && failures.empty(); }
};

// Walks every stopping prefix: extend until the partial sum reaches L1 or the variables run out.
inline PrefixReport check_all_stopping_prefixes(const WeightVector& w) {
    require_two_large(w);
    detail::PrefixContext ctx(w);
    PrefixReport rep;
    rep.ordering_ok = nm2_ordering(ctx.t);
    std::size_t n = w.n();
    std::vector<int> signs;
    Rational Y = 0;
    auto visit = [&](auto&& self) -> void {
        std::size_t k = 2 + signs.size();
        if ((!signs.empty() && SurdValue(Y) >= ctx.t.sL1) || k == n) {
            PrefixCheck c = detail::evaluate_prefix(ctx, signs);
            ++rep.total;
            if (c.kind == PrefixKind::no_stop) ++rep.no_stop;
            else if (c.kind == PrefixKind::stops_at_end) ++rep.at_end;
            else ++rep.inner;
            if (!c.ok()) rep.failures.push_back(std::move(c));
            return;
        }
        const Rational& a = w[k];
        for (int s : {1, -1}) {
            signs.push_back(s);
            Y += s > 0 ? a : Rational(-a);
            self(self);
            Y -= s > 0 ? a : Rational(-a);
            signs.pop_back();
        }
    };
    visit(visit);
    return rep;
}

// 2(1+a1-a2)(1-a2) = sigma^2 + (a1-a2)(2+a1-a2) + (2a2-1)^2/2 + 1/2, normalized a1, a2.
inline bool r1_identity(const Rational& a1, const Rational& a2) {
    Rational sigma_sq = 1 - a1 * a1 - a2 * a2;
    Rational lhs = 2 * (1 + a1 - a2) * (1 - a2);
    Rational rhs = sigma_sq + (a1 - a2) * (2 + a1 - a2) + (2 * a2 - 1) * (2 * a2 - 1) / 2 + Rational(1, 2);
    return lhs == rhs;
}

// Five-variable elimination battery on normalized a1..a5.
struct T5Check {
    std::string label;
    SurdValue value, bound;
    bool holds;
};

struct T5Report {
    std::array<Rational, 5> a;
    Rational sigma_sq;
    std::vector<SurdValue> T;  // T_0..T_31
    std::vector<T5Check> checks;
    SurdValue max_reduced_weight;  // a5 / sigma bounds every later normalized weight
    bool ok() const {
        for (const auto& c : checks)
            if (!c.holds) return false;
        return true;
    }
};

inline bool in_t5_region(const std::array<Rational, 5>& a) {
    return 1 - a[1] - a[3] <= a[4] && a[4] <= a[3] && a[3] <= a[2] && a[2] <= a[1] && a[1] <= a[0] &&
           a[0] <= Rational(387, 1000) && a[4] > 0;
}

inline std::vector<SurdValue> t5_thresholds(const std::array<Rational, 5>& a, Rational& sigma_sq) {
    sigma_sq = 1;
    for (const auto& x : a) sigma_sq -= x * x;
    if (sigma_sq <= 0) throw ZeroResidualVariance("a1^2 + ... + a5^2 >= 1");
    std::vector<Rational> head(a.begin(), a.end());
    std::vector<SurdValue> T;
    for (unsigned k = 0; k < 32; ++k) T.push_back(SurdValue(Rational(1 - signed_prefix_sum(head, k))).div_sqrt(sigma_sq));
    return T;
}

inline T5Report check_T5_bounds(const std::array<Rational, 5>& a) {
    if (!in_t5_region(a)) throw RegionViolation("need 1-a2-a4 <= a5 <= a4 <= a3 <= a2 <= a1 <= 0.387");
    T5Report r;
    r.a = a;
    r.T = t5_thresholds(a, r.sigma_sq);
    const auto& T = r.T;
    SurdValue one(1);
    SurdValue prod = T[12] * max(T[10], T[17]);
    r.checks.push_back({"T12*max(T10,T17) >= 1", prod, one, prod >= one});
    auto group = [&](std::initializer_list<int> ks, const SurdValue& bound, const std::string& b) {
        for (int k : ks)
            r.checks.push_back({"T" + std::to_string(k) + " >= " + b, T[k], bound, T[k] >= bound});
    };
    group({18, 20, 24}, one, "1");
    group({11, 13, 14}, SurdValue::sqrt(2), "sqrt(2)");
    group({19, 21, 22, 25, 26, 28}, SurdValue(2), "2");
    group({15, 23, 27, 29, 30, 31}, SurdValue::sqrt(6), "sqrt(6)");
    r.max_reduced_weight = SurdValue(a[4]).div_sqrt(r.sigma_sq);
    return r;
}

}  // namespace rsum
