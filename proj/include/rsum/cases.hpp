#pragma once

#include "rsum/compare.hpp"
#include "rsum/dist.hpp"
#include "rsum/elimination.hpp"
#include "rsum/gridcert.hpp"
#include "rsum/numerics.hpp"
#include "rsum/parallel.hpp"
#include "rsum/surd.hpp"
#include "rsum/weights.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rsum {

struct OutOfRange : std::domain_error {
    using std::domain_error::domain_error;
};
struct CaseStepFailed : std::runtime_error {
    std::string step;
    CaseStepFailed(std::string id, const std::string& what) : std::runtime_error(what), step(std::move(id)) {}
};

inline constexpr std::size_t kMaxCaseN = 20;

struct CaseLabel {
    int index = 0;
    std::string description;
    double a1 = 0, a12 = 0, a123 = 0;  // normalized, for display only
};

inline const char* case_description(int index) {
    switch (index) {
        case 1: return "a1 <= 0.31";
        case 2: return "a1 + a2 >= 1";
        case 3: return "a1 >= 0.55, a1 + a2 <= 1";
        case 4: return "0.5 <= a1 <= 0.55, a1 + a2 <= 1";
        case 5: return "0.31 <= a1 <= 0.5, a1 + a2 + a3 <= 1";
        case 6: return "0.387 <= a1 <= 0.5, a1 + a2 + a3 >= 1";
        case 7: return "0.31 <= a1 <= 0.387, a1 + a2 + a3 >= 1";
        default: return "";
    }
}

namespace detail {
// x <= c sqrt(V) for x, c >= 0
inline bool le_scaled(const Rational& x, const Rational& c, const Rational& V) { return x * x <= c * c * V; }
inline bool ge_scaled(const Rational& x, const Rational& c, const Rational& V) { return x * x >= c * c * V; }
}  // namespace detail

// Lowest matching case wins. All predicates compare squares of the unnormalized sums with V.
inline CaseLabel classify_case(const WeightVector& w) {
    const Rational& V = w.variance();
    Rational a1 = w[0];
    Rational a2 = w.n() > 1 ? w[1] : Rational(0);
    Rational a3 = w.n() > 2 ? w[2] : Rational(0);
    Rational s2 = a1 + a2, s3 = a1 + a2 + a3;
    using detail::ge_scaled;
    using detail::le_scaled;
    const Rational c31 = ratio(31, 100), c387 = ratio(387, 1000), c50 = ratio(1, 2), c55 = ratio(55, 100), one = 1;
    int idx = 0;
    if (le_scaled(a1, c31, V)) idx = 1;
    else if (ge_scaled(s2, one, V)) idx = 2;
    else if (ge_scaled(a1, c55, V) && le_scaled(s2, one, V)) idx = 3;
    else if (ge_scaled(a1, c50, V) && le_scaled(a1, c55, V) && le_scaled(s2, one, V)) idx = 4;
    else if (ge_scaled(a1, c31, V) && le_scaled(a1, c50, V) && le_scaled(s3, one, V)) idx = 5;
    else if (ge_scaled(a1, c387, V) && le_scaled(a1, c50, V) && ge_scaled(s3, one, V)) idx = 6;
    else if (ge_scaled(a1, c31, V) && le_scaled(a1, c387, V) && ge_scaled(s3, one, V)) idx = 7;
    if (idx == 0) throw std::logic_error("weight vector matches no case");
    double r = std::sqrt(V.get_d());
    return {idx, case_description(idx), a1.get_d() / r, s2.get_d() / r, s3.get_d() / r};
}

namespace detail {

// Smallest K >= 1 with K^2 t^2 >= 1, i.e. K = ceil(1/t).
template <class T>
long ceil_inv_sqrt(const T& t_sq, double approx_inv) {
    long K = std::max(1L, static_cast<long>(std::ceil(approx_inv)) - 1);
    auto covers = [&](long k) { return T(t_sq * Rational(k * k)) >= T(Rational(1)); };
    while (K > 1 && covers(K - 1)) --K;
    while (!covers(K)) ++K;
    return K;
}

template <class T>
T ct_from_sq(const T& t_sq, long K) {
    T sum = T(Rational(1)) + T(Rational(2) * (T(Rational(1)) - t_sq));
    for (long k = 2; k <= K - 1; ++k) sum = sum + T(Rational(4) * (T(Rational(1)) - T(t_sq * Rational(k * k))));
    return T(sum * t_sq) / T(T(Rational(1)) - t_sq);
}

inline double approx(const Rational& r) { return r.get_d(); }
inline double approx(const SurdValue& s) { return s.to_double(); }

template <class T>
void require_ct_range(const T& t_sq) {
    T one(Rational(1));
    if (!(t_sq > T(Rational(0))) || !(t_sq < one)) throw OutOfRange("need 0 < t < 1");
    T u = one - t_sq;
    if (T(Rational(2) * T(u * u)) < one) throw OutOfRange("need t <= sqrt(1 - 2^(-1/2))");
}

}  // namespace detail

// C_t from its square t^2; the sum runs over k = 2 .. ceil(1/t) - 1.
inline SurdValue eval_Ct_sq(const SurdValue& t_sq) {
    detail::require_ct_range(t_sq);
    long K = detail::ceil_inv_sqrt(t_sq, 1 / std::sqrt(t_sq.to_double()));
    return detail::ct_from_sq(t_sq, K);
}

inline Rational eval_Ct(const Rational& t) {
    if (t <= 0) throw OutOfRange("need t > 0");
    Rational t_sq = t * t;
    detail::require_ct_range(t_sq);
    long K = detail::ceil_inv_sqrt(t_sq, 1 / t.get_d());
    return detail::ct_from_sq(t_sq, K);
}

// (1 + (1 - t^2) + (1 - 9t^2/4)) t^2 / (1 - t^2)
inline SurdValue eval_Ct_prime_sq(const SurdValue& t_sq) {
    SurdValue one(1);
    SurdValue num = one + (one - t_sq) + (one - t_sq * ratio(9, 4));
    return (num * t_sq) / (one - t_sq);
}

// ---------------------------------------------------------------------------------------
// Reports

enum class StepKind { exact, enclosure, instance };

inline const char* step_kind_name(StepKind k) {
    switch (k) {
        case StepKind::exact: return "exact";
        case StepKind::enclosure: return "enclosure";
        default: return "instance-verified (inductive step)";
    }
}

struct StepValue {
    std::string name;
    std::string exact;  // empty for floating values
    double approx = 0;
};

struct CaseStep {
    std::string id;
    std::string label;
    StepKind kind = StepKind::exact;
    bool passed = false;
    std::vector<StepValue> values;
    std::string note;

    void add(const std::string& n, const Rational& r) { values.push_back({n, r.get_str(), r.get_d()}); }
    void add(const std::string& n, const SurdValue& s) { values.push_back({n, s.str(), s.to_double()}); }
    void add(const std::string& n, double d) { values.push_back({n, "", d}); }
};

struct CaseReport {
    std::string instance;
    CaseLabel label;
    std::string subcase;
    std::vector<CaseStep> steps;
    bool verdict = false;

    const CaseStep* first_failure() const {
        for (const auto& s : steps)
            if (!s.passed) return &s;
        return nullptr;
    }
};

// ---------------------------------------------------------------------------------------
// The three-weight lemma for a weight a_k between a1 + a2 + a3 - 1 and 1 - a1 - a2

struct MidAiReport {
    std::size_t k = 0;        // 1-based
    Rational lhs, rhs;        // Pr[X' in (L4, 1)] and Pr[X' in (-L1, L2]]
    std::array<Rational, 2> split{};  // Pr[X' in (L4, 1), x_k = b] for b = -1, +1
    bool holds = false;       // lhs <= 2 rhs
    bool split_holds = false; // each split term <= rhs
    bool ok() const { return holds && split_holds; }
};

namespace detail {

// Law of sum_{i not removed} a_i x_i on its own (unnormalized) scale. A normalized constant c
// becomes c sqrt(V') here.
class Reduced {
public:
    explicit Reduced(const WeightVector& w) : w_(w), d_(w), Vp_(w.variance()), root_(SurdValue::sqrt(Vp_)) {}

    const ExactDist& dist() const { return d_; }
    const Rational& Vp() const { return Vp_; }
    const SurdValue& one() const { return root_; }
    Rational M() const { return w_.max_weight(); }
    SurdValue unit_sqrt(const Rational& c) const { return SurdValue::sqrt(Rational(c * Vp_)); }
    SurdValue norm(const SurdValue& raw) const { return raw.div_sqrt(Vp_); }
    SurdValue sq(const SurdValue& raw) const { return raw.square() / Vp_; }
    double approx(const SurdValue& raw) const { return raw.to_double() / std::sqrt(Vp_.get_d()); }

    Rational hpr(const SurdValue& a, const SurdValue& b) const { return d_.hpr(a, b); }
    Rational tail(const SurdValue& a) const { return d_.hpr_tail(a); }
    Rational gt(const SurdValue& a) const { return d_.prob_gt(a); }
    Rational ge(const SurdValue& a) const { return d_.prob_ge(a); }
    Rational lt(const SurdValue& a) const { return d_.prob_lt(a); }
    Rational le(const SurdValue& a) const { return d_.prob_le(a); }
    // <0, a]
    Rational half_closed(const SurdValue& a) const {
        return d_.segment_prob(Segment::between(SurdValue(0), a, End::half, End::closed));
    }

    // Pr[X' >= sqrt(s)] (or >) for a normalized square s >= 0.
    Rational ge_sqrt(const SurdValue& s, bool strict = false) const {
        if (s.sign() < 0) throw std::domain_error("negative square");
        Rational D2 = Rational(d_.scale() * d_.scale());
        SurdValue bound = s * Rational(Vp_ * D2);
        std::size_t n = d_.support_size();
        std::size_t lo = 0;
        while (lo < n && d_.scaled_value(lo) < 0) ++lo;
        auto pass = [&](std::size_t i) {
            Rational k(Integer(d_.scaled_value(i)));
            SurdValue k2(Rational(k * k));
            return strict ? k2 > bound : k2 >= bound;
        };
        std::size_t a = lo, b = n;  // first passing index in [a, b)
        while (a < b) {
            std::size_t mid = a + (b - a) / 2;
            if (pass(mid)) b = mid;
            else a = mid + 1;
        }
        if (a == n) return Rational(0);
        Rational x(Integer(d_.scaled_value(a)), d_.scale());
        x.canonicalize();
        return d_.prob_ge(SurdValue(x));
    }
    Rational gt_sqrt(const SurdValue& s) const { return ge_sqrt(s, true); }

    CompareQuad quad(SurdValue A, SurdValue B, SurdValue C, SurdValue D) const {
        return CompareQuad{std::move(A), std::move(B), std::move(C), std::move(D), M()};
    }

private:
    WeightVector w_;
    ExactDist d_;
    Rational Vp_;
    SurdValue root_;
};

inline WeightVector without(const WeightVector& w, const std::vector<std::size_t>& idx) {
    std::vector<Rational> rest;
    for (std::size_t i = 0; i < w.n(); ++i)
        if (std::find(idx.begin(), idx.end(), i) == idx.end()) rest.push_back(w[i]);
    return WeightVector(std::move(rest));
}

inline double gauss_tail_up(double x) { return up(1 - gauss_cdf(x) + kGaussCdfErr + 1e-12); }

}  // namespace detail

inline MidAiReport check_mid_ai(const WeightVector& w, std::size_t k) {
    std::size_t n = w.n();
    if (n < 4 || k < 4 || k > n) throw HypothesisNotSatisfied("need 4 <= k <= n");
    const Rational& V = w.variance();
    SurdValue rV = w.sigma();
    const Rational &A1 = w[0], &A2 = w[1], &A3 = w[2], &Ak = w[k - 1];
    if (!detail::le_scaled(A1, ratio(387, 1000), V)) throw HypothesisNotSatisfied("need a1 <= 0.387");
    SurdValue lo = SurdValue(Rational(A1 + A2 + A3)) - rV;
    SurdValue hi = rV - SurdValue(Rational(A1 + A2));
    if (lo.sign() < 0) throw HypothesisNotSatisfied("need a1 + a2 + a3 >= 1");
    if (!(SurdValue(Ak) >= lo && SurdValue(Ak) <= hi))
        throw HypothesisNotSatisfied("need a_k in [a1 + a2 + a3 - 1, 1 - a1 - a2]");

    detail::Reduced R(w.tail(3));
    SurdValue L1 = rV - SurdValue(Rational(A1 + A2 + A3));
    SurdValue L2 = rV - SurdValue(Rational(A1 + A2 - A3));
    SurdValue L4 = rV + SurdValue(Rational(A1 - A2 - A3));
    const SurdValue& one = R.one();
    MidAiReport r;
    r.k = k;
    r.lhs = R.lt(one) - R.le(L4);
    r.rhs = R.le(L2) - R.le(-L1);
    r.holds = r.lhs <= 2 * r.rhs;

    // X' with x_k = b is X'' + b a_k; X'' drops a_k from the tail
    std::vector<std::size_t> drop{0, 1, 2, k - 1};
    std::optional<ExactDist> rest;
    if (n > 4) rest.emplace(detail::without(w, drop));
    auto open_prob = [&](const SurdValue& a, const SurdValue& b) -> Rational {
        if (!rest) return Rational(a.sign() < 0 && b.sign() > 0 ? 1 : 0);
        return rest->prob_lt(b) - rest->prob_le(a);
    };
    r.split_holds = true;
    for (int bi = 0; bi < 2; ++bi) {
        Rational shift = bi == 0 ? Rational(-Ak) : Ak;
        Rational p = open_prob(L4 - SurdValue(shift), one - SurdValue(shift)) / 2;
        r.split[static_cast<std::size_t>(bi)] = p;
        if (p > r.rhs) r.split_holds = false;
    }
    return r;
}

// ---------------------------------------------------------------------------------------
// Pipelines

struct CaseOptions {
    std::size_t max_n = kMaxCaseN;
    int force_case = 0;  // run this case's chain instead of the classified one
};

namespace detail {

class Pipeline {
public:
    Pipeline(const WeightVector& w, CaseReport& rep) : w_(w), rep_(rep), V_(w.variance()), rV_(w.sigma()) {}

    template <class F>
    bool step(const std::string& id, const std::string& label, StepKind kind, F&& f) {
        CaseStep s;
        s.id = prefix_ + id;
        s.label = label;
        s.kind = kind;
        try {
            s.passed = f(s);
        } catch (const std::exception& e) {
            s.passed = false;
            s.note = e.what();
        }
        rep_.steps.push_back(std::move(s));
        return rep_.steps.back().passed;
    }

    void set_prefix(std::string p) { prefix_ = std::move(p); }

    const WeightVector& w() const { return w_; }
    const Rational& V() const { return V_; }
    const SurdValue& rV() const { return rV_; }
    Rational A(std::size_t i) const { return i < w_.n() ? w_[i] : Rational(0); }
    SurdValue S(const Rational& r) const { return SurdValue(r); }

    // sum_i a_i compared with c, normalized, for nonnegative sums
    bool le(const Rational& raw, const Rational& c) const { return le_scaled(raw, c, V_); }
    bool ge(const Rational& raw, const Rational& c) const { return ge_scaled(raw, c, V_); }

    // steps shared by several cases -------------------------------------------------------

    bool target(std::size_t m, const Reduced& R) {
        return step("target", "eliminated form of the main inequality", StepKind::exact, [&](CaseStep& s) {
            EliminationResult e = eliminate(w_, m);
            Rational sum = e.tail_sum(R.dist());
            s.add("m", static_cast<double>(m));
            s.add("tail_sum", sum);
            s.add("bound", pow2q(static_cast<unsigned>(m)) / 4);
            return sum * 4 <= pow2q(static_cast<unsigned>(m));
        });
    }

    bool compare(const std::string& id, const std::string& label, const Reduced& R, const CompareQuad& q, End lk = End::half,
                 End hk = End::half) {
        return step(id, label, StepKind::exact, [&](CaseStep& s) {
            CompareResult c = lk == End::half && hk == End::half ? check_seg_compare(R.dist(), q)
                                                                  : check_other_segment_types(R.dist(), q, lk, hk);
            s.add("lhs", c.lhs);
            s.add("rhs", c.rhs);
            s.note = std::string("relation ") + relation_name(c.relation);
            return c.holds;
        });
    }

    // Two eliminated weights, Gaussian comparison with 0.084 on the tail (a3 small).
    bool two_elim_gauss() {
        Reduced R(w_.tail(2));
        EliminationResult e = eliminate(w_, 2);
        bool ok = step("max-weight", "largest weight of the reduced sum is at most 0.15 sqrt 2", StepKind::exact,
                       [&](CaseStep& s) {
                           Rational a = A(2);
                           s.add("a3'", R.approx(S(a)));
                           return a * a <= ratio(45, 1000) * R.Vp();
                       });
        double a3n = R.approx(S(A(2)));
        double delta = std::max(0.084, gauss_cdf(a3n) - 0.5 + kGaussCdfErr);
        ok &= step("tail-bound", "each eliminated tail is within 0.084 of the Gaussian tail", StepKind::enclosure,
                   [&](CaseStep& s) {
                       bool all = true;
                       s.add("delta", delta);
                       for (std::size_t j = 0; j < 4; ++j) {
                           double x = R.approx(e.scaled[j]);
                           Rational p = R.gt(e.scaled[j]);
                           double b = detail::gauss_tail_up(x) + 0.084;
                           s.add("Pr[X'>T" + std::to_string(j + 1) + "]", p);
                           s.add("bound" + std::to_string(j + 1), b);
                           if (p > Rational(b)) all = false;
                       }
                       return all && delta <= 0.084 + 1e-9;
                   });
        ok &= step("gauss", "four Gaussian tails sum to at most 1 - 4 * 0.084", StepKind::enclosure, [&](CaseStep& s) {
            double a1 = w_.normalized(0), a2 = w_.normalized(1);
            double f = f_31a3s(a1, a2);
            double fu = up(f + kF31EvalErr + 1e-12);
            s.add("f", f);
            s.add("bound", 0.664);
            return fu <= 0.664;
        });
        ok &= target(2, R);
        return ok;
    }

    // Cheby lower bound for three eliminated weights, checked as 2 sum (1 - c_i^2) <c_i, c_i+1> >= E_in.
    SurdValue cheby_lhs(const Reduced& R, const std::vector<SurdValue>& c_raw) const {
        SurdValue sum;
        for (std::size_t i = 0; i + 1 < c_raw.size(); ++i) {
            Rational p = R.hpr(c_raw[i], c_raw[i + 1]);
            if (p != 0) sum += (SurdValue(1) - R.sq(c_raw[i])) * p;
        }
        return sum * Rational(2);
    }

private:
    const WeightVector& w_;
    CaseReport& rep_;
    Rational V_;
    SurdValue rV_;
    std::string prefix_;
};

inline std::vector<SurdValue> norm_all(const Reduced& R, const std::vector<SurdValue>& raw) {
    std::vector<SurdValue> r;
    for (const auto& x : raw) r.push_back(R.norm(x));
    return r;
}

// ---------------------------------------------------------------------------------------

inline bool run_case1(Pipeline& P, CaseReport& rep) {
    rep.subcase = "direct";
    ExactDist d(P.w());
    Rational p = d.prob_gt(P.rV());
    const double bound031 = 0.09115;
    double tail1 = gauss_tail_up(1.0);
    bool ok = P.step("tail-bound", "Pr[X > 1] is within the a1 <= 0.31 bound of the Gaussian tail", StepKind::enclosure,
                     [&](CaseStep& s) {
                         s.add("Pr[X>1]", p);
                         s.add("bound", tail1 + bound031);
                         return p <= Rational(up(tail1 + bound031));
                     });
    ok &= P.step("margin", "Gaussian tail plus the bound stays below 1/4", StepKind::enclosure, [&](CaseStep& s) {
        double v = up(tail1 + bound031);
        s.add("value", v);
        return v < 0.25;
    });
    ok &= P.step("target", "Pr[X > 1] <= 1/4", StepKind::exact, [&](CaseStep& s) {
        s.add("Pr[X>1]", p);
        return p * 4 <= 1;
    });
    return ok;
}

inline bool run_case2(Pipeline& P, CaseReport& rep) {
    const WeightVector& w = P.w();
    if (w.n() < 3) {
        rep.subcase = "two-weights";
        return P.step("small-n", "at most two weights", StepKind::exact, [&](CaseStep& s) {
            auto t = check_tomaszewski(w);
            s.add("Pr[|X|<=1]", t.prob);
            return t.holds;
        });
    }
    rep.subcase = "stopping-time";
    Thresholds2 t = eliminate2_LR(w);
    Rational Vp = w.tail(2).variance();
    bool ok = P.step("ordering", "0 <= L1 < L2 <= R1 < R2", StepKind::exact, [&](CaseStep& s) {
        s.add("L1", t.L1.to_double());
        s.add("L2", t.L2.to_double());
        s.add("R1", t.R1.to_double());
        s.add("R2", t.R2.to_double());
        return nm2_ordering(t);
    });
    ok &= P.step("r1-gap", "R1 (R1 - L1) > 1", StepKind::exact, [&](CaseStep& s) {
        SurdValue v = t.sR1 * (t.sR1 - t.sL1);
        s.add("value", v.to_double() / Vp.get_d());
        return v > SurdValue(Vp);
    });
    ok &= P.step("prefixes", "every stopping prefix: claim, auxiliary sum, R' bounds and the conditional inequality",
                 StepKind::instance, [&](CaseStep& s) {
                     PrefixReport r = check_all_stopping_prefixes(w);
                     s.add("prefixes", static_cast<double>(r.total));
                     s.add("no_stop", static_cast<double>(r.no_stop));
                     s.add("stops_at_end", static_cast<double>(r.at_end));
                     s.add("inner", static_cast<double>(r.inner));
                     s.add("failures", static_cast<double>(r.failures.size()));
                     return r.ok();
                 });
    ok &= P.step("target", "Pr[X' in [L1, L2]] >= Pr[X' > R1] + Pr[X' > R2]", StepKind::exact, [&](CaseStep& s) {
        Nm2Result r = check_nm2(w);
        s.add("lhs", r.lhs);
        s.add("rhs", r.rhs);
        return r.holds();
    });
    return ok;
}

inline bool run_case3(Pipeline& P, CaseReport& rep) {
    rep.subcase = "one-elimination";
    const WeightVector& w = P.w();
    Reduced R(w.tail(1));
    SurdValue ts = P.rV() - SurdValue(P.A(0));       // t on the reduced scale
    SurdValue inv_t = P.rV() + SurdValue(P.A(0));    // 1/t on the reduced scale
    SurdValue t_sq = R.sq(ts);
    long K = 0;
    bool ok = P.step("range", "0 < t <= sqrt(1 - 2^(-1/2))", StepKind::exact, [&](CaseStep& s) {
        s.add("t", R.approx(ts));
        detail::require_ct_range(t_sq);
        return true;
    });
    ok &= P.step("ct", "C_t <= 1", StepKind::exact, [&](CaseStep& s) {
        SurdValue c = eval_Ct_sq(t_sq);
        K = ceil_inv_sqrt(t_sq, 1 / std::sqrt(t_sq.to_double()));
        s.add("C_t", c);
        s.add("ceil(1/t)", static_cast<double>(K));
        return c <= SurdValue(1);
    });
    if (K == 0) K = ceil_inv_sqrt(t_sq, 1 / std::sqrt(std::max(t_sq.to_double(), 1e-300)));
    ok &= P.step("max-weight", "every reduced weight is below t", StepKind::exact, [&](CaseStep& s) {
        s.add("a2'", R.approx(SurdValue(P.A(1))));
        return SurdValue(P.A(1)) < ts;
    });
    ok &= P.compare("compare-a", "<t, 2t> against <-t, t>", R, R.quad(-ts, ts, ts, ts * Rational(2)));
    ok &= P.step("compare-b", "<kt, (k+1)t> against <-t, 2t> for 2 <= k < ceil(1/t)", StepKind::exact, [&](CaseStep& s) {
        bool all = true;
        for (long k = 2; k <= K - 1; ++k) {
            CompareResult c = check_seg_compare(R.dist(), R.quad(-ts, ts * Rational(2), ts * Rational(k), ts * Rational(k + 1)));
            s.add("k=" + std::to_string(k), c.lhs);
            all = all && c.holds;
        }
        return all;
    });
    ok &= P.step("cheby", "Chebyshev bound with c = 0, t, ..., (K-1)t, 1 and d = 1, 1/t", StepKind::exact, [&](CaseStep& s) {
        std::vector<SurdValue> c;
        for (long k = 0; k < K; ++k) c.push_back(ts * Rational(k));
        c.push_back(R.one());
        ChebyResult r = cheby_refined(R.dist(), norm_all(R, c), {SurdValue(1), R.norm(inv_t)});
        s.add("lhs", r.lhs);
        s.add("rhs", r.rhs);
        // combined with the comparisons: coefficient * <0,t> >= (1/t^2 - 1) Pr[X' >= 1/t]
        SurdValue coef = SurdValue(1) + (SurdValue(1) - t_sq) * Rational(2);
        for (long k = 2; k <= K - 1; ++k) coef += (SurdValue(1) - t_sq * Rational(k * k)) * Rational(4);
        SurdValue lhs2 = coef * R.hpr(SurdValue(0), ts);
        SurdValue rhs2 = (t_sq.inverse() - SurdValue(1)) * R.ge(inv_t);
        s.add("combined_lhs", lhs2);
        s.add("combined_rhs", rhs2);
        return r.holds && lhs2 >= rhs2;
    });
    ok &= P.target(1, R);
    return ok;
}

inline bool run_case4_small(Pipeline& P) {
    const WeightVector& w = P.w();
    Reduced R(w.tail(1));
    SurdValue ts = P.rV() - SurdValue(P.A(0));
    SurdValue inv_t = P.rV() + SurdValue(P.A(0));
    SurdValue t_sq = R.sq(ts);
    SurdValue t15 = ts * ratio(3, 2);
    SurdValue two_a2(Rational(2 * P.A(1)));
    bool ok = P.step("aux", "2 a2/sigma <= t and (1 - 3t/2) + 2 a2/sigma <= t", StepKind::exact, [&](CaseStep& s) {
        s.add("t", R.approx(ts));
        s.add("2a2/sigma", R.approx(two_a2));
        return two_a2 <= ts && R.one() - t15 + two_a2 <= ts;
    });
    ok &= P.compare("compare-1", "<t, 3t/2> against <0, t>", R, R.quad(SurdValue(0), ts, ts, t15));
    ok &= P.compare("compare-2", "<3t/2, 1> against <0, t>", R, R.quad(SurdValue(0), ts, t15, R.one()));
    ok &= P.step("ct", "t^2 <= 1/3 and C'_t <= 1", StepKind::exact, [&](CaseStep& s) {
        SurdValue c = eval_Ct_prime_sq(t_sq);
        s.add("C'_t", c);
        return t_sq <= SurdValue(ratio(1, 3)) && c <= SurdValue(1);
    });
    ok &= P.step("cheby", "Chebyshev bound with c = 0, t, 3t/2, 1 and d = 1, 1/t", StepKind::exact, [&](CaseStep& s) {
        ChebyResult r = cheby_refined(R.dist(), norm_all(R, {SurdValue(0), ts, t15, R.one()}), {SurdValue(1), R.norm(inv_t)});
        s.add("lhs", r.lhs);
        s.add("rhs", r.rhs);
        return r.holds;
    });
    ok &= P.target(1, R);
    return ok;
}

inline bool run_case4_large(Pipeline& P) {
    const WeightVector& w = P.w();
    Reduced R(w.tail(2));
    Thresholds2 t = eliminate2_LR(w);
    const Rational& Vp = R.Vp();
    SurdValue L2sq = R.sq(t.sL2);
    bool ok = P.step("aux", "L2 >= 2/3, R1 >= max(sqrt(3 - L2^2), sqrt 2), R2 >= max(sqrt(5 - 2 L2^2), sqrt 3)",
                     StepKind::exact, [&](CaseStep& s) {
                         s.add("L2", R.approx(t.sL2));
                         s.add("R1", R.approx(t.sR1));
                         s.add("R2", R.approx(t.sR2));
                         SurdValue r1 = t.sR1.square(), r2 = t.sR2.square(), l2 = t.sL2.square();
                         return t.sL2 >= R.one() * ratio(2, 3) && t.sR1.sign() > 0 && t.sR2.sign() > 0 &&
                                r1 >= SurdValue(Rational(3 * Vp)) - l2 && r1 >= SurdValue(Rational(2 * Vp)) &&
                                r2 >= SurdValue(Rational(5 * Vp)) - l2 * Rational(2) && r2 >= SurdValue(Rational(3 * Vp));
                     });
    if (t.sL2 >= R.one()) {
        ok &= P.step("cheby", "<0, 1> >= Pr[X' >= sqrt 2] + Pr[X' >= sqrt 3]", StepKind::exact, [&](CaseStep& s) {
            ChebyResult r = cheby_refined(R.dist(), std::vector<SurdValue>{SurdValue(0), SurdValue(1)},
                                          {SurdValue(1), SurdValue::sqrt(2), SurdValue::sqrt(3)});
            s.add("lhs", r.lhs);
            s.add("rhs", r.rhs);
            s.note = "L2 >= 1";
            return r.holds;
        });
    } else {
        ok &= P.compare("compare", "<L2, 1> against <0, L2>", R, R.quad(SurdValue(0), t.sL2, t.sL2, R.one()));
        ok &= P.step("cheby", "Chebyshev bound with c = 0, L2, 1 and d = 1, sqrt(3 - L2^2), sqrt(5 - 2 L2^2)",
                     StepKind::exact, [&](CaseStep& s) {
                         SurdValue lhs = SurdValue(R.hpr(SurdValue(0), t.sL2)) + (SurdValue(1) - L2sq) * R.hpr(t.sL2, R.one());
                         SurdValue k = SurdValue(2) - L2sq;
                         SurdValue rhs = k * (R.ge_sqrt(SurdValue(3) - L2sq) + R.ge_sqrt(SurdValue(5) - L2sq * Rational(2)));
                         s.add("lhs", lhs);
                         s.add("rhs", rhs);
                         s.note = "L2 < 1";
                         return lhs >= rhs;
                     });
    }
    ok &= P.step("need", "<0, -L1> + <0, L2> >= Pr[X' > R1] + Pr[X' > R2]", StepKind::exact, [&](CaseStep& s) {
        Rational lhs = R.hpr(SurdValue(0), -t.sL1) + R.hpr(SurdValue(0), t.sL2);
        Rational rhs = R.gt(t.sR1) + R.gt(t.sR2);
        s.add("lhs", lhs);
        s.add("rhs", rhs);
        return lhs >= rhs;
    });
    ok &= P.target(2, R);
    return ok;
}

inline bool run_case4(Pipeline& P, CaseReport& rep) {
    // a2 <= (a1 - 3 + sqrt(25 + 10 a1 - 63 a1^2))/8, squared: u^2 <= 25 V + 10 A1 sqrt V - 63 A1^2
    SurdValue u = SurdValue(Rational(8 * P.A(1) - P.A(0))) + P.rV() * Rational(3);
    SurdValue D = SurdValue(Rational(25 * P.V() - 63 * P.A(0) * P.A(0))) + P.rV() * Rational(10 * P.A(0));
    int cmp = (u.square() - D).sign();
    if (cmp < 0) {
        rep.subcase = "small-a2";
        P.set_prefix("small.");
        return run_case4_small(P);
    }
    if (cmp > 0) {
        rep.subcase = "large-a2";
        P.set_prefix("large.");
        return run_case4_large(P);
    }
    // exactly on the threshold: either chain settles it
    rep.subcase = "threshold-tie";
    P.set_prefix("small.");
    bool a = run_case4_small(P);
    P.set_prefix("large.");
    bool b = run_case4_large(P);
    return a || b;
}

inline bool run_case5_a2_small(Pipeline& P) {
    const WeightVector& w = P.w();
    Reduced R(w.tail(1));
    SurdValue ts = P.rV() - SurdValue(P.A(0));
    SurdValue inv_t = P.rV() + SurdValue(P.A(0));
    double t = R.approx(ts), it = R.approx(inv_t);
    bool ok = P.step("max-weight", "largest reduced weight is at most 0.22", StepKind::exact, [&](CaseStep& s) {
        Rational a = P.A(1);
        s.add("a2'", R.approx(SurdValue(a)));
        return a * a <= ratio(484, 10000) * R.Vp();
    });
    double delta = std::max(0.084, gauss_cdf(R.approx(SurdValue(P.A(1)))) - 0.5 + kGaussCdfErr);
    ok &= P.step("tail-bound", "Pr[X' > x] <= Pr[Z > x] + 0.088 at x = t and 1/t", StepKind::enclosure, [&](CaseStep& s) {
        Rational p1 = R.gt(ts), p2 = R.gt(inv_t);
        double b1 = gauss_tail_up(t) + 0.088, b2 = gauss_tail_up(it) + 0.088;
        s.add("delta", delta);
        s.add("Pr[X'>t]", p1);
        s.add("bound_t", b1);
        s.add("Pr[X'>1/t]", p2);
        s.add("bound_1/t", b2);
        return delta <= 0.088 && p1 <= Rational(b1) && p2 <= Rational(b2);
    });
    ok &= P.step("gauss", "Pr[Z > t] + Pr[Z > 1/t] <= 1/2 - 2 * 0.088", StepKind::enclosure, [&](CaseStep& s) {
        double v = up(gauss_tail_up(t) + gauss_tail_up(it));
        s.add("value", v);
        return v <= 0.324;
    });
    ok &= P.target(1, R);
    return ok;
}

inline bool case5_three_core(Pipeline& P, const Reduced& R, const Thresholds3& T) {
    const auto &sL = T.sL, &sR = T.sR;
    const Rational& Vp = R.Vp();
    SurdValue zero(0);
    bool ok = P.step("aux", "L3 >= 0, L4 >= sqrt(1/2), R_i >= sqrt((1 + i)/2)", StepKind::exact, [&](CaseStep& s) {
        for (std::size_t i = 0; i < 4; ++i) s.add("L" + std::to_string(i + 1), R.approx(sL[i]));
        for (std::size_t i = 0; i < 4; ++i) s.add("R" + std::to_string(i + 1), R.approx(sR[i]));
        bool good = sL[2].sign() >= 0 && sL[3].sign() >= 0 && sL[3].square() >= SurdValue(Rational(Vp / 2));
        for (int i = 1; i <= 4; ++i)
            good = good && sR[static_cast<std::size_t>(i - 1)].sign() > 0 &&
                   sR[static_cast<std::size_t>(i - 1)].square() >= SurdValue(Rational(Vp * (1 + i) / 2));
        return good;
    });
    ok &= P.step("cheby", "segment Chebyshev bound on the L and R grids", StepKind::exact, [&](CaseStep& s) {
        SurdValue one(1), r12 = SurdValue::sqrt(ratio(1, 2));
        SurdValue L3 = min(R.norm(sL[2]), one), L4 = min(R.norm(sL[3]), one);
        std::vector<SurdValue> c{zero, L3, max(L3, r12), L4, one};
        std::vector<SurdValue> d{one};
        for (int i = 1; i <= 4; ++i) {
            SurdValue Ri = R.norm(sR[static_cast<std::size_t>(i - 1)]);
            d.push_back(Ri);
            d.push_back(max(Ri, SurdValue::sqrt(Rational(i + 2, 2))));
        }
        ChebyResult r = cheby_refined(R.dist(), c, d, ChebyVariant::segment);
        s.add("lhs", r.lhs);
        s.add("rhs", r.rhs);
        return r.holds;
    });
    // d_i, e_i, c_i
    std::array<SurdValue, 6> dd{sL[2], sL[3], sR[0], sR[1], sR[2], sR[3]};
    std::array<SurdValue, 6> ee, cc;
    for (int i = 1; i <= 6; ++i) {
        auto k = static_cast<std::size_t>(i - 1);
        ee[k] = R.unit_sqrt(Rational(i, 2));
        cc[k] = SurdValue(i) - R.sq(dd[k]) * Rational(2);
    }
    ok &= P.step("sneed", "(1/2)<-L1, L1> + <0, L2> >= sum c_i <d_i, e_i>", StepKind::exact, [&](CaseStep& s) {
        SurdValue lhs = SurdValue(Rational(R.hpr(-sL[0], sL[0]) / 2 + R.hpr(zero, sL[1])));
        SurdValue rhs;
        for (std::size_t k = 0; k < 6; ++k) {
            Rational p = R.hpr(dd[k], ee[k]);
            if (p != 0) rhs += cc[k] * p;
        }
        s.add("lhs", lhs);
        s.add("rhs", rhs);
        return lhs >= rhs;
    });
    ok &= P.step("compare", "<d_i, e_i> precedes <0, L2> for every i", StepKind::exact, [&](CaseStep& s) {
        bool all = true;
        Rational base = R.hpr(zero, sL[1]);
        for (std::size_t k = 0; k < 6; ++k) {
            CompareQuad q = R.quad(zero, sL[1], dd[k], ee[k]);
            Relation rel = prec_relation(q);
            Rational p = R.hpr(dd[k], ee[k]);
            s.add(std::string("i=") + std::to_string(k + 1) + " " + relation_name(rel), p);
            all = all && rel != Relation::none && p <= base;
        }
        return all;
    });
    ok &= P.step("cmax", "sum max(c_i, 0) <= 3/2", StepKind::exact, [&](CaseStep& s) {
        SurdValue sum;
        for (const auto& c : cc) sum += max(c, SurdValue(0));
        s.add("sum", sum);
        return sum <= SurdValue(ratio(3, 2));
    });
    ok &= P.step("cB", "sum of max(c_i, 0) over i whose segment does not precede <-L1, L1> is at most 1",
                 StepKind::exact, [&](CaseStep& s) {
                     SurdValue sum;
                     std::string B;
                     for (std::size_t k = 0; k < 6; ++k) {
                         Relation rel = prec_relation(R.quad(-sL[0], sL[0], dd[k], ee[k]));
                         if (rel == Relation::none) {
                             sum += max(cc[k], SurdValue(0));
                             B += (B.empty() ? "" : ",") + std::to_string(k + 1);
                         }
                     }
                     s.add("sum", sum);
                     s.note = "B = {" + B + "}";
                     return sum <= SurdValue(1);
                 });
    ok &= P.step("sum3", "sum <0, L_i> >= sum <R_i, inf)", StepKind::exact, [&](CaseStep& s) {
        Rational lhs = 0, rhs = 0;
        for (std::size_t i = 0; i < 4; ++i) {
            lhs += R.hpr(zero, sL[i]);
            rhs += R.tail(sR[i]);
        }
        s.add("lhs", lhs);
        s.add("rhs", rhs);
        return lhs >= rhs;
    });
    return ok;
}

inline bool run_case5_three(Pipeline& P) {
    Reduced R(P.w().tail(3));
    bool ok = case5_three_core(P, R, eliminate3_LR(P.w()));
    ok &= P.target(3, R);
    return ok;
}

inline bool run_case5(Pipeline& P, CaseReport& rep) {
    if (P.le(P.A(1), ratio(19, 100))) {
        rep.subcase = "a2-small";
        return run_case5_a2_small(P);
    }
    if (P.le(P.A(2), ratio(15, 100))) {
        rep.subcase = "a3-small";
        return P.two_elim_gauss();
    }
    rep.subcase = "three-elimination";
    return run_case5_three(P);
}

inline bool run_case6_three(Pipeline& P) {
    const WeightVector& w = P.w();
    Reduced R(w.tail(3));
    Thresholds3 T = eliminate3_LR(w);
    const auto &sL = T.sL, &sR = T.sR;
    SurdValue zero(0), one(1);
    SurdValue L3sq = R.sq(sL[2]), L4sq = R.sq(sL[3]);
    SurdValue M1 = max(max(one - L3sq, SurdValue(ratio(3, 2)) - L4sq), SurdValue(ratio(1, 2)));
    SurdValue M2;
    for (int i = 1; i <= 4; ++i) {
        SurdValue v = (R.sq(sR[static_cast<std::size_t>(i - 1)]) - one) / Rational(i);
        M2 = i == 1 ? v : min(M2, v);
    }
    auto [Ein, Eout] = cheby_identity_sides(R.dist());
    bool ok = P.step("glue", "max(1 - L3^2, 3/2 - L4^2, 1/2) <= min_i (R_i^2 - 1)/i", StepKind::exact, [&](CaseStep& s) {
        s.add("lhs", M1);
        s.add("rhs", M2);
        return M1 <= M2;
    });
    std::string sub;
    std::vector<SurdValue> grid;
    if (sL[2] >= R.one()) {
        sub = "L3 >= 1";
        grid = {zero, R.one()};
    } else if (sL[3] >= R.one()) {
        sub = "L4 >= 1 > L3";
        grid = {zero, sL[2], R.one()};
    } else {
        sub = "L4 < 1";
        grid = {zero, sL[2], sL[3], R.one()};
        ok &= P.step("sigma", "sigma <= 3 - a1 + a2 - 5 a3", StepKind::exact, [&](CaseStep&) {
            return R.one() <= P.rV() * Rational(3) + SurdValue(Rational(P.A(1) - P.A(0) - 5 * P.A(2)));
        });
        ok &= P.compare("compare", "<L4, 1> against <-L3, L3>", R, R.quad(-sL[2], sL[2], sL[3], R.one()));
    }
    ok &= P.step("cheby-lhs", "Chebyshev lower bound on E[(1 - X'^2) 1{|X'| < 1}]", StepKind::exact, [&](CaseStep& s) {
        SurdValue lhs = P.cheby_lhs(R, grid);
        s.add("lhs", lhs);
        s.add("E_in", Ein);
        s.note = sub;
        return lhs >= SurdValue(Ein);
    });
    Rational lhs39 = R.hpr(-sL[0], sL[1]) + R.hpr(zero, sL[2]) + R.hpr(zero, sL[3]);
    Rational rhs39 = 0;
    for (const auto& r : sR) rhs39 += R.tail(r);
    ok &= P.step("lhs", "LHS >= (c/2) E[(1 - X'^2) 1{|X'| < 1}]", StepKind::exact, [&](CaseStep& s) {
        SurdValue v = M1 * Rational(2 * lhs39);
        s.add("LHS", lhs39);
        return v >= SurdValue(Ein);
    });
    ok &= P.step("cheby-rhs", "E[(X'^2 - 1) 1{|X'| > 1}] >= (1/d) sum Pr[|X'| >= sqrt(1 + i/d)]", StepKind::exact,
                 [&](CaseStep& s) {
                     SurdValue sum;
                     for (int i = 1; i <= 4; ++i) sum += SurdValue(R.ge_sqrt(one + M2 * Rational(i)) * 2);
                     SurdValue rhs = M2 * sum;
                     s.add("E_out", Eout);
                     s.add("rhs", rhs);
                     return SurdValue(Eout) >= rhs;
                 });
    ok &= P.step("rhs", "RHS <= (d/2) E[(X'^2 - 1) 1{|X'| > 1}]", StepKind::exact, [&](CaseStep& s) {
        s.add("RHS", rhs39);
        return M2 * Rational(2 * rhs39) <= SurdValue(Eout);
    });
    ok &= P.step("need", "<-L1, L2> + <0, L3> + <0, L4> >= sum <R_i, inf)", StepKind::exact, [&](CaseStep& s) {
        s.add("lhs", lhs39);
        s.add("rhs", rhs39);
        return lhs39 >= rhs39;
    });
    ok &= P.target(3, R);
    return ok;
}

inline bool run_case6(Pipeline& P, CaseReport& rep) {
    if (P.le(P.A(2), ratio(15, 100))) {
        rep.subcase = "a3-small";
        bool ok = P.step("a2", "a2 >= 0.19", StepKind::exact, [&](CaseStep&) { return P.ge(P.A(1), ratio(19, 100)); });
        return P.two_elim_gauss() && ok;
    }
    rep.subcase = "three-elimination";
    return run_case6_three(P);
}

// 1 <= j < k, zero-based, with a2 + a_j + a_k <= 1 and a_j, a_k >= 1 - 2 a1
inline std::optional<std::pair<std::size_t, std::size_t>> find_mid_pair(const Pipeline& P) {
    const WeightVector& w = P.w();
    SurdValue floor_ = P.rV() - SurdValue(Rational(2 * P.A(0)));
    for (std::size_t j = 1; j < w.n(); ++j) {
        if (SurdValue(w[j]) < floor_) break;
        for (std::size_t k = j + 1; k < w.n(); ++k) {
            if (SurdValue(w[k]) < floor_) break;
            if (P.le(Rational(w[1] + w[j] + w[k]), 1)) return std::make_pair(j, k);
        }
    }
    return std::nullopt;
}

// L4 >= L3 >= sqrt(1/2) and R_i >= sqrt(1 + i/2), on the reduced scale
inline bool l34ri(const Reduced& R, const Thresholds3& T, CaseStep& s) {
    const Rational& Vp = R.Vp();
    for (std::size_t i = 0; i < 4; ++i) s.add("L" + std::to_string(i + 1), R.approx(T.sL[i]));
    for (std::size_t i = 0; i < 4; ++i) s.add("R" + std::to_string(i + 1), R.approx(T.sR[i]));
    bool good = T.sL[3] >= T.sL[2] && T.sL[2].sign() >= 0 && T.sL[2].square() >= SurdValue(Rational(Vp / 2));
    for (int i = 1; i <= 4; ++i) {
        const SurdValue& r = T.sR[static_cast<std::size_t>(i - 1)];
        good = good && r.sign() > 0 && r.square() >= SurdValue(Rational(Vp * Rational(2 + i, 2)));
    }
    return good;
}

inline bool cheby_sqrt_grid(Pipeline& P, const Reduced& R, const Thresholds3& T) {
    return P.step("cheby", "Chebyshev bound with c = 0, min(L3,1), min(L4,1), 1 and d = 1, sqrt(3/2), ..., sqrt 3",
                  StepKind::exact, [&](CaseStep& s) {
                      SurdValue one(1);
                      std::vector<SurdValue> c{SurdValue(0), min(R.norm(T.sL[2]), one), min(R.norm(T.sL[3]), one), one};
                      std::vector<SurdValue> d{one, SurdValue::sqrt(ratio(3, 2)), SurdValue::sqrt(2),
                                               SurdValue::sqrt(ratio(5, 2)), SurdValue::sqrt(3)};
                      ChebyResult r = cheby_refined(R.dist(), c, d);
                      s.add("lhs", r.lhs);
                      s.add("rhs", r.rhs);
                      return r.holds;
                  });
}

inline bool need3(Pipeline& P, const Reduced& R, const Thresholds3& T) {
    return P.step("need", "<-L1, L2> + <0, L3> + <0, L4> >= sum Pr[X' > R_i]", StepKind::exact, [&](CaseStep& s) {
        SurdValue zero(0);
        Rational lhs = R.hpr(-T.sL[0], T.sL[1]) + R.hpr(zero, T.sL[2]) + R.hpr(zero, T.sL[3]);
        Rational rhs = 0;
        for (const auto& r : T.sR) rhs += R.gt(r);
        s.add("lhs", lhs);
        s.add("rhs", rhs);
        return lhs >= rhs;
    });
}

inline bool run_case7_mid(Pipeline& P, std::size_t k) {
    const WeightVector& w = P.w();
    Reduced R(w.tail(3));
    Thresholds3 T = eliminate3_LR(w);
    const auto &sL = T.sL, &sR = T.sR;
    SurdValue zero(0), one(1);
    bool ok = P.step("mid-ai", "Pr[X' in (L4, 1)] <= 2 Pr[X' in (-L1, L2]], also split on x_k", StepKind::exact,
                     [&](CaseStep& s) {
                         MidAiReport m = check_mid_ai(w, k + 1);
                         s.add("k", static_cast<double>(k + 1));
                         s.add("lhs", m.lhs);
                         s.add("rhs", m.rhs);
                         s.add("split-", m.split[0]);
                         s.add("split+", m.split[1]);
                         return m.ok();
                     });
    SurdValue L4sq = R.sq(sL[3]);
    SurdValue M1 = max(SurdValue(ratio(1, 2)), (SurdValue(3) - L4sq * Rational(2)) / Rational(3));
    SurdValue M2;
    for (int i = 1; i <= 4; ++i) {
        SurdValue v = (R.sq(sR[static_cast<std::size_t>(i - 1)]) - one) / Rational(i);
        M2 = i == 1 ? v : min(M2, v);
    }
    ok &= P.step("aux", "max(1/2, (3 - 2 L4^2)/3) <= min_i (R_i^2 - 1)/i", StepKind::exact, [&](CaseStep& s) {
        s.add("lhs", M1);
        s.add("rhs", M2);
        return M1 <= M2;
    });
    ok &= P.step("l3", "L3 >= 1/sqrt 2", StepKind::exact, [&](CaseStep& s) {
        s.add("L3", R.approx(sL[2]));
        return sL[2].sign() >= 0 && sL[2].square() >= SurdValue(Rational(R.Vp() / 2));
    });
    auto [Ein, Eout] = cheby_identity_sides(R.dist());
    Rational lhs = (R.le(sL[1]) - R.lt(-sL[0])) + (R.le(sL[3]) - R.lt(-sL[2]));
    Rational rhs = 0;
    for (const auto& r : sR) rhs += R.gt(r);
    if (sL[3] < R.one()) {
        ok &= P.step("lhs2", "2<0, L3] + (-L1, L2] >= c <0, L3] + c (1 - L4^2) (L4, 1)", StepKind::exact, [&](CaseStep& s) {
            Rational p03 = R.half_closed(sL[2]);
            Rational pmid = R.le(sL[1]) - R.le(-sL[0]);
            Rational p41 = R.lt(R.one()) - R.le(sL[3]);
            SurdValue c = M1.inverse();
            SurdValue l = SurdValue(Rational(2 * p03 + pmid));
            SurdValue r = c * p03 + c * (one - L4sq) * p41;
            s.add("lhs", l);
            s.add("rhs", r);
            s.note = "L4 < 1";
            return l >= r;
        });
    }
    ok &= P.step("lhs", "LHS >= (c/2) E[(1 - X'^2) 1{|X'| < 1}]", StepKind::exact, [&](CaseStep& s) {
        s.add("LHS", lhs);
        s.add("E_in", Ein);
        return M1 * Rational(2 * lhs) >= SurdValue(Ein);
    });
    ok &= P.step("rhs", "RHS <= (d/2) E[(X'^2 - 1) 1{|X'| > 1}]", StepKind::exact, [&](CaseStep& s) {
        s.add("RHS", rhs);
        s.add("E_out", Eout);
        return M2 * Rational(2 * rhs) <= SurdValue(Eout);
    });
    ok &= P.target(3, R);
    return ok;
}

inline bool run_case7_pair(Pipeline& P, std::size_t j, std::size_t k) {
    const WeightVector& w = P.w();
    WeightVector rest = without(w, {0, j, k});
    Reduced R(rest);
    Thresholds3 T = thresholds3(w[0], w[j], w[k], w.variance(), rest.variance());
    bool ok = P.step("aux", "L4 >= L3 >= sqrt(1/2), R_i >= sqrt(1 + i/2)", StepKind::exact, [&](CaseStep& s) {
        s.note = "eliminated 1, " + std::to_string(j + 1) + ", " + std::to_string(k + 1);
        return l34ri(R, T, s);
    });
    ok &= P.step("sigma", "sigma <= 2 - a1 - 2 a_j", StepKind::exact, [&](CaseStep&) {
        return R.one() <= P.rV() * Rational(2) - SurdValue(Rational(w[0] + 2 * w[j]));
    });
    ok &= P.compare("compare", "<L4, 1> against <-L1, L2>", R, R.quad(-T.sL[0], T.sL[1], T.sL[3], R.one()));
    ok &= cheby_sqrt_grid(P, R, T);
    ok &= need3(P, R, T);
    ok &= P.step("target", "eliminated form of the main inequality (weights 1, j, k)", StepKind::exact, [&](CaseStep& s) {
        std::vector<Rational> head{w[0], w[j], w[k]};
        Rational sum = 0;
        for (unsigned m = 0; m < 8; ++m) sum += R.gt(P.rV() - SurdValue(signed_prefix_sum(head, m)));
        s.add("tail_sum", sum);
        return sum <= 2;
    });
    return ok;
}

inline bool run_case7_few(Pipeline& P) {
    const WeightVector& w = P.w();
    Reduced R(w.tail(3));
    Thresholds3 T = eliminate3_LR(w);
    bool ok = P.step("aux", "L4 >= L3 >= sqrt(1/2), R_i >= sqrt(1 + i/2)", StepKind::exact,
                     [&](CaseStep& s) { return l34ri(R, T, s); });
    SurdValue cap = SurdValue(Rational(P.A(0) + P.A(1) + P.A(2))) - P.rV();
    ok &= P.step("small", "a_i <= a1 + a2 + a3 - 1 for i >= 5", StepKind::exact, [&](CaseStep&) {
        for (std::size_t i = 4; i < w.n(); ++i)
            if (SurdValue(w[i]) > cap) return false;
        return true;
    });
    ok &= P.step("sigma", "sigma <= 5 - 3 a1 - 5 a2 - 3 a3", StepKind::exact, [&](CaseStep&) {
        return R.one() <= P.rV() * Rational(5) - SurdValue(Rational(3 * P.A(0) + 5 * P.A(1) + 3 * P.A(2)));
    });
    ok &= P.step("compare-split", "<L4, 1> against <-L1, L2> with x_4 fixed to each sign", StepKind::exact,
                 [&](CaseStep& s) {
                     if (w.n() < 5) throw TooFewVariables("need a fifth weight");
                     Reduced R2(w.tail(4));
                     bool all = true;
                     for (int b : {-1, 1}) {
                         SurdValue sh(Rational(b * P.A(3)));
                         CompareResult c = check_seg_compare(
                             R2.dist(), R2.quad(-T.sL[0] - sh, T.sL[1] - sh, T.sL[3] - sh, R.one() - sh));
                         s.add(std::string("b=") + (b < 0 ? "-1" : "+1") + " lhs", c.lhs);
                         s.add(std::string("b=") + (b < 0 ? "-1" : "+1") + " rhs", c.rhs);
                         all = all && c.holds;
                     }
                     return all;
                 });
    ok &= P.step("compare", "<L4, 1> <= <-L1, L2>", StepKind::exact, [&](CaseStep& s) {
        Rational a = R.hpr(T.sL[3], R.one()), b = R.hpr(-T.sL[0], T.sL[1]);
        s.add("lhs", a);
        s.add("rhs", b);
        return a <= b;
    });
    ok &= cheby_sqrt_grid(P, R, T);
    ok &= need3(P, R, T);
    ok &= P.target(3, R);
    return ok;
}

inline bool case7_many_core(Pipeline& P, const Reduced& R, const std::vector<SurdValue>& T) {
    const Rational& Vp = R.Vp();
    SurdValue one = R.one(), zero(0);
    bool ok = P.step("battery", "lower bounds on the 32 thresholds", StepKind::exact, [&](CaseStep& s) {
        bool good = T[12].sign() > 0 && T[12] * max(T[10], T[17]) >= SurdValue(Vp);
        s.add("T12*max(T10,T17)", (T[12] * max(T[10], T[17])).to_double() / Vp.get_d());
        auto group = [&](std::initializer_list<int> ks, const SurdValue& bound) {
            for (int k : ks) {
                s.add("T" + std::to_string(k), R.approx(T[static_cast<std::size_t>(k)]));
                good = good && T[static_cast<std::size_t>(k)] >= bound;
            }
        };
        group({18, 20, 24}, one);
        group({11, 13, 14}, R.unit_sqrt(2));
        group({19, 21, 22, 25, 26, 28}, one * Rational(2));
        group({15, 23, 27, 29, 30, 31}, R.unit_sqrt(6));
        return good;
    });
    SurdValue tmax = max(T[10], T[17]);
    ok &= P.step("pairs", "paired tails with T_i + T_j > 0 sum to at most 1", StepKind::exact, [&](CaseStep& s) {
        bool good = true;
        const int P5[][2] = {{0, 7}, {1, 6}, {2, 9}, {3, 8}, {5, 16}, {4, 10}, {4, 17}};
        for (const auto& pr : P5) {
            const SurdValue &a = T[static_cast<std::size_t>(pr[0])], &b = T[static_cast<std::size_t>(pr[1])];
            good = good && (a + b).sign() > 0 && R.gt(a) + R.gt(b) <= 1;
        }
        Rational p = R.gt(T[4]) + R.gt(min(T[10], T[17]));
        s.add("Pr[>T4]+Pr[>min(T10,T17)]", p);
        return good && p <= 1;
    });
    ok &= P.step("nm51", "remaining tails, with max(T10, T17), sum to at most 2", StepKind::exact, [&](CaseStep& s) {
        Rational sum = R.gt(tmax);
        for (int i = 0; i < 32; ++i) {
            if (i <= 10 || i == 16 || i == 17) continue;
            sum += R.gt(T[static_cast<std::size_t>(i)]);
        }
        s.add("sum", sum);
        return sum <= 2;
    });
    Rational p012 = R.half_closed(T[12]);
    ok &= P.step("inductive", "<0, T12] >= Pr[X' > 1/T12]", StepKind::instance, [&](CaseStep& s) {
        Rational p = R.gt(SurdValue(Vp) / T[12]);
        s.add("lhs", p012);
        s.add("rhs", p);
        return p012 >= p;
    });
    ok &= P.step("t1t", "<0, T12] >= Pr[X' > max(T10, T17)]", StepKind::exact, [&](CaseStep& s) {
        Rational p = R.gt(tmax);
        s.add("lhs", p012);
        s.add("rhs", p);
        return p012 >= p;
    });
    Rational p01 = R.half_closed(one);
    ok &= P.step("cheby", "<0, 1] >= (1/3) sum_i Pr[X' > sqrt(1 + i/3)]", StepKind::exact, [&](CaseStep& s) {
        Rational sum = 0;
        for (int i = 1;; ++i) {
            Rational p = R.gt_sqrt(SurdValue(Rational(3 + i, 3)));
            if (p == 0) break;
            sum += p;
        }
        s.add("lhs", p01);
        s.add("rhs", Rational(sum / 3));
        return 3 * p01 >= sum;
    });
    ok &= P.step("nm52", "<0, 1] >= (1/3) sum of the fifteen upper tails", StepKind::exact, [&](CaseStep& s) {
        Rational sum = 0;
        for (int i : {11, 13, 14, 15, 19, 21, 22, 23, 25, 26, 27, 28, 29, 30, 31}) sum += R.gt(T[static_cast<std::size_t>(i)]);
        s.add("lhs", p01);
        s.add("rhs", Rational(sum / 3));
        return 3 * p01 >= sum;
    });
    return ok;
}

inline bool run_case7_many(Pipeline& P) {
    Reduced R(P.w().tail(5));
    EliminationResult E = eliminate(P.w(), 5);
    bool ok = P.step("region", "1 - a2 - a4 <= a5 and a1 <= 0.387", StepKind::exact, [&](CaseStep&) {
        return P.rV() - SurdValue(Rational(P.A(1) + P.A(3))) <= SurdValue(P.A(4)) && P.le(P.A(0), ratio(387, 1000));
    });
    ok &= case7_many_core(P, R, E.scaled);
    ok &= P.target(5, R);
    return ok;
}

inline bool run_case7(Pipeline& P, CaseReport& rep) {
    const WeightVector& w = P.w();
    SurdValue lo = SurdValue(Rational(P.A(0) + P.A(1) + P.A(2))) - P.rV();
    SurdValue hi = P.rV() - SurdValue(Rational(P.A(0) + P.A(1)));
    for (std::size_t k = 3; k < w.n(); ++k) {
        SurdValue a(w[k]);
        if (a >= lo && a <= hi) {
            rep.subcase = "middle-weight";
            return run_case7_mid(P, k);
        }
    }
    if (auto jk = find_mid_pair(P)) {
        rep.subcase = "middle-pair";
        return run_case7_pair(P, jk->first, jk->second);
    }
    std::size_t big = 0;
    for (std::size_t i = 0; i < w.n(); ++i)
        if (SurdValue(w[i]) > hi) ++big;
    if (big <= 4) {
        rep.subcase = "few-large";
        return run_case7_few(P);
    }
    rep.subcase = "many-large";
    return run_case7_many(P);
}

}  // namespace detail

// Runs the chain of the instance's case; every step is recorded, failing or not.
inline CaseReport run_case_pipeline(const WeightVector& w, const CaseOptions& opt = {}) {
    if (w.n() > opt.max_n)
        throw DimensionTooLarge("case pipelines need n <= " + std::to_string(opt.max_n) + ", got " + std::to_string(w.n()));
    CaseReport rep;
    rep.instance = w.str();
    rep.label = classify_case(w);
    if (opt.force_case != 0) {
        if (opt.force_case < 1 || opt.force_case > 7) throw std::invalid_argument("case index must be 1..7");
        rep.label.index = opt.force_case;
        rep.label.description = case_description(opt.force_case);
    }
    detail::Pipeline P(w, rep);
    P.set_prefix("");
    bool ok = false;
    switch (rep.label.index) {
        case 1: ok = detail::run_case1(P, rep); break;
        case 2: ok = detail::run_case2(P, rep); break;
        case 3: ok = detail::run_case3(P, rep); break;
        case 4: ok = detail::run_case4(P, rep); break;
        case 5: ok = detail::run_case5(P, rep); break;
        case 6: ok = detail::run_case6(P, rep); break;
        default: ok = detail::run_case7(P, rep); break;
    }
    rep.verdict = ok;
    return rep;
}

// The reduced chain of the 3- or 5-elimination for normalized leading weights a_1..a_m, run on a
// stand-in X' whose own weights take the place of the rest. Steps that need the full vector are skipped.
inline CaseReport run_reduced_chain(const std::vector<Rational>& head, const WeightVector& xp) {
    std::size_t m = head.size();
    if (m != 3 && m != 5) throw std::invalid_argument("reduced chains exist for m = 3 and m = 5");
    Rational rest = 1;
    for (const auto& a : head) rest -= a * a;
    if (rest <= 0) throw ZeroResidualVariance("leading weights use up the variance");
    std::vector<Rational> hw(head);
    for (std::size_t i = 0; i < m; ++i) {
        if (hw[i] <= 0 || (i > 0 && hw[i] > hw[i - 1])) throw InvalidWeights("leading weights must be positive, non-increasing");
    }
    CaseReport rep;
    rep.instance = xp.str();
    rep.subcase = m == 3 ? "reduced-three" : "reduced-five";
    rep.label.index = m == 3 ? 5 : 7;
    rep.label.description = case_description(rep.label.index);
    double a1 = hw[0].get_d(), a2 = hw[1].get_d(), a3 = hw[2].get_d();
    rep.label.a1 = a1;
    rep.label.a12 = a1 + a2;
    rep.label.a123 = a1 + a2 + a3;
    WeightVector dummy({Rational(1)});
    detail::Pipeline P(dummy, rep);
    detail::Reduced R(xp);
    // normalized thresholds put on the scale of the stand-in
    auto place = [&](const Rational& s) { return xp.scale(SurdValue(Rational(1 - s)).div_sqrt(rest)); };
    if (m == 3) {
        Thresholds3 t = thresholds3(hw[0], hw[1], hw[2], Rational(1), rest);
        for (std::size_t i = 0; i < 4; ++i) {
            t.sL[i] = xp.scale(t.L[i]);
            t.sR[i] = xp.scale(t.R[i]);
        }
        rep.verdict = detail::case5_three_core(P, R, t);
    } else {
        std::vector<SurdValue> T;
        for (unsigned k = 0; k < 32; ++k) T.push_back(place(signed_prefix_sum(hw, k)));
        rep.verdict = detail::case7_many_core(P, R, T);
    }
    return rep;
}

inline void require_case(const CaseReport& r) {
    if (r.verdict) return;
    const CaseStep* s = r.first_failure();
    std::string id = s ? s->id : "verdict";
    std::string msg = "case " + std::to_string(r.label.index) + " step " + id + " failed";
    if (s && !s->note.empty()) msg += ": " + s->note;
    throw CaseStepFailed(id, msg);
}

inline CaseReport verify_case_instance(const WeightVector& w, const CaseOptions& opt = {}) {
    CaseReport r = run_case_pipeline(w, opt);
    require_case(r);
    return r;
}

inline std::vector<CaseReport> run_case_batch(const std::vector<WeightVector>& ws, unsigned workers = 0,
                                              const CaseOptions& opt = {}) {
    std::vector<CaseReport> out(ws.size());
    parallel_for(ws.size(), [&](std::size_t i) { out[i] = run_case_pipeline(ws[i], opt); }, workers);
    return out;
}

}  // namespace rsum
