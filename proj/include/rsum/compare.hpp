#pragma once

#include "rsum/dist.hpp"
#include "rsum/flips.hpp"
#include "rsum/surd.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace rsum {

struct HypothesisNotSatisfied : std::domain_error {
    using std::domain_error::domain_error;
};

// Claim <C,D> <=_X <A,B>; M bounds the largest weight of X. All values on X's own scale.
struct CompareQuad {
    SurdValue A, B, C, D;
    Rational M;
};

enum class Relation { degenerate, lemma2, lemma1, none };

inline const char* relation_name(Relation r) {
    switch (r) {
        case Relation::degenerate: return "degenerate";
        case Relation::lemma2: return "lemma2";
        case Relation::lemma1: return "lemma1";
        default: return "none";
    }
}

// min(|A|,|B|) <= C and D - C + 2M <= B - A
inline bool lemma1_holds(const CompareQuad& q) {
    SurdValue m = min(q.A.abs(), q.B.abs());
    return m <= q.C && q.D - q.C + SurdValue(2 * q.M) <= q.B - q.A;
}

// |A| <= C and 2 max(M, D - B) <= C - A
inline bool lemma2_holds(const CompareQuad& q) {
    SurdValue mx = max(SurdValue(q.M), q.D - q.B);
    return q.A.abs() <= q.C && mx * Rational(2) <= q.C - q.A;
}

inline Relation prec_relation(const CompareQuad& q) {
    if (q.D <= q.C) return Relation::degenerate;
    if (lemma2_holds(q)) return Relation::lemma2;
    if (lemma1_holds(q)) return Relation::lemma1;
    return Relation::none;
}

namespace detail {
inline IntWeights restrict_to(const IntWeights& a, const std::vector<unsigned>& idx) {
    std::vector<std::int64_t> k;
    for (unsigned i : idx) k.push_back(a.k[i]);
    return IntWeights(std::move(k), a.D);
}
inline SignVector gather(SignVector v, const std::vector<unsigned>& idx) {
    SignVector r(0, static_cast<unsigned>(idx.size()));
    for (unsigned j = 0; j < idx.size(); ++j)
        if (v[idx[j]] > 0) r.bits |= 1u << j;
    return r;
}
inline SignVector scatter(SignVector base, SignVector part, const std::vector<unsigned>& idx) {
    for (unsigned j = 0; j < idx.size(); ++j) {
        std::uint32_t bit = 1u << idx[j];
        if (part[j] > 0) base.bits |= bit;
        else base.bits &= ~bit;
    }
    return base;
}
}  // namespace detail

// Two-step injection f for the lemma2 hypotheses: recursive flip on the large
// coordinates L = {a_i >= (D-B)/2}, then a prefix flip by Q_v on the rest when Q_v > 0.
class SegmentInjection {
public:
    SegmentInjection(const WeightVector& w, const CompareQuad& q) : a_(w), q_(q) {
        if (!lemma2_holds(q)) throw PreconditionViolated("quad does not satisfy the lemma2 hypotheses");
        if (SurdValue(q.M) < SurdValue(w.max_weight()))
            throw PreconditionViolated("M is smaller than the largest weight");
        gap_ = q.D - q.B;
        trivial_ = gap_.sign() <= 0;
        for (unsigned i = 0; i < a_.n(); ++i) {
            if (!trivial_ && SurdValue(w[i] * 2) >= gap_) L_.push_back(i);
            else S_.push_back(i);
        }
        aL_ = detail::restrict_to(a_, L_);
        aS_ = detail::restrict_to(a_, S_);
    }

    bool in_domain(SignVector v) const {
        Rational x = a_.value(a_.X(v));
        return SurdValue(x) >= q_.C && SurdValue(x) <= q_.D;
    }

    SignVector apply(SignVector v) const {
        if (!in_domain(v)) throw PreconditionViolated("X(v) is outside [C, D]");
        if (trivial_) return v;
        SignVector vL = detail::gather(v, L_);
        SignVector wL = L_.empty() ? vL : recursive_flip(aL_, vL);
        SignVector u = detail::scatter(v, wL, L_);
        SurdValue Qv = qv(vL, wL);
        if (Qv.sign() > 0) {
            SignVector wS = detail::gather(v, S_);
            u = detail::scatter(u, prefix_flip(aS_, Qv, wS), S_);
        }
        return u;
    }

    SignVector invert(SignVector u) const {
        if (trivial_) return u;
        SignVector uL = detail::gather(u, L_);
        SignVector vL = L_.empty() ? uL : recursive_flip_inverse(aL_, uL);
        SignVector v = detail::scatter(u, vL, L_);
        SurdValue Qv = qv(vL, uL);
        if (Qv.sign() > 0) v = detail::scatter(v, prefix_flip_inverse(aS_, Qv, detail::gather(u, S_)), S_);
        return v;
    }

    const std::vector<unsigned>& large() const { return L_; }
    const std::vector<unsigned>& small() const { return S_; }
    const IntWeights& int_weights() const { return a_; }

private:
    IntWeights a_, aL_, aS_;
    CompareQuad q_;
    SurdValue gap_;
    bool trivial_ = false;
    std::vector<unsigned> L_, S_;

    SurdValue qv(SignVector vL, SignVector wL) const {
        if (L_.empty()) return gap_;
        Rational drop = aL_.value(aL_.X(vL) - aL_.X(wL));
        return gap_ - SurdValue(drop);
    }
};

inline SignVector segment_injection(const WeightVector& w, const CompareQuad& q, SignVector v) {
    return SegmentInjection(w, q).apply(v);
}

// Prefix-flip injection for the lemma1 hypotheses. When |A| > |B| it works on the
// mirrored segment <-B,-A> and negates the result.
class PrefixInjection {
public:
    PrefixInjection(const WeightVector& w, const CompareQuad& q, bool strict = false) : a_(w), q_(q), strict_(strict) {
        if (!lemma1_holds(q)) throw PreconditionViolated("quad does not satisfy the lemma1 hypotheses");
        if (SurdValue(q.M) < SurdValue(w.max_weight()))
            throw PreconditionViolated("M is smaller than the largest weight");
        mirrored_ = q.A.abs() > q.B.abs();
        SurdValue B = mirrored_ ? -q.A : q.B;
        Q_ = q.D - B;
        trivial_ = Q_.sign() <= 0;
    }
    bool mirrored() const { return mirrored_; }
    SignVector apply(SignVector v) const {
        Rational x = a_.value(a_.X(v));
        if (SurdValue(x) < q_.C || SurdValue(x) > q_.D) throw PreconditionViolated("X(v) is outside [C, D]");
        SignVector u = trivial_ ? v : prefix_flip(a_, Q_, v, strict_);
        return mirrored_ ? u.negated() : u;
    }
    SignVector invert(SignVector u) const {
        SignVector z = mirrored_ ? u.negated() : u;
        return trivial_ ? z : prefix_flip_inverse(a_, Q_, z, strict_);
    }

private:
    IntWeights a_;
    CompareQuad q_;
    bool strict_;
    bool mirrored_ = false, trivial_ = false;
    SurdValue Q_;
};

struct CompareResult {
    Rational lhs, rhs;
    bool holds;
    Relation relation;
};

inline void require_relation(const ExactDist& d, const CompareQuad& q, Relation r) {
    if (r == Relation::none) throw HypothesisNotSatisfied("neither comparison lemma applies and D > C");
    if (r != Relation::degenerate && SurdValue(q.M) < SurdValue(d.weights().max_weight()))
        throw HypothesisNotSatisfied("M is smaller than the largest weight");
}

// Pr[X in <C,D>] <= Pr[X in <A,B>]
inline CompareResult check_seg_compare(const ExactDist& d, const CompareQuad& q) {
    Relation r = prec_relation(q);
    require_relation(d, q, r);
    Rational lhs = d.hpr(q.C, q.D);
    Rational rhs = d.hpr(q.A, q.B);
    return {lhs, rhs, lhs <= rhs, r};
}

// Same comparison with both segments of the given endpoint type.
inline CompareResult check_other_segment_types(const ExactDist& d, const CompareQuad& q, End lo_kind, End hi_kind) {
    Relation r = prec_relation(q);
    require_relation(d, q, r);
    Rational lhs = d.segment_prob(Segment::between(q.C, q.D, lo_kind, hi_kind));
    Rational rhs = d.segment_prob(Segment::between(q.A, q.B, lo_kind, hi_kind));
    return {lhs, rhs, lhs <= rhs, r};
}

// Pr[X in [C,D>] <= Pr[X in (A,B>] under |A| <= C, D - C + 2M <= B - A and D > B.
// D > B is needed: with D <= B and C = A the atom at C counts fully on the left only.
inline CompareResult check_semi_compare(const ExactDist& d, const CompareQuad& q) {
    if (!(q.A.abs() <= q.C && q.D - q.C + SurdValue(2 * q.M) <= q.B - q.A && q.D > q.B))
        throw HypothesisNotSatisfied("needs |A| <= C, D - C + 2M <= B - A and D > B");
    if (SurdValue(q.M) < SurdValue(d.weights().max_weight()))
        throw HypothesisNotSatisfied("M is smaller than the largest weight");
    Rational lhs = d.segment_prob(Segment::between(q.C, q.D, End::closed, End::half));
    Rational rhs = d.segment_prob(Segment::between(q.A, q.B, End::open, End::half));
    return {lhs, rhs, lhs <= rhs, Relation::lemma1};
}

struct InjectionAudit {
    std::size_t domain = 0;
    bool injective = true;
    bool lands_inside = true;
    bool endpoints_ok = true;
    bool round_trip = true;
    std::string witness;
    bool ok() const { return injective && lands_inside && endpoints_ok && round_trip; }
};

// Runs an injection over the whole cube and checks X(u) in [A,B], injectivity,
// X(u) = A only from X(v) = C, X(u) = B only from X(v) = D, and the inverse.
// With strict_ends off, an endpoint of [A,B] only has to come from some endpoint of [C,D].
template <class Inj>
InjectionAudit audit_injection(const Inj& f, const IntWeights& a, const CompareQuad& q, bool strict_ends = true) {
    InjectionAudit rep;
    unsigned n = a.n();
    std::vector<char> hit(std::size_t{1} << n, 0);
    for (std::uint32_t x = 0; x < (1u << n); ++x) {
        SignVector v(x, n);
        SurdValue xv(a.value(a.X(v)));
        if (xv < q.C || xv > q.D) continue;
        ++rep.domain;
        SignVector u = f.apply(v);
        SurdValue xu(a.value(a.X(u)));
        if (hit[u.bits]) {
            rep.injective = false;
            rep.witness = "collision at " + u.str();
        }
        hit[u.bits] = 1;
        if (xu < q.A || xu > q.B) {
            rep.lands_inside = false;
            rep.witness = v.str() + " -> " + u.str() + " outside [A,B]";
        }
        bool bad = strict_ends ? ((xu == q.A && xv != q.C) || (xu == q.B && xv != q.D))
                               : ((xu == q.A || xu == q.B) && xv != q.C && xv != q.D);
        if (bad) {
            rep.endpoints_ok = false;
            rep.witness = v.str() + " -> " + u.str() + " breaks endpoint rule";
        }
        if (f.invert(u) != v) {
            rep.round_trip = false;
            rep.witness = "inverse fails at " + u.str();
        }
    }
    return rep;
}

}  // namespace rsum
