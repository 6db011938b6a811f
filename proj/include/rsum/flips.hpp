#pragma once

#include "rsum/rational.hpp"
#include "rsum/surd.hpp"
#include "rsum/weights.hpp"

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace rsum {

struct PreconditionViolated : std::domain_error {
    using std::domain_error::domain_error;
};
struct NotInImage : std::domain_error {
    using std::domain_error::domain_error;
};

// Element of {-1,1}^n; bit i set means coordinate i+1 is +1.
struct SignVector {
    std::uint32_t bits = 0;
    unsigned n = 0;

    SignVector() = default;
    SignVector(std::uint32_t b, unsigned len) : bits(b & mask(len)), n(len) {
        if (len > 32) throw std::length_error("sign vectors are limited to 32 coordinates");
    }
    static SignVector all_plus(unsigned len) { return SignVector(mask(len), len); }
    static SignVector from(const std::vector<int>& s) {
        SignVector v(0, static_cast<unsigned>(s.size()));
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] != 1 && s[i] != -1) throw std::invalid_argument("sign entries must be +1 or -1");
            if (s[i] == 1) v.bits |= 1u << i;
        }
        return v;
    }
    static std::uint32_t mask(unsigned len) { return len >= 32 ? 0xffffffffu : ((1u << len) - 1u); }

    int operator[](unsigned i) const { return (bits >> i) & 1u ? 1 : -1; }
    SignVector negated() const { return SignVector(~bits, n); }
    SignVector flipped(unsigned i) const { return SignVector(bits ^ (1u << i), n); }
    // negates coordinates 1..k
    SignVector prefix_negated(unsigned k) const { return SignVector(bits ^ mask(k), n); }

    std::string str() const {
        std::string s = "(";
        for (unsigned i = 0; i < n; ++i) {
            if (i) s += ",";
            s += (*this)[i] > 0 ? "+" : "-";
        }
        return s + ")";
    }
    friend bool operator==(const SignVector& a, const SignVector& b) { return a.n == b.n && a.bits == b.bits; }
    friend bool operator!=(const SignVector& a, const SignVector& b) { return !(a == b); }
    friend bool operator<(const SignVector& a, const SignVector& b) { return a.bits < b.bits; }
};

// Weights scaled to integers by the lcm D of their denominators, so X(v) is exact int64.
struct IntWeights {
    std::vector<std::int64_t> k;
    Integer D = 1;

    IntWeights() = default;
    explicit IntWeights(const WeightVector& w) {
        for (const auto& a : w.weights()) D = lcm(D, a.get_den());
        Integer total = 0;
        for (const auto& a : w.weights()) {
            Integer z = a.get_num() * (D / a.get_den());
            total += z;
            if (total > Integer(1) << 62) throw std::overflow_error("scaled weights exceed 2^62");
            k.push_back(to_int64(z));
        }
    }
    IntWeights(std::vector<std::int64_t> kk, Integer d) : k(std::move(kk)), D(std::move(d)) {}

    unsigned n() const { return static_cast<unsigned>(k.size()); }
    std::int64_t X(SignVector v) const {
        std::int64_t s = 0;
        for (unsigned i = 0; i < k.size(); ++i) s += (v.bits >> i) & 1u ? k[i] : -k[i];
        return s;
    }
    std::int64_t max_k() const { return *std::max_element(k.begin(), k.end()); }
    std::int64_t min_k() const { return *std::min_element(k.begin(), k.end()); }
    Rational value(std::int64_t s) const { return Rational(Integer(s)) / D; }
    // Integer threshold n with: s >= n  iff  s/D >= Q/2 (or > Q/2 when strict).
    std::int64_t half_threshold(const SurdValue& Q, bool strict) const {
        SurdValue h = Q * Rational(D) / Rational(2);
        Integer t = strict ? Integer(h.floor() + 1) : h.ceil();
        if (!fits_int64(t)) return t > 0 ? INT64_MAX : INT64_MIN;
        return to_int64(t);
    }
};

// ---- prefix flip ----

inline SignVector prefix_flip_int(const IntWeights& a, std::int64_t need, SignVector v) {
    std::int64_t s = 0;
    for (unsigned i = 0; i < a.n(); ++i) {
        s += v[i] > 0 ? a.k[i] : -a.k[i];
        if (s >= need) return v.prefix_negated(i + 1);
    }
    throw PreconditionViolated("prefix flip needs X(v) >= Q/2");
}

inline SignVector prefix_flip_inverse_int(const IntWeights& a, std::int64_t need, SignVector u) {
    std::int64_t s = 0;
    for (unsigned i = 0; i < a.n(); ++i) {
        s += u[i] > 0 ? a.k[i] : -a.k[i];
        if (-s >= need) {
            SignVector v = u.prefix_negated(i + 1);
            if (prefix_flip_int(a, need, v) != u) break;
            return v;
        }
    }
    throw NotInImage("vector is not in the image of the prefix flip");
}

inline SignVector prefix_flip(const IntWeights& a, const SurdValue& Q, SignVector v, bool strict = false) {
    if (Q.sign() < 0) throw PreconditionViolated("prefix flip needs Q >= 0");
    return prefix_flip_int(a, a.half_threshold(Q, strict), v);
}
inline SignVector prefix_flip(const WeightVector& w, const SurdValue& Q, SignVector v, bool strict = false) {
    return prefix_flip(IntWeights(w), Q, v, strict);
}
inline SignVector prefix_flip_inverse(const IntWeights& a, const SurdValue& Q, SignVector u, bool strict = false) {
    return prefix_flip_inverse_int(a, a.half_threshold(Q, strict), u);
}
inline SignVector prefix_flip_inverse(const WeightVector& w, const SurdValue& Q, SignVector u, bool strict = false) {
    return prefix_flip_inverse(IntWeights(w), Q, u, strict);
}

// ---- single coordinate flip (weights must be non-increasing) ----

inline SignVector single_flip(const IntWeights& a, SignVector v) {
    if (a.X(v) <= 0) throw PreconditionViolated("single flip needs X(v) > 0");
    int S = 0, best = 0;
    unsigned k = 0;
    for (unsigned i = 0; i < a.n(); ++i) {
        S += v[i];
        if (i == 0 || S > best) {
            best = S;
            k = i;
        }
    }
    return v.flipped(k);
}
inline SignVector single_flip(const WeightVector& w, SignVector v) { return single_flip(IntWeights(w), v); }

// The only possible preimage of u: flip coordinate 1 + (last index i in 0..n-1 where the
// partial sum S_i(u) is maximal). The maximum runs over S_0..S_n; with S_0 left out the
// case k = 1 is misread. Returns false when there is no preimage.
inline bool single_flip_candidate(const IntWeights& a, SignVector u, SignVector& out) {
    unsigned n = a.n();
    std::vector<int> S(n + 1, 0);
    for (unsigned i = 0; i < n; ++i) S[i + 1] = S[i] + u[i];
    int mx = *std::max_element(S.begin(), S.end());
    int found = -1;
    for (unsigned i = 0; i < n; ++i)
        if (S[i] >= mx) found = static_cast<int>(i);
    if (found < 0) return false;
    unsigned k = static_cast<unsigned>(found);
    if (u[k] > 0) return false;
    SignVector c = u.flipped(k);
    if (a.X(c) <= 0 || single_flip(a, c) != u) return false;
    out = c;
    return true;
}

inline SignVector single_flip_inverse(const IntWeights& a, SignVector u) {
    SignVector c;
    if (!single_flip_candidate(a, u, c)) throw NotInImage("vector is not in the image of the single flip");
    return c;
}
inline SignVector single_flip_inverse(const WeightVector& w, SignVector u) { return single_flip_inverse(IntWeights(w), u); }

// ---- recursive flip; F(v) = -SF(v) on {X > 0} ----

inline SignVector recursive_flip(const IntWeights& a, SignVector v) {
    if (a.X(v) > 0) return single_flip(a, v);
    SignVector z = v;
    std::uint64_t guard = std::uint64_t{1} << a.n();
    for (std::uint64_t step = 0; step <= guard; ++step) {
        SignVector c;
        // z in Image(F) iff -z in Image(SF); then F^{-1}(z) = SF^{-1}(-z)
        if (!single_flip_candidate(a, z.negated(), c)) return z.negated();
        z = c;
    }
    throw std::logic_error("recursive flip chain did not terminate");
}
inline SignVector recursive_flip(const WeightVector& w, SignVector v) { return recursive_flip(IntWeights(w), v); }

inline SignVector recursive_flip_inverse(const IntWeights& a, SignVector u) {
    SignVector c;
    if (single_flip_candidate(a, u, c)) return c;
    SignVector z = u.negated();
    std::uint64_t guard = std::uint64_t{1} << a.n();
    for (std::uint64_t step = 0; a.X(z) > 0; ++step) {
        if (step > guard) throw std::logic_error("recursive flip inverse did not terminate");
        z = single_flip(a, z).negated();
    }
    if (recursive_flip(a, z) != u) throw NotInImage("recursive flip inverse failed round trip");
    return z;
}
inline SignVector recursive_flip_inverse(const WeightVector& w, SignVector u) {
    return recursive_flip_inverse(IntWeights(w), u);
}

enum class FlipKind { prefix, single, recursive };

inline SignVector flip_inverse(FlipKind kind, const WeightVector& w, SignVector target, const SurdValue& Q = SurdValue(),
                               bool strict = false) {
    switch (kind) {
        case FlipKind::prefix: return prefix_flip_inverse(w, Q, target, strict);
        case FlipKind::single: return single_flip_inverse(w, target);
        default: return recursive_flip_inverse(w, target);
    }
}

// Completes a partial injection on {0..2^n-1} to a permutation: identity off both the
// domain and the image, then the remaining non-domain points are matched, in sorted
// order, to the remaining non-image points.
template <class InDomain, class Map>
std::vector<std::uint32_t> complete_to_bijection(unsigned n, InDomain in_domain, Map map) {
    std::size_t N = std::size_t{1} << n;
    std::vector<std::uint32_t> table(N);
    std::vector<char> dom(N, 0), img(N, 0);
    for (std::size_t x = 0; x < N; ++x) {
        if (!in_domain(static_cast<std::uint32_t>(x))) continue;
        dom[x] = 1;
        std::uint32_t y = map(static_cast<std::uint32_t>(x));
        if (img[y]) throw std::logic_error("partial map is not injective");
        img[y] = 1;
        table[x] = y;
    }
    std::vector<std::uint32_t> from, to;
    for (std::size_t x = 0; x < N; ++x) {
        if (dom[x]) continue;
        if (!img[x]) table[x] = static_cast<std::uint32_t>(x);
        else from.push_back(static_cast<std::uint32_t>(x));
    }
    for (std::size_t y = 0; y < N; ++y)
        if (!img[y] && dom[y]) to.push_back(static_cast<std::uint32_t>(y));
    for (std::size_t i = 0; i < from.size(); ++i) table[from[i]] = to[i];
    return table;
}

inline std::vector<std::uint32_t> prefix_flip_table(const WeightVector& w, const SurdValue& Q, bool strict = false) {
    IntWeights a(w);
    std::int64_t need = a.half_threshold(Q, strict);
    unsigned n = a.n();
    return complete_to_bijection(
        n, [&](std::uint32_t x) { return a.X(SignVector(x, n)) >= need; },
        [&](std::uint32_t x) { return prefix_flip_int(a, need, SignVector(x, n)).bits; });
}

inline std::vector<std::uint32_t> single_flip_table(const WeightVector& w) {
    IntWeights a(w);
    unsigned n = a.n();
    return complete_to_bijection(
        n, [&](std::uint32_t x) { return a.X(SignVector(x, n)) > 0; },
        [&](std::uint32_t x) { return single_flip(a, SignVector(x, n)).bits; });
}

// Exhaustive check of the three maps on one weight vector: injective on their domains,
// inverse round trip, and the value intervals. Q is the prefix-flip shift.
struct FlipAudit {
    unsigned n = 0;
    std::size_t prefix_domain = 0, single_domain = 0;
    bool prefix_ok = true, single_ok = true, recursive_ok = true;
    std::string witness;  // first failure, empty when everything holds
    bool ok() const { return prefix_ok && single_ok && recursive_ok; }
};

inline FlipAudit audit_flips(const WeightVector& w, const SurdValue& Q) {
    IntWeights a(w);
    FlipAudit r;
    r.n = a.n();
    if (r.n > 24) throw DimensionTooLarge("flip audits enumerate 2^n vectors; n <= 24");
    if (Q.sign() <= 0) throw PreconditionViolated("the prefix-flip shift Q must be positive");
    std::uint32_t N = 1u << r.n;
    std::int64_t M = a.max_k(), m = a.min_k();
    SurdValue QD = Q * Rational(a.D);
    std::int64_t need = a.half_threshold(Q, false);
    auto note = [&](bool& flag, const std::string& what, SignVector v) {
        if (flag && r.witness.empty()) r.witness = what + " at " + v.str();
        flag = false;
    };
    std::vector<char> hit(N, 0);
    for (std::uint32_t x = 0; x < N; ++x) {
        SignVector v(x, r.n);
        std::int64_t Xv = a.X(v);
        if (Xv < need) continue;
        ++r.prefix_domain;
        SignVector u = prefix_flip_int(a, need, v);
        std::int64_t Xu = a.X(u);
        if (!(SurdValue(Xv - Xu) >= QD && SurdValue(Xv - Xu - 2 * M) < QD)) note(r.prefix_ok, "prefix flip interval", v);
        if (hit[u.bits]++) note(r.prefix_ok, "prefix flip collision", v);
        if (prefix_flip_inverse_int(a, need, u) != v) note(r.prefix_ok, "prefix flip inverse", v);
    }
    std::fill(hit.begin(), hit.end(), 0);
    for (std::uint32_t x = 0; x < N; ++x) {
        SignVector v(x, r.n);
        std::int64_t Xv = a.X(v);
        if (Xv <= 0) continue;
        ++r.single_domain;
        SignVector u = single_flip(a, v);
        std::int64_t Xu = a.X(u);
        if (__builtin_popcount(u.bits ^ v.bits) != 1 || (v.bits & ~u.bits) == 0) note(r.single_ok, "single flip shape", v);
        if (Xu < Xv - 2 * M || Xu > Xv - 2 * m) note(r.single_ok, "single flip interval", v);
        if (hit[u.bits]++) note(r.single_ok, "single flip collision", v);
        if (single_flip_inverse(a, u) != v) note(r.single_ok, "single flip inverse", v);
    }
    std::fill(hit.begin(), hit.end(), 0);
    for (std::uint32_t x = 0; x < N; ++x) {
        SignVector v(x, r.n);
        SignVector u = recursive_flip(a, v);
        std::int64_t Xv = a.X(v), Xu = a.X(u);
        if (Xv > 0) {
            if (Xu < Xv - 2 * M || Xu > Xv - 2 * m) note(r.recursive_ok, "recursive flip interval", v);
        } else if (!(u == v.negated() || (Xu >= Xv - 2 * M && Xu < 0))) {
            note(r.recursive_ok, "recursive flip interval", v);
        }
        if (hit[u.bits]++) note(r.recursive_ok, "recursive flip collision", v);
        if (recursive_flip_inverse(a, u) != v) note(r.recursive_ok, "recursive flip inverse", v);
    }
    return r;
}

}  // namespace rsum
