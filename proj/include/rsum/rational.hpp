#pragma once

#include <gmpxx.h>

#include <cctype>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rsum {

using Rational = mpq_class;
using Integer = mpz_class;

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {
inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}
}  // namespace detail

// Accepts "p/q", "-12", "0.31", "1.5e-3". Decimals are read as the exact value written.
inline Rational parse_rational(std::string_view text) {
    auto s = detail::trim(text);
    if (s.empty()) throw ParseError("empty number");
    if (auto slash = s.find('/'); slash != std::string_view::npos) {
        Rational num = parse_rational(s.substr(0, slash));
        Rational den = parse_rational(s.substr(slash + 1));
        if (den == 0) throw ParseError("zero denominator in '" + std::string(text) + "'");
        Rational r = num / den;
        r.canonicalize();
        return r;
    }
    bool neg = false;
    std::size_t i = 0;
    if (s[i] == '+' || s[i] == '-') {
        neg = s[i] == '-';
        ++i;
    }
    std::string digits;
    long frac = 0;
    bool seen_dot = false, any = false;
    for (; i < s.size(); ++i) {
        char c = s[i];
        if (std::isdigit(static_cast<unsigned char>(c))) {
            digits.push_back(c);
            any = true;
            if (seen_dot) ++frac;
        } else if (c == '.' && !seen_dot) {
            seen_dot = true;
        } else {
            break;
        }
    }
    if (!any) throw ParseError("not a number: '" + std::string(text) + "'");
    long exp10 = 0;
    if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
        ++i;
        std::string e(s.substr(i));
        if (e.empty()) throw ParseError("bad exponent in '" + std::string(text) + "'");
        std::size_t used = 0;
        try {
            exp10 = std::stol(e, &used);
        } catch (const std::exception&) {
            throw ParseError("bad exponent in '" + std::string(text) + "'");
        }
        if (used != e.size()) throw ParseError("trailing characters in '" + std::string(text) + "'");
        i = s.size();
    }
    if (i != s.size()) throw ParseError("trailing characters in '" + std::string(text) + "'");
    Integer num(digits, 10);
    Integer den = 1;
    long shift = exp10 - frac;
    Integer p;
    mpz_ui_pow_ui(p.get_mpz_t(), 10, static_cast<unsigned long>(shift < 0 ? -shift : shift));
    if (shift >= 0)
        num *= p;
    else
        den = p;
    Rational r(num, den);
    r.canonicalize();
    return neg ? Rational(-r) : r;
}

inline Rational ratio(long p, long q) {
    Rational r(p, q);
    r.canonicalize();
    return r;
}

inline std::string to_string(const Rational& r) { return r.get_str(); }

inline Integer floor_q(const Rational& r) {
    Integer f;
    mpz_fdiv_q(f.get_mpz_t(), r.get_num_mpz_t(), r.get_den_mpz_t());
    return f;
}

inline Integer ceil_q(const Rational& r) {
    Integer c;
    mpz_cdiv_q(c.get_mpz_t(), r.get_num_mpz_t(), r.get_den_mpz_t());
    return c;
}

inline Integer lcm(const Integer& a, const Integer& b) {
    Integer r;
    mpz_lcm(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    return r;
}

inline bool fits_int64(const Integer& z) {
    static const Integer lo("-9223372036854775808"), hi("9223372036854775807");
    return z >= lo && z <= hi;
}

inline std::int64_t to_int64(const Integer& z) {
    if (!fits_int64(z)) throw std::overflow_error("integer does not fit in 64 bits");
    if (z.fits_slong_p()) return z.get_si();
    // long is 64-bit on the supported platforms; keep a string path for completeness.
    return std::stoll(z.get_str());
}

inline Rational pow2q(unsigned n) {
    Integer p;
    mpz_ui_pow_ui(p.get_mpz_t(), 2, n);
    return Rational(p);
}

// Exact rational square root if r is a perfect square, otherwise false.
inline bool exact_sqrt(const Rational& r, Rational& out) {
    if (r < 0) return false;
    if (mpz_perfect_square_p(r.get_num_mpz_t()) == 0 || mpz_perfect_square_p(r.get_den_mpz_t()) == 0)
        return false;
    Integer n, d;
    mpz_sqrt(n.get_mpz_t(), r.get_num_mpz_t());
    mpz_sqrt(d.get_mpz_t(), r.get_den_mpz_t());
    out = Rational(n, d);
    out.canonicalize();
    return true;
}

}  // namespace rsum
