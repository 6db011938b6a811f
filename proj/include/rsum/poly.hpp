#pragma once

#include "rsum/rational.hpp"

#include <cctype>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rsum {

// variable name -> exponent, exponents always positive
using Monomial = std::map<std::string, unsigned>;

// Sparse polynomial over Q. Terms with zero coefficient are never stored, so two
// polynomials are equal iff their term maps are equal.
class Poly {
public:
    Poly() = default;
    Poly(const Rational& c) {  // NOLINT(implicit)
        if (c != 0) terms_[{}] = c;
    }
    Poly(int c) : Poly(Rational(c)) {}  // NOLINT(implicit)
    static Poly var(const std::string& name) {
        Poly p;
        p.terms_[{{name, 1u}}] = 1;
        return p;
    }

    const std::map<Monomial, Rational>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }

    bool is_constant() const { return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first.empty()); }
    Rational constant() const {
        auto it = terms_.find({});
        return it == terms_.end() ? Rational(0) : it->second;
    }

    unsigned degree() const {
        unsigned d = 0;
        for (const auto& [m, c] : terms_) {
            unsigned k = 0;
            for (const auto& [v, e] : m) k += e;
            d = std::max(d, k);
        }
        return d;
    }
    bool is_affine() const { return degree() <= 1; }

    std::set<std::string> variables() const {
        std::set<std::string> vs;
        for (const auto& [m, c] : terms_)
            for (const auto& [v, e] : m) vs.insert(v);
        return vs;
    }

    // coefficient of a single variable in an affine polynomial
    Rational linear_coeff(const std::string& v) const {
        auto it = terms_.find({{v, 1u}});
        return it == terms_.end() ? Rational(0) : it->second;
    }

    Poly& operator+=(const Poly& o) {
        for (const auto& [m, c] : o.terms_) add_term(m, c);
        return *this;
    }
    Poly& operator-=(const Poly& o) {
        for (const auto& [m, c] : o.terms_) add_term(m, -c);
        return *this;
    }
    friend Poly operator+(Poly a, const Poly& b) { return a += b; }
    friend Poly operator-(Poly a, const Poly& b) { return a -= b; }
    friend Poly operator-(const Poly& a) { return Poly() - a; }

    friend Poly operator*(const Poly& a, const Poly& b) {
        Poly r;
        for (const auto& [ma, ca] : a.terms_)
            for (const auto& [mb, cb] : b.terms_) {
                Monomial m = ma;
                for (const auto& [v, e] : mb) m[v] += e;
                r.add_term(m, ca * cb);
            }
        return r;
    }
    Poly& operator*=(const Poly& o) { return *this = *this * o; }

    Poly pow(unsigned k) const {
        Poly r(1), b = *this;
        while (k) {
            if (k & 1) r *= b;
            k >>= 1;
            if (k) b *= b;
        }
        return r;
    }

    friend bool operator==(const Poly& a, const Poly& b) { return a.terms_ == b.terms_; }
    friend bool operator!=(const Poly& a, const Poly& b) { return !(a == b); }

    // Missing variables are an error: evaluation is only used at full points.
    Rational eval(const std::map<std::string, Rational>& at) const {
        Rational s = 0;
        for (const auto& [m, c] : terms_) {
            Rational t = c;
            for (const auto& [v, e] : m) {
                auto it = at.find(v);
                if (it == at.end()) throw std::invalid_argument("no value for variable " + v);
                for (unsigned i = 0; i < e; ++i) t *= it->second;
            }
            s += t;
        }
        s.canonicalize();
        return s;
    }

    // Coefficients in one variable, lowest degree first. Throws if other variables occur.
    std::vector<Rational> univariate_coeffs(const std::string& v) const {
        std::vector<Rational> c(degree() + 1, Rational(0));
        for (const auto& [m, k] : terms_) {
            unsigned e = 0;
            for (const auto& [w, ew] : m) {
                if (w != v) throw std::invalid_argument("not univariate in " + v);
                e = ew;
            }
            c[e] += k;
        }
        return c;
    }

    std::string str() const {
        if (terms_.empty()) return "0";
        std::ostringstream os;
        bool first = true;
        // highest degree first reads more naturally
        for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
            Rational c = it->second;
            bool neg = c < 0;
            if (neg) c = -c;
            if (first) os << (neg ? "-" : "");
            else os << (neg ? " - " : " + ");
            first = false;
            bool unit = c == 1 && !it->first.empty();
            if (!unit) os << c.get_str();
            bool star = !unit;
            for (const auto& [v, e] : it->first) {
                os << (star ? "*" : "") << v;
                if (e > 1) os << "^" << e;
                star = true;
            }
        }
        return os.str();
    }

private:
    void add_term(const Monomial& m, const Rational& c) {
        if (c == 0) return;
        auto [it, fresh] = terms_.emplace(m, c);
        if (!fresh) {
            it->second += c;
            it->second.canonicalize();
            if (it->second == 0) terms_.erase(it);
        }
    }

    std::map<Monomial, Rational> terms_;
};

inline bool poly_identity(const Poly& lhs, const Poly& rhs) { return lhs == rhs; }

// Abbreviations available to the parser; each is substituted as a parenthesised whole.
using PolyMacros = std::map<std::string, Poly>;

namespace detail {

class PolyParser {
public:
    PolyParser(std::string_view s, const PolyMacros& macros) : s_(s), macros_(macros) {}

    Poly parse() {
        Poly p = expr();
        skip();
        if (i_ != s_.size()) fail("unexpected '" + std::string(1, s_[i_]) + "'");
        return p;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError(what + " at column " + std::to_string(i_ + 1) + " of '" + std::string(s_) + "'");
    }
    void skip() {
        while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
    }
    bool eat(char c) {
        skip();
        if (i_ < s_.size() && s_[i_] == c) {
            ++i_;
            return true;
        }
        return false;
    }

    Poly expr() {
        Poly p = term();
        for (;;) {
            if (eat('+')) p += term();
            else if (eat('-')) p -= term();
            else return p;
        }
    }
    Poly term() {
        Poly p = unary();
        for (;;) {
            if (eat('*')) {
                p *= unary();
            } else if (eat('/')) {
                Poly d = unary();
                if (!d.is_constant() || d.constant() == 0) fail("division by a non-constant or zero");
                Rational inv = 1 / d.constant();
                inv.canonicalize();
                p *= Poly(inv);
            } else {
                return p;
            }
        }
    }
    Poly unary() {
        if (eat('-')) return -unary();
        if (eat('+')) return unary();
        return power();
    }
    Poly power() {
        Poly b = primary();
        if (eat('^')) {
            skip();
            std::size_t st = i_;
            while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
            if (st == i_) fail("exponent must be a nonnegative integer");
            return b.pow(static_cast<unsigned>(std::stoul(std::string(s_.substr(st, i_ - st)))));
        }
        return b;
    }
    Poly primary() {
        skip();
        if (i_ >= s_.size()) fail("unexpected end");
        char c = s_[i_];
        if (c == '(') {
            ++i_;
            Poly p = expr();
            if (!eat(')')) fail("missing ')'");
            return p;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t st = i_;
            while (i_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[i_])) || s_[i_] == '.')) ++i_;
            return Poly(parse_rational(s_.substr(st, i_ - st)));
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t st = i_;
            while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_'))
                ++i_;
            std::string name(s_.substr(st, i_ - st));
            if (auto it = macros_.find(name); it != macros_.end()) return it->second;
            return Poly::var(name);
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    std::string_view s_;
    const PolyMacros& macros_;
    std::size_t i_ = 0;
};

}  // namespace detail

inline Poly parse_poly(std::string_view text, const PolyMacros& macros = {}) {
    return detail::PolyParser(text, macros).parse();
}

}  // namespace rsum
