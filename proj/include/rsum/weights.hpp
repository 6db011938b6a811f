#pragma once

#include "rsum/rational.hpp"
#include "rsum/surd.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rsum {

struct InvalidWeights : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DimensionTooLarge : std::length_error {
    using std::length_error::length_error;
};

inline constexpr std::size_t kMaxEnumeration = 24;

// Positive rational weights sorted non-increasing, with the exact variance cached.
class WeightVector {
public:
    WeightVector() = default;

    explicit WeightVector(std::vector<Rational> a) : a_(std::move(a)) {
        if (a_.empty()) throw InvalidWeights("weight vector is empty");
        for (auto& x : a_) {
            x.canonicalize();
            if (x <= 0) throw InvalidWeights("weights must be positive, got " + x.get_str());
        }
        std::sort(a_.begin(), a_.end(), [](const Rational& x, const Rational& y) { return x > y; });
        V_ = 0;
        for (const auto& x : a_) V_ += x * x;
    }

    static WeightVector parse_list(const std::string& text) {
        std::vector<Rational> a;
        std::string tok;
        std::istringstream in(text);
        while (std::getline(in, tok, ',')) {
            auto t = detail::trim(tok);
            if (!t.empty()) a.push_back(parse_rational(t));
        }
        return WeightVector(std::move(a));
    }

    // One weight per line, "p/q" or decimal; '#' starts a comment.
    static WeightVector parse_stream(std::istream& in) {
        std::vector<Rational> a;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
            auto t = detail::trim(line);
            if (t.empty()) continue;
            try {
                a.push_back(parse_rational(t));
            } catch (const ParseError& e) {
                throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
            }
        }
        return WeightVector(std::move(a));
    }

    static WeightVector load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ParseError("cannot open weight file '" + path + "'");
        return parse_stream(in);
    }

    std::size_t n() const { return a_.size(); }
    const std::vector<Rational>& weights() const { return a_; }
    const Rational& operator[](std::size_t i) const { return a_.at(i); }
    const Rational& variance() const { return V_; }
    const Rational& max_weight() const { return a_.front(); }
    const Rational& min_weight() const { return a_.back(); }

    // a_i^2 / V, the square of the normalized weight.
    Rational normalized_sq(std::size_t i) const { return a_.at(i) * a_.at(i) / V_; }
    double normalized(std::size_t i) const { return std::sqrt(normalized_sq(i).get_d()); }
    std::vector<double> normalized_doubles() const {
        std::vector<double> r;
        double s = std::sqrt(V_.get_d());
        for (const auto& x : a_) r.push_back(x.get_d() / s);
        return r;
    }

    // Normalized value c expressed on this vector's scale: c * sqrt(V).
    SurdValue scale(const SurdValue& c) const { return c * SurdValue::sqrt(V_); }
    SurdValue sigma() const { return SurdValue::sqrt(V_); }

    WeightVector scaled(const Rational& lambda) const {
        std::vector<Rational> b;
        for (const auto& x : a_) b.push_back(x * lambda);
        return WeightVector(std::move(b));
    }

    // Drops the first m weights.
    WeightVector tail(std::size_t m) const {
        if (m >= a_.size()) throw InvalidWeights("tail would be empty");
        return WeightVector(std::vector<Rational>(a_.begin() + static_cast<std::ptrdiff_t>(m), a_.end()));
    }

    std::string str() const {
        std::string s;
        for (std::size_t i = 0; i < a_.size(); ++i) {
            if (i) s += ",";
            s += a_[i].get_str();
        }
        return s;
    }

    friend bool operator==(const WeightVector& x, const WeightVector& y) { return x.a_ == y.a_; }

private:
    std::vector<Rational> a_;
    Rational V_{0};
};

}  // namespace rsum
