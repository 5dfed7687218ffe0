#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sfpas {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

/// Thrown for malformed user input. The CLI maps it to exit code 2.
struct InvalidInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown when an iterative method or a combinatorial guard gives up.
/// The CLI maps it to exit code 3.
struct LimitExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline Rational make_rational(std::int64_t num, std::int64_t den = 1) {
    if (den == 0) throw InvalidInput("zero denominator");
    return Rational(BigInt(num), BigInt(den));
}

/// Parses "p", "-p", "p/q" (also tolerates surrounding blanks).
inline Rational parse_rational(std::string_view text) {
    auto trim = [](std::string_view s) {
        while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
        while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
        return s;
    };
    auto is_integer = [](std::string_view s) {
        if (s.empty()) return false;
        std::size_t i = (s.front() == '-' || s.front() == '+') ? 1 : 0;
        if (i == s.size()) return false;
        for (; i < s.size(); ++i)
            if (s[i] < '0' || s[i] > '9') return false;
        return true;
    };
    auto to_int = [](std::string_view s) {
        if (s.front() == '+') s.remove_prefix(1);
        return BigInt(std::string(s));
    };
    text = trim(text);
    auto slash = text.find('/');
    std::string_view num = trim(text.substr(0, slash));
    std::string_view den = slash == std::string_view::npos ? std::string_view("1") : trim(text.substr(slash + 1));
    if (!is_integer(num) || !is_integer(den))
        throw InvalidInput("not a rational number: '" + std::string(text) + "'");
    BigInt d = to_int(den);
    if (d == 0) throw InvalidInput("zero denominator in '" + std::string(text) + "'");
    return Rational(to_int(num), d);
}

/// Canonical text form: "p" for integers, "p/q" otherwise (q > 0, reduced).
inline std::string to_string(const Rational& q) {
    const BigInt& d = boost::multiprecision::denominator(q);
    std::string out = boost::multiprecision::numerator(q).str();
    if (d != 1) out += "/" + d.str();
    return out;
}

inline double to_double(const Rational& q) { return q.convert_to<double>(); }

inline int sign(const Rational& q) { return q.sign(); }

}  // namespace sfpas
