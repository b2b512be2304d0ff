#pragma once

#include <gmpxx.h>

#include <cctype>
#include <charconv>
#include <cmath>
#include <concepts>
#include <cstdlib>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>

#include "conemix/errors.hpp"

namespace conemix {

using Rational = mpq_class;

template <class T>
inline constexpr bool is_rational_v = std::is_same_v<T, Rational>;

template <class T>
concept Scalar = std::same_as<T, double> || std::same_as<T, Rational>;

/// Numerical thresholds used by the floating-point path. They are ignored by
/// exact rational computations.
struct Tolerances {
    double eps_rank = 1e-9;      // relative singular-value cutoff
    double eps_cluster = 1e-7;   // eigenvalue clustering radius
    double eps_interior = 1e-10; // strict-positivity margin, relative to |x|

    bool operator==(const Tolerances&) const = default;
};

struct ScalarMode {
    enum class Kind { ExactRational, Float };

    Kind kind = Kind::ExactRational;
    Tolerances tol{};

    static ScalarMode exact() { return {Kind::ExactRational, {}}; }
    static ScalarMode floating(Tolerances t = {}) { return {Kind::Float, t}; }

    bool is_exact() const { return kind == Kind::ExactRational; }
};

inline double to_double(double v) { return v; }
/// Nearest double (get_d truncates toward zero).
inline double to_double(const Rational& v) {
    const double t = v.get_d();
    if (!std::isfinite(t)) return t;
    const double away = std::nextafter(t, sgn(v) < 0 ? -INFINITY : INFINITY);
    if (!std::isfinite(away)) return t;
    const Rational gap_t = abs(v - Rational(t));
    const Rational gap_away = abs(Rational(away) - v);
    return gap_away < gap_t ? away : t;
}

template <Scalar T>
inline T from_double(double v) {
    if constexpr (is_rational_v<T>) {
        return Rational(v);  // exact binary value
    } else {
        return v;
    }
}

inline bool is_zero(double v, double eps = 0.0) { return std::abs(v) <= eps; }
inline bool is_zero(const Rational& v, double = 0.0) { return sgn(v) == 0; }

inline int sign_of(double v, double eps = 0.0) { return v > eps ? 1 : (v < -eps ? -1 : 0); }
inline int sign_of(const Rational& v, double = 0.0) { return sgn(v); }

inline double abs_of(double v) { return std::abs(v); }
inline Rational abs_of(const Rational& v) { return Rational(abs(v)); }

inline std::string to_string(const Rational& q) {
    return q.get_den() == 1 ? q.get_num().get_str() : q.get_str();
}

/// Parses "p", "p/q", or a plain decimal literal ("-1.25", "3e-2") exactly.
inline std::optional<Rational> parse_rational(std::string_view text) {
    std::string s(text);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    if (s.empty()) return std::nullopt;

    auto valid_int = [](std::string_view t) {
        if (!t.empty() && (t.front() == '-' || t.front() == '+')) t.remove_prefix(1);
        if (t.empty()) return false;
        for (char c : t)
            if (c < '0' || c > '9') return false;
        return true;
    };
    auto make_int = [](std::string t) {
        if (!t.empty() && t.front() == '+') t.erase(t.begin());
        return mpz_class(t, 10);
    };

    if (auto slash = s.find('/'); slash != std::string::npos) {
        std::string num = s.substr(0, slash), den = s.substr(slash + 1);
        if (!valid_int(num) || !valid_int(den)) return std::nullopt;
        mpz_class d = make_int(den);
        if (d == 0) return std::nullopt;
        Rational q(make_int(num), d);
        q.canonicalize();
        return q;
    }

    // decimal with optional exponent
    std::string mantissa = s;
    long exponent = 0;
    if (auto e = s.find_first_of("eE"); e != std::string::npos) {
        std::string exp_part = s.substr(e + 1);
        if (!valid_int(exp_part)) return std::nullopt;
        exponent = std::stol(exp_part);
        mantissa = s.substr(0, e);
    }
    std::string digits;
    long frac_digits = 0;
    bool seen_dot = false;
    for (std::size_t i = 0; i < mantissa.size(); ++i) {
        char c = mantissa[i];
        if ((c == '-' || c == '+') && i == 0) {
            if (c == '-') digits.push_back('-');
        } else if (c == '.' && !seen_dot) {
            seen_dot = true;
        } else if (c >= '0' && c <= '9') {
            digits.push_back(c);
            if (seen_dot) ++frac_digits;
        } else {
            return std::nullopt;
        }
    }
    if (!valid_int(digits)) return std::nullopt;
    Rational q(make_int(digits));
    long shift = exponent - frac_digits;
    mpz_class ten_pow;
    mpz_ui_pow_ui(ten_pow.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(shift)));
    if (shift >= 0)
        q *= ten_pow;
    else
        q /= ten_pow;
    q.canonicalize();
    return q;
}

/// Rational whose decimal expansion is the shortest round-trip form of v,
/// so that a literal like 0.1 maps to 1/10 instead of its binary value.
inline Rational rational_from_decimal(double v) {
    if (!std::isfinite(v)) throw Error(ErrorCode::Schema, "non-finite number");
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return *parse_rational(std::string_view(buf, static_cast<std::size_t>(res.ptr - buf)));
}

/// Best rational approximation with denominator <= max_den (continued fractions).
inline Rational rationalize(double v, long max_den = 1000000) {
    if (!std::isfinite(v)) return Rational(0);
    bool neg = v < 0;
    double x = std::abs(v);
    mpz_class p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    for (int iter = 0; iter < 64; ++iter) {
        double a = std::floor(x);
        mpz_class ai(a);
        mpz_class p2 = ai * p1 + p0, q2 = ai * q1 + q0;
        if (q2 > max_den) break;
        p0 = p1; q0 = q1; p1 = p2; q1 = q2;
        double frac = x - a;
        if (frac < 1e-15) break;
        x = 1.0 / frac;
    }
    Rational q(p1, q1);
    q.canonicalize();
    return neg ? Rational(-q) : q;
}

}  // namespace conemix
