#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <stdexcept>
#include <string>

namespace brw {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline double to_double(const Rational& r) { return r.template convert_to<double>(); }
inline double to_double(double x) { return x; }

inline Rational rational_pow(Rational base, long long e) {
    if (e < 0) throw std::domain_error("rational_pow: negative exponent");
    Rational out = 1;
    while (e > 0) {
        if (e & 1) out *= base;
        base *= base;
        e >>= 1;
    }
    return out;
}

// Parses "p/q" or a plain integer string.
inline Rational rational_from_string(const std::string& s) {
    auto slash = s.find('/');
    if (slash == std::string::npos) return Rational(BigInt(s));
    return Rational(BigInt(s.substr(0, slash)), BigInt(s.substr(slash + 1)));
}

inline std::string to_string(const Rational& r) {
    return r.str();
}

template <class S> inline constexpr bool is_rational_v = false;
template <> inline constexpr bool is_rational_v<Rational> = true;

// abs that works for both double and Rational without ADL surprises.
// Concrete overloads (not a template) so Boost expression templates from
// e.g. `a - b` collapse to Rational before the comparison.
inline Rational abs_val(const Rational& x) { return x < 0 ? Rational(-x) : x; }
inline double abs_val(double x) { return x < 0.0 ? -x : x; }

}  // namespace brw
