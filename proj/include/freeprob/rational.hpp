#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <complex>
#include <cstdint>
#include <string>

#include "freeprob/errors.hpp"

namespace freeprob {

using Rational = boost::multiprecision::cpp_rational;
using BigInt   = boost::multiprecision::cpp_int;

/// Complex number with exact rational real and imaginary parts.
/// std::complex is only specified for floating-point types, hence this.
struct RatComplex {
    Rational re{0};
    Rational im{0};

    RatComplex() = default;
    RatComplex(Rational r) : re(std::move(r)) {}
    RatComplex(Rational r, Rational i) : re(std::move(r)), im(std::move(i)) {}
    RatComplex(int n) : re(n) {}

    friend RatComplex operator+(const RatComplex& a, const RatComplex& b) {
        return {a.re + b.re, a.im + b.im};
    }
    friend RatComplex operator-(const RatComplex& a, const RatComplex& b) {
        return {a.re - b.re, a.im - b.im};
    }
    friend RatComplex operator-(const RatComplex& a) { return {-a.re, -a.im}; }
    friend RatComplex operator*(const RatComplex& a, const RatComplex& b) {
        return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
    }
    friend RatComplex operator/(const RatComplex& a, const RatComplex& b) {
        Rational n = b.re * b.re + b.im * b.im;
        if (n == 0) throw invalid_input("RatComplex: division by zero");
        return {(a.re * b.re + a.im * b.im) / n, (a.im * b.re - a.re * b.im) / n};
    }
    RatComplex& operator+=(const RatComplex& b) { return *this = *this + b; }
    RatComplex& operator-=(const RatComplex& b) { return *this = *this - b; }
    RatComplex& operator*=(const RatComplex& b) { return *this = *this * b; }
    friend bool operator==(const RatComplex& a, const RatComplex& b) {
        return a.re == b.re && a.im == b.im;
    }
    friend bool operator!=(const RatComplex& a, const RatComplex& b) { return !(a == b); }
};

inline RatComplex conj(const RatComplex& z) { return {z.re, -z.im}; }

/// Scalar field abstraction shared by the exact and floating engines.
/// `is_exact` selects zero-testing semantics: exact scalars compare to 0,
/// floating ones never claim exact zero.
template <class K> struct scalar_traits;

template <> struct scalar_traits<Rational> {
    static constexpr bool is_exact = true;
    static Rational zero() { return Rational(0); }
    static Rational one() { return Rational(1); }
    static Rational conj(const Rational& x) { return x; }
    static bool is_zero(const Rational& x) { return x == 0; }
    static double abs_double(const Rational& x) {
        return std::fabs(static_cast<double>(x));
    }
    static std::string to_string(const Rational& x) { return x.str(); }
    static Rational from_rational(const Rational& x) { return x; }
};

template <> struct scalar_traits<RatComplex> {
    static constexpr bool is_exact = true;
    static RatComplex zero() { return RatComplex(); }
    static RatComplex one() { return RatComplex(Rational(1)); }
    static RatComplex conj(const RatComplex& x) { return freeprob::conj(x); }
    static bool is_zero(const RatComplex& x) { return x.re == 0 && x.im == 0; }
    static double abs_double(const RatComplex& x) {
        return std::hypot(static_cast<double>(x.re), static_cast<double>(x.im));
    }
    static std::string to_string(const RatComplex& x) {
        if (x.im == 0) return x.re.str();
        Rational a = x.im < 0 ? Rational(-x.im) : x.im;
        return x.re.str() + (x.im < 0 ? "-" : "+") + a.str() + "i";
    }
    static RatComplex from_rational(const Rational& x) { return RatComplex(x); }
};

template <> struct scalar_traits<double> {
    static constexpr bool is_exact = false;
    static double zero() { return 0.0; }
    static double one() { return 1.0; }
    static double conj(double x) { return x; }
    static bool is_zero(double x) { return x == 0.0; }
    static double abs_double(double x) { return std::fabs(x); }
    static std::string to_string(double x) { return std::to_string(x); }
    static double from_rational(const Rational& x) { return static_cast<double>(x); }
};

template <> struct scalar_traits<std::complex<double>> {
    static constexpr bool is_exact = false;
    static std::complex<double> zero() { return {0.0, 0.0}; }
    static std::complex<double> one() { return {1.0, 0.0}; }
    static std::complex<double> conj(const std::complex<double>& x) { return std::conj(x); }
    static bool is_zero(const std::complex<double>& x) { return x == std::complex<double>(); }
    static double abs_double(const std::complex<double>& x) { return std::abs(x); }
    static std::string to_string(const std::complex<double>& x) {
        return std::to_string(x.real()) + "+" + std::to_string(x.imag()) + "i";
    }
    static std::complex<double> from_rational(const Rational& x) {
        return {static_cast<double>(x), 0.0};
    }
};

/// Parses "p/q", "p", or "p/q+r/s i" style strings ("i" suffix, optional
/// spaces). Used by the JSON loaders; throws invalid_input on garbage.
inline Rational parse_rational(const std::string& text) {
    std::string s;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
    if (s.empty()) throw invalid_input("parse_rational: empty string");
    try {
        return Rational(s);
    } catch (const std::exception&) {
        throw invalid_input("parse_rational: cannot parse '" + text + "'");
    }
}

inline RatComplex parse_rat_complex(const std::string& text) {
    std::string s;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
    if (s.empty()) throw invalid_input("parse_rat_complex: empty string");
    if (s.back() != 'i') return RatComplex(parse_rational(s));
    s.pop_back();
    // split at the last top-level '+' or '-' that is not the leading sign
    for (std::size_t k = s.size(); k-- > 1;) {
        if ((s[k] == '+' || s[k] == '-') && s[k - 1] != '/' && s[k - 1] != '+' && s[k - 1] != '-') {
            Rational re = parse_rational(s.substr(0, k));
            std::string im = s.substr(k);
            if (im == "+") im = "1";
            if (im == "-") im = "-1";
            return {re, parse_rational(im)};
        }
    }
    if (s.empty() || s == "+") return {Rational(0), Rational(1)};
    if (s == "-") return {Rational(0), Rational(-1)};
    return {Rational(0), parse_rational(s)};
}

} // namespace freeprob
