#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace dgmvp {

/// Exact rational on int64, normalized to positive denominator and lowest
/// terms. Used where weight arithmetic must be exact (unit lots, rounding
/// rules); the simulator itself works in floating point.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Rational() = default;
  Rational(std::int64_t n, std::int64_t d = 1) : num(n), den(d) {
    if (den == 0) throw std::invalid_argument("Rational: zero denominator");
    normalize();
  }

  void normalize() {
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }

  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }

  std::int64_t floor_div() const {
    std::int64_t q = num / den;
    if (num % den != 0 && num < 0) --q;
    return q;
  }

  bool is_integer() const { return num % den == 0; }

  friend Rational operator+(const Rational& a, const Rational& b) {
    return Rational(a.num * b.den + b.num * a.den, a.den * b.den);
  }
  friend Rational operator-(const Rational& a, const Rational& b) {
    return Rational(a.num * b.den - b.num * a.den, a.den * b.den);
  }
  friend Rational operator*(const Rational& a, const Rational& b) {
    return Rational(a.num * b.num, a.den * b.den);
  }
  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num == b.num && a.den == b.den;
  }
  friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
  friend bool operator<(const Rational& a, const Rational& b) {
    return a.num * b.den < b.num * a.den;
  }

  std::string str() const {
    return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
  }
};

}  // namespace dgmvp
