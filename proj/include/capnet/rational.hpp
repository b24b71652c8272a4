#pragma once

#include <cstdint>
#include <numeric>
#include <string>

#include "capnet/errors.hpp"

namespace capnet {

// Exact rational number for the time quantities d and w. Keeping them exact
// makes constraints like "f*d is an integer" testable without float slop.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Rational() = default;
  Rational(std::int64_t n, std::int64_t d) : num(n), den(d) { normalize(); }
  Rational(std::int64_t n) : num(n), den(1) {}  // NOLINT: implicit by intent

  void normalize() {
    if (den == 0) throw ConfigError("rational with zero denominator");
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

  bool is_integer() const { return den == 1; }
  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }

  // True when v*this is an integer.
  bool times_is_integer(std::int64_t v) const { return (v * num) % den == 0; }
  // v*this, which must be an integer.
  std::int64_t times(std::int64_t v) const {
    if (!times_is_integer(v)) throw ConfigError("rational product is not an integer");
    return v * num / den;
  }

  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num == b.num && a.den == b.den;
  }
  friend bool operator<(const Rational& a, const Rational& b) {
    return a.num * b.den < b.num * a.den;
  }
  friend bool operator<=(const Rational& a, const Rational& b) {
    return a.num * b.den <= b.num * a.den;
  }
  friend Rational operator-(const Rational& a, const Rational& b) {
    return Rational(a.num * b.den - b.num * a.den, a.den * b.den);
  }

  std::string str() const {
    if (den == 1) return std::to_string(num);
    return std::to_string(num) + "/" + std::to_string(den);
  }
};

// Accepts "3", "-1/3" and plain decimals like "0.5" (parsed exactly in base 10).
inline Rational parse_rational(const std::string& text) {
  if (text.empty()) throw ConfigError("empty rational");
  const auto parse_int = [&](const std::string& s) -> std::int64_t {
    std::size_t pos = 0;
    std::int64_t v = 0;
    try {
      v = std::stoll(s, &pos);
    } catch (const std::exception&) {
      throw ConfigError("bad rational: '" + text + "'");
    }
    if (pos != s.size()) throw ConfigError("bad rational: '" + text + "'");
    return v;
  };
  if (const auto slash = text.find('/'); slash != std::string::npos) {
    return Rational(parse_int(text.substr(0, slash)), parse_int(text.substr(slash + 1)));
  }
  if (const auto dot = text.find('.'); dot != std::string::npos) {
    const std::string frac = text.substr(dot + 1);
    if (frac.empty() || frac.size() > 9) throw ConfigError("bad rational: '" + text + "'");
    std::int64_t scale = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
    const std::string whole = text.substr(0, dot);
    const bool neg = !whole.empty() && whole[0] == '-';
    const std::int64_t w = whole.empty() || whole == "-" ? 0 : parse_int(whole);
    const std::int64_t f = parse_int(frac);
    if (f < 0) throw ConfigError("bad rational: '" + text + "'");
    const std::int64_t mag = (w < 0 ? -w : w) * scale + f;
    return Rational(neg || w < 0 ? -mag : mag, scale);
  }
  return Rational(parse_int(text), 1);
}

}  // namespace capnet
