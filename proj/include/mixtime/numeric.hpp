#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

#include "mixtime/error.hpp"

namespace mixtime {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

/// "num/den" (or "num" when the denominator is 1).
inline std::string to_string(const Rational& r) {
  const BigInt num = boost::multiprecision::numerator(r);
  const BigInt den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

inline bool all_digits(std::string_view s) {
  return !s.empty() &&
         std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

/// Parses a non-negative integer written in decimal; no sign, no spaces.
inline BigInt parse_bigint(std::string_view text) {
  if (!all_digits(text)) {
    throw Error(ErrorKind::InvalidConfig, "expected a non-negative integer, got '" +
                                              std::string(text) + "'");
  }
  return BigInt(std::string(text));
}

/// Accepts exactly "num/den" with decimal digits on both sides, or a bare
/// integer. Decimals such as "0.01" are rejected.
inline Rational parse_rational(std::string_view text) {
  const auto slash = text.find('/');
  const std::string_view num = text.substr(0, slash);
  const std::string_view den =
      slash == std::string_view::npos ? std::string_view("1") : text.substr(slash + 1);
  if (!all_digits(num) || !all_digits(den)) {
    throw Error(ErrorKind::MalformedRational,
                "'" + std::string(text) + "' is not of the form num/den");
  }
  const BigInt d(std::string{den});
  if (d == 0) {
    throw Error(ErrorKind::MalformedRational, "zero denominator in '" + std::string(text) + "'");
  }
  return Rational(BigInt(std::string{num}), d);
}

/// Minimal binary width of a non-negative integer; zero has width 1.
inline std::size_t bit_width(const BigInt& value) {
  if (value <= 0) return 1;
  return boost::multiprecision::msb(value) + 1;
}

/// ceil(log2 n) for n >= 1.
inline std::uint64_t ceil_log2(std::uint64_t n) {
  std::uint64_t bits = 0;
  while ((std::uint64_t{1} << bits) < n) ++bits;
  return bits;
}

/// ceil(ln n) for n >= 1. ln n is irrational for n >= 2, so the double is
/// never ambiguous at desk scale.
inline std::uint64_t ceil_ln(std::uint64_t n) {
  if (n <= 1) return 0;
  return static_cast<std::uint64_t>(std::ceil(std::log(static_cast<double>(n))));
}

enum class LogBase { Natural, Two, Ten };

inline std::string_view to_string(LogBase base) {
  switch (base) {
    case LogBase::Natural: return "e";
    case LogBase::Two: return "2";
    case LogBase::Ten: return "10";
  }
  return "e";
}

inline LogBase parse_log_base(std::string_view text) {
  if (text == "e") return LogBase::Natural;
  if (text == "2") return LogBase::Two;
  if (text == "10") return LogBase::Ten;
  throw Error(ErrorKind::InvalidConfig, "log base must be one of e, 2, 10");
}

/// Token count K = ceil(80 n^8 log n), at least 1.
inline BigInt paper_token_count(std::uint64_t n, LogBase base = LogBase::Natural) {
  using Float = boost::multiprecision::cpp_bin_float_100;
  Float x = Float(80) * boost::multiprecision::pow(Float(n), 8) * boost::multiprecision::log(Float(n));
  if (base == LogBase::Two) x /= boost::multiprecision::log(Float(2));
  if (base == LogBase::Ten) x /= boost::multiprecision::log(Float(10));
  BigInt k = boost::multiprecision::ceil(x).convert_to<BigInt>();
  return k < 1 ? BigInt(1) : k;
}

}  // namespace mixtime
