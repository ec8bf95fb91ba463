#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "mixtime/error.hpp"
#include "mixtime/numeric.hpp"

namespace mixtime {

/// Exact probability vector over nodes, stored as integer numerators over one
/// shared denominator. Entries are non-negative and sum to exactly one.
///
/// The shared-denominator form keeps walk iteration in pure integer
/// arithmetic: one step multiplies the denominator by a fixed factor instead
/// of normalizing n independent fractions.
class DistVector {
 public:
  DistVector() = default;

  DistVector(std::vector<BigInt> numerators, BigInt denominator)
      : numerators_(std::move(numerators)), denominator_(std::move(denominator)) {
    if (denominator_ <= 0) {
      throw Error(ErrorKind::InvalidParameters, "distribution denominator must be positive");
    }
    BigInt sum = 0;
    for (const auto& x : numerators_) {
      if (x < 0) throw Error(ErrorKind::InvalidParameters, "negative probability entry");
      sum += x;
    }
    if (sum != denominator_) {
      throw Error(ErrorKind::InvalidParameters, "probability entries do not sum to one");
    }
  }

  static DistVector from_rationals(const std::vector<Rational>& entries) {
    BigInt common = 1;
    for (const auto& e : entries) {
      common = boost::multiprecision::lcm(common, BigInt(boost::multiprecision::denominator(e)));
    }
    std::vector<BigInt> nums;
    nums.reserve(entries.size());
    for (const auto& e : entries) {
      nums.push_back(BigInt(boost::multiprecision::numerator(e)) *
                     (common / BigInt(boost::multiprecision::denominator(e))));
    }
    return DistVector(std::move(nums), std::move(common));
  }

  /// Point mass at `node`.
  static DistVector indicator(std::size_t size, std::size_t node) {
    std::vector<BigInt> nums(size, BigInt(0));
    nums.at(node) = 1;
    return DistVector(std::move(nums), BigInt(1));
  }

  std::size_t size() const noexcept { return numerators_.size(); }
  const std::vector<BigInt>& numerators() const noexcept { return numerators_; }
  const BigInt& denominator() const noexcept { return denominator_; }

  Rational operator[](std::size_t i) const { return Rational(numerators_[i], denominator_); }

  std::vector<Rational> entries() const {
    std::vector<Rational> out;
    out.reserve(size());
    for (std::size_t i = 0; i < size(); ++i) out.push_back((*this)[i]);
    return out;
  }

  Rational sum() const {
    BigInt s = 0;
    for (const auto& x : numerators_) s += x;
    return Rational(s, denominator_);
  }

  /// Same vector with the shared factor removed from numerators and denominator.
  DistVector reduced() const {
    BigInt g = denominator_;
    for (const auto& x : numerators_) {
      if (g == 1) break;
      g = boost::multiprecision::gcd(g, x);
    }
    if (g == 1) return *this;
    DistVector out;
    out.denominator_ = denominator_ / g;
    out.numerators_.reserve(size());
    for (const auto& x : numerators_) out.numerators_.push_back(x / g);
    return out;
  }

  friend bool operator==(const DistVector& a, const DistVector& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a.numerators_[i] * b.denominator_ != b.numerators_[i] * a.denominator_) return false;
    }
    return true;
  }

 private:
  std::vector<BigInt> numerators_;
  BigInt denominator_{1};
};

/// Numerator of the exact L1 distance over the denominator a.den * b.den.
inline BigInt l1_distance_numerator(const DistVector& a, const DistVector& b) {
  if (a.size() != b.size()) throw Error(ErrorKind::InvalidParameters, "size mismatch");
  BigInt total = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    total += boost::multiprecision::abs(a.numerators()[i] * b.denominator() -
                                        b.numerators()[i] * a.denominator());
  }
  return total;
}

inline Rational l1_distance(const DistVector& a, const DistVector& b) {
  return Rational(l1_distance_numerator(a, b), a.denominator() * b.denominator());
}

/// ||a - b||_1 <= bound, decided without building the reduced fraction.
inline bool l1_distance_at_most(const DistVector& a, const DistVector& b, const Rational& bound) {
  const BigInt lhs = l1_distance_numerator(a, b) * BigInt(boost::multiprecision::denominator(bound));
  const BigInt rhs = BigInt(boost::multiprecision::numerator(bound)) * a.denominator() * b.denominator();
  return lhs <= rhs;
}

}  // namespace mixtime
