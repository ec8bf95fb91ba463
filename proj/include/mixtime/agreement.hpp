#pragma once

#include <optional>

#include "mixtime/graph.hpp"
#include "mixtime/mixing.hpp"
#include "mixtime/oracle.hpp"

namespace mixtime {

/// Worst-case L1 gap between zeta/K and P_length caused by averaging:
/// length * 2m / K.
inline Rational bias_bound(std::uint64_t length, const Graph& g, const BigInt& tokens) {
  return Rational(BigInt(length) * BigInt(2 * g.edge_count()), tokens);
}

/// Bracketing rule: with delta = 2 * estimate * 2m / K, the estimate must lie
/// in [tau(epsilon + delta), tau(epsilon - delta)]. The upper end is absent
/// when epsilon - delta <= 0 or exceeds the oracle cap.
struct BracketCheck {
  Rational delta = 0;
  std::uint64_t exact = 0;  // tau(epsilon)
  std::uint64_t lower = 0;
  std::optional<std::uint64_t> upper;
  bool ok = false;
};

inline BracketCheck bracket_check(const Graph& g, NodeId source, std::uint64_t estimate,
                                  const Rational& epsilon, const BigInt& tokens, bool lazy,
                                  std::optional<std::uint64_t> max_length = std::nullopt) {
  BracketCheck check;
  check.delta = 2 * bias_bound(estimate, g, tokens);
  check.exact = exact_mixing_time(g, source, epsilon, lazy, max_length);
  check.lower = exact_mixing_time(g, source, epsilon + check.delta, lazy, max_length);
  if (epsilon > check.delta) {
    try {
      check.upper = exact_mixing_time(g, source, epsilon - check.delta, lazy, max_length);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::MaxLengthExceeded) throw;
    }
  }
  check.ok = check.lower <= estimate && (!check.upper || estimate <= *check.upper);
  return check;
}

}  // namespace mixtime
