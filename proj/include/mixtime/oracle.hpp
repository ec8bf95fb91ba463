#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "mixtime/dist_vector.hpp"
#include "mixtime/error.hpp"
#include "mixtime/graph.hpp"
#include "mixtime/numeric.hpp"

namespace mixtime {

/// Column-stochastic walk operator A with A(i, j) = Pr[j -> i]:
/// 1/d(j) for neighbors, or 1/(2 d(j)) plus a 1/2 diagonal when lazy.
class TransitionOperator {
 public:
  TransitionOperator(const Graph& g, bool lazy) : graph_(&g), lazy_(lazy) {
    BigInt l = 1;
    for (NodeId v = 0; v < g.node_count(); ++v) l = boost::multiprecision::lcm(l, BigInt(g.degree(v)));
    scale_ = lazy ? BigInt(2 * l) : l;
    weight_.reserve(g.node_count());
    for (NodeId v = 0; v < g.node_count(); ++v) {
      weight_.push_back(scale_ / (lazy ? BigInt(2 * g.degree(v)) : BigInt(g.degree(v))));
    }
    stay_ = lazy ? BigInt(scale_ / 2) : BigInt(0);
  }

  std::size_t size() const noexcept { return graph_->node_count(); }
  bool lazy() const noexcept { return lazy_; }

  Rational entry(NodeId to, NodeId from) const {
    Rational value = 0;
    if (graph_->has_edge(from, to)) value += Rational(weight_[from], scale_);
    if (to == from) value += Rational(stay_, scale_);
    return value;
  }

  Rational column_sum(NodeId from) const {
    Rational sum = 0;
    for (NodeId to = 0; to < size(); ++to) sum += entry(to, from);
    return sum;
  }

  /// A p, exact. The denominator grows by the fixed factor lcm(degrees)
  /// (doubled when lazy); call reduced() on the result to shrink it.
  DistVector apply(const DistVector& p) const {
    const auto& nums = p.numerators();
    std::vector<BigInt> next(size(), BigInt(0));
    for (NodeId i = 0; i < size(); ++i) {
      BigInt acc = lazy_ ? BigInt(nums[i] * stay_) : BigInt(0);
      for (NodeId j : graph_->neighbors(i)) {
        if (nums[j] != 0) acc += nums[j] * weight_[j];
      }
      next[i] = std::move(acc);
    }
    return DistVector(std::move(next), p.denominator() * scale_);
  }

 private:
  const Graph* graph_;
  bool lazy_;
  BigInt scale_;
  std::vector<BigInt> weight_;
  BigInt stay_;
};

inline std::uint64_t default_max_length(const Graph& g) {
  const std::uint64_t n = g.node_count();
  return std::max<std::uint64_t>(1, n * n * n * ceil_log2(n));
}

/// P_t = A^t e_source.
inline DistVector exact_distribution(const Graph& g, NodeId source, std::uint64_t t, bool lazy) {
  if (source >= g.node_count()) throw Error(ErrorKind::LabelOutOfRange, "source outside graph");
  const TransitionOperator op(g, lazy);
  DistVector p = DistVector::indicator(g.node_count(), source);
  for (std::uint64_t s = 0; s < t; ++s) p = op.apply(p);
  return p.reduced();
}

/// ||P_t - pi||_1 for t = 0..horizon.
inline std::vector<Rational> exact_distances(const Graph& g, NodeId source, std::uint64_t horizon,
                                             bool lazy) {
  if (source >= g.node_count()) throw Error(ErrorKind::LabelOutOfRange, "source outside graph");
  const TransitionOperator op(g, lazy);
  const DistVector pi = stationary_distribution(g);
  DistVector p = DistVector::indicator(g.node_count(), source);
  std::vector<Rational> out;
  out.reserve(horizon + 1);
  for (std::uint64_t t = 0; t <= horizon; ++t) {
    out.push_back(l1_distance(p, pi));
    if (t < horizon) p = op.apply(p);
  }
  return out;
}

/// min { t : ||P_t - pi||_1 <= epsilon }, stepping t upward exactly.
inline std::uint64_t exact_mixing_time(const Graph& g, NodeId source, const Rational& epsilon,
                                       bool lazy, std::optional<std::uint64_t> max_length = std::nullopt) {
  if (epsilon <= 0) throw Error(ErrorKind::InvalidParameters, "epsilon must be positive");
  if (source >= g.node_count()) throw Error(ErrorKind::LabelOutOfRange, "source outside graph");
  const std::uint64_t cap = max_length.value_or(default_max_length(g));
  const TransitionOperator op(g, lazy);
  const DistVector pi = stationary_distribution(g);
  DistVector p = DistVector::indicator(g.node_count(), source);
  for (std::uint64_t t = 0;; ++t) {
    if (l1_distance_at_most(p, pi, epsilon)) return t;
    if (t >= cap) break;
    p = op.apply(p);
    if (t % 64 == 63) p = p.reduced();
  }
  throw Error(ErrorKind::MaxLengthExceeded,
              "distance still above " + to_string(epsilon) + " at t = " + std::to_string(cap));
}

struct MonotonicityVerdict {
  bool ok = true;
  std::optional<std::uint64_t> first_violation;  // t with dist(t) > dist(t-1)
  std::vector<Rational> distances;               // t = 0..horizon
};

inline MonotonicityVerdict check_monotonicity(const Graph& g, NodeId source, std::uint64_t horizon,
                                              bool lazy) {
  if (horizon < 1) throw Error(ErrorKind::InvalidParameters, "horizon must be >= 1");
  MonotonicityVerdict verdict;
  verdict.distances = exact_distances(g, source, horizon, lazy);
  for (std::uint64_t t = 1; t <= horizon; ++t) {
    if (verdict.distances[t] > verdict.distances[t - 1]) {
      verdict.ok = false;
      verdict.first_violation = t;
      break;
    }
  }
  return verdict;
}

/// 1/(2e) truncated to 15 digits, so it sits just below the true value. Used
/// as the epsilon of the conventional mixing time.
inline Rational half_inverse_e_lower() { return Rational(183939720585721, BigInt("1000000000000000")); }

struct SpectralReport {
  std::vector<double> eigenvalues;  // descending; eigenvalues[0] == 1
  double lambda2 = 0;
  double lambda_min = 0;
  double spectral_gap = 0;  // 1 - lambda2
  double abs_gap = 0;       // 1 - max(|lambda2|, |lambda_min|)
  double cheeger_lower = 0;
  double cheeger_upper = 0;
  double error_bound = 0;  // max eigenpair residual
  double pi_min = 0;
  double relaxation_time = 0;  // 1 / abs_gap
  std::optional<std::uint64_t> mixing_upper_bound;  // ceil(ln(2e/pi_min) / abs_gap)
  std::optional<std::uint64_t> tau_quarter;         // oracle tau at epsilon = 1/(2e)
  bool sandwich_ok = false;
};

inline constexpr double kMaxEigenResidual = 1e-9;

/// Spectrum of the symmetrized operator D^{-1/2} A D^{1/2} (entries
/// 1/sqrt(d(i) d(j)) on edges; averaged with I when lazy), plus the
/// relaxation-time diagnostic against the exact oracle. With `source` the
/// oracle time is taken from that node, otherwise as the max over all nodes.
inline SpectralReport spectral_report(const Graph& g, bool lazy = false,
                                      std::optional<NodeId> source = std::nullopt) {
  const std::size_t n = g.node_count();
  if (n < 2) throw Error(ErrorKind::DegenerateGraph, "spectrum needs at least two nodes");
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j : g.neighbors(i)) {
      s(i, j) = 1.0 / std::sqrt(static_cast<double>(g.degree(i) * g.degree(j)));
    }
  }
  if (lazy) s = 0.5 * (Eigen::MatrixXd::Identity(n, n) + s);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::ConvergenceFailure, "symmetric eigensolver did not converge");
  }
  const Eigen::VectorXd& values = solver.eigenvalues();  // ascending
  const Eigen::MatrixXd& vectors = solver.eigenvectors();

  SpectralReport report;
  for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(n); ++k) {
    const double residual = (s * vectors.col(k) - values(k) * vectors.col(k)).norm();
    report.error_bound = std::max(report.error_bound, residual);
  }
  if (report.error_bound > kMaxEigenResidual) {
    throw Error(ErrorKind::ConvergenceFailure,
                "eigenpair residual " + std::to_string(report.error_bound) + " above tolerance");
  }
  for (Eigen::Index k = static_cast<Eigen::Index>(n) - 1; k >= 0; --k) report.eigenvalues.push_back(values(k));

  report.lambda2 = report.eigenvalues[1];
  report.lambda_min = report.eigenvalues.back();
  report.spectral_gap = 1.0 - report.lambda2;
  report.abs_gap = 1.0 - std::max(std::abs(report.lambda2), std::abs(report.lambda_min));
  report.cheeger_lower = report.spectral_gap / 2.0;
  report.cheeger_upper = std::sqrt(2.0 * report.spectral_gap);

  std::size_t min_degree = g.degree(0);
  for (NodeId v = 1; v < n; ++v) min_degree = std::min(min_degree, g.degree(v));
  report.pi_min = static_cast<double>(min_degree) / static_cast<double>(2 * g.edge_count());

  if (report.abs_gap > report.error_bound + 1e-12) {
    report.relaxation_time = 1.0 / report.abs_gap;
    report.mixing_upper_bound = static_cast<std::uint64_t>(
        std::ceil(std::log(2.0 * std::exp(1.0) / report.pi_min) / report.abs_gap));
    const Rational eps = half_inverse_e_lower();
    std::uint64_t tau = 0;
    if (source) {
      tau = exact_mixing_time(g, *source, eps, lazy);
    } else {
      for (NodeId v = 0; v < n; ++v) tau = std::max(tau, exact_mixing_time(g, v, eps, lazy));
    }
    report.tau_quarter = tau;
    report.sandwich_ok = tau <= *report.mixing_upper_bound;
  }
  return report;
}

}  // namespace mixtime
