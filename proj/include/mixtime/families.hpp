#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "mixtime/error.hpp"
#include "mixtime/graph.hpp"
#include "mixtime/numeric.hpp"

namespace mixtime {

namespace family {

struct Complete { std::size_t n; };
struct Cycle { std::size_t n; };
/// Clique on `clique` nodes (labels 0..clique-1) with a path of `path` extra
/// nodes hanging off node clique-1.
struct Lollipop { std::size_t clique; std::size_t path; };
/// Two cliques of `clique` nodes joined by one bridge edge.
struct Barbell { std::size_t clique; };
struct Hypercube { std::size_t dim; };
struct Petersen {};
/// G(n, p); resampled until connected.
struct ErdosRenyi { std::size_t n; Rational p; };

}  // namespace family

using GraphFamily = std::variant<family::Complete, family::Cycle, family::Lollipop,
                                 family::Barbell, family::Hypercube, family::Petersen,
                                 family::ErdosRenyi>;

inline constexpr int kErdosRenyiRetries = 1000;

namespace detail {

inline void add_clique(std::vector<Edge>& edges, NodeId first, std::size_t size) {
  for (NodeId i = 0; i < size; ++i) {
    for (NodeId j = i + 1; j < size; ++j) edges.emplace_back(first + i, first + j);
  }
}

[[noreturn]] inline void invalid(const std::string& what) {
  throw Error(ErrorKind::InvalidParameters, what);
}

}  // namespace detail

inline Graph generate(const GraphFamily& spec, std::uint64_t seed = 0) {
  return std::visit(
      [seed](const auto& f) -> Graph {
        using F = std::decay_t<decltype(f)>;
        std::vector<Edge> edges;
        if constexpr (std::is_same_v<F, family::Complete>) {
          if (f.n < 2) detail::invalid("complete graph needs n >= 2");
          detail::add_clique(edges, 0, f.n);
          return build_graph(edges, f.n);
        } else if constexpr (std::is_same_v<F, family::Cycle>) {
          if (f.n < 3) detail::invalid("cycle length must be >= 3");
          for (NodeId i = 0; i < f.n; ++i) {
            const NodeId j = static_cast<NodeId>((i + 1) % f.n);
            edges.emplace_back(std::min(i, j), std::max(i, j));
          }
          return build_graph(edges, f.n);
        } else if constexpr (std::is_same_v<F, family::Lollipop>) {
          if (f.clique < 3) detail::invalid("lollipop clique must have >= 3 nodes");
          if (f.path < 1) detail::invalid("lollipop path must have >= 1 node");
          detail::add_clique(edges, 0, f.clique);
          for (std::size_t i = 0; i < f.path; ++i) {
            edges.emplace_back(static_cast<NodeId>(f.clique - 1 + i), static_cast<NodeId>(f.clique + i));
          }
          return build_graph(edges, f.clique + f.path);
        } else if constexpr (std::is_same_v<F, family::Barbell>) {
          if (f.clique < 3) detail::invalid("barbell cliques must have >= 3 nodes");
          detail::add_clique(edges, 0, f.clique);
          detail::add_clique(edges, static_cast<NodeId>(f.clique), f.clique);
          edges.emplace_back(static_cast<NodeId>(f.clique - 1), static_cast<NodeId>(f.clique));
          return build_graph(edges, 2 * f.clique);
        } else if constexpr (std::is_same_v<F, family::Hypercube>) {
          if (f.dim < 1 || f.dim > 20) detail::invalid("hypercube dimension must be in 1..20");
          const std::size_t n = std::size_t{1} << f.dim;
          for (NodeId u = 0; u < n; ++u) {
            for (std::size_t b = 0; b < f.dim; ++b) {
              const NodeId v = u ^ (NodeId{1} << b);
              if (u < v) edges.emplace_back(u, v);
            }
          }
          return build_graph(edges, n);
        } else if constexpr (std::is_same_v<F, family::Petersen>) {
          for (NodeId i = 0; i < 5; ++i) {
            edges.emplace_back(i, (i + 1) % 5);          // outer cycle
            edges.emplace_back(i, i + 5);                // spokes
            edges.emplace_back(5 + i, 5 + (i + 2) % 5);  // inner pentagram
          }
          for (auto& [u, v] : edges) {
            if (u > v) std::swap(u, v);
          }
          return build_graph(edges, 10);
        } else {
          const auto num = boost::multiprecision::numerator(f.p);
          const auto den = boost::multiprecision::denominator(f.p);
          if (f.n < 2) detail::invalid("erdos_renyi needs n >= 2");
          if (f.p <= 0 || f.p > 1) detail::invalid("erdos_renyi p must lie in (0, 1]");
          if (den > BigInt(UINT64_MAX)) detail::invalid("erdos_renyi p denominator too large");
          const auto p_num = num.template convert_to<std::uint64_t>();
          const auto p_den = den.template convert_to<std::uint64_t>();
          std::mt19937_64 rng(seed);
          std::uniform_int_distribution<std::uint64_t> draw(0, p_den - 1);
          for (int attempt = 0; attempt < kErdosRenyiRetries; ++attempt) {
            edges.clear();
            for (NodeId u = 0; u < f.n; ++u) {
              for (NodeId v = u + 1; v < f.n; ++v) {
                if (draw(rng) < p_num) edges.emplace_back(u, v);
              }
            }
            try {
              return build_graph(edges, f.n);
            } catch (const Error& e) {
              if (e.kind() != ErrorKind::Disconnected) throw;
            }
          }
          detail::invalid("no connected erdos_renyi sample after " +
                          std::to_string(kErdosRenyiRetries) + " attempts");
        }
      },
      spec);
}

/// "name" or "name:a,b" as accepted on the command line.
inline std::string to_string(const GraphFamily& spec) {
  return std::visit(
      [](const auto& f) -> std::string {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, family::Complete>) return "complete:" + std::to_string(f.n);
        else if constexpr (std::is_same_v<F, family::Cycle>) return "cycle:" + std::to_string(f.n);
        else if constexpr (std::is_same_v<F, family::Lollipop>)
          return "lollipop:" + std::to_string(f.clique) + "," + std::to_string(f.path);
        else if constexpr (std::is_same_v<F, family::Barbell>) return "barbell:" + std::to_string(f.clique);
        else if constexpr (std::is_same_v<F, family::Hypercube>) return "hypercube:" + std::to_string(f.dim);
        else if constexpr (std::is_same_v<F, family::Petersen>) return "petersen";
        else return "erdos_renyi:" + std::to_string(f.n) + "," + mixtime::to_string(f.p);
      },
      spec);
}

inline GraphFamily parse_family(std::string_view text) {
  const auto colon = text.find(':');
  const std::string name(text.substr(0, colon));
  std::vector<std::string> params;
  if (colon != std::string_view::npos) {
    std::string rest(text.substr(colon + 1));
    std::size_t pos = 0;
    while (true) {
      const auto comma = rest.find(',', pos);
      params.push_back(rest.substr(pos, comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
  }
  auto bad = [&](const std::string& why) -> Error {
    return Error(ErrorKind::InvalidConfig, "family '" + std::string(text) + "': " + why);
  };
  auto count = [&](std::size_t expected) {
    if (params.size() != expected) {
      throw bad("expected " + std::to_string(expected) + " parameter(s)");
    }
  };
  auto integer = [&](std::size_t i) -> std::size_t {
    if (!all_digits(params[i]) || params[i].size() > 9) throw bad("bad integer '" + params[i] + "'");
    return std::stoul(params[i]);
  };
  if (name == "complete") { count(1); return family::Complete{integer(0)}; }
  if (name == "triangle") { count(0); return family::Complete{3}; }
  if (name == "cycle") { count(1); return family::Cycle{integer(0)}; }
  if (name == "lollipop") { count(2); return family::Lollipop{integer(0), integer(1)}; }
  if (name == "barbell") { count(1); return family::Barbell{integer(0)}; }
  if (name == "hypercube") { count(1); return family::Hypercube{integer(0)}; }
  if (name == "petersen") { count(0); return family::Petersen{}; }
  if (name == "erdos_renyi") {
    count(2);
    return family::ErdosRenyi{integer(0), parse_rational(params[1])};
  }
  throw bad("unknown family name");
}

}  // namespace mixtime
