#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mixtime/dist_vector.hpp"
#include "mixtime/error.hpp"
#include "mixtime/numeric.hpp"

namespace mixtime {

using NodeId = std::uint32_t;
using Edge = std::pair<NodeId, NodeId>;

/// Simple, undirected, connected graph over dense labels 0..n-1.
/// Immutable once built; every instance has passed validation.
class Graph {
 public:
  std::size_t node_count() const noexcept { return adjacency_.size(); }
  std::size_t edge_count() const noexcept { return edge_count_; }

  std::size_t degree(NodeId v) const { return adjacency_.at(v).size(); }

  /// Sorted ascending.
  std::span<const NodeId> neighbors(NodeId v) const { return adjacency_.at(v); }

  bool has_edge(NodeId u, NodeId v) const {
    if (u >= node_count() || v >= node_count()) return false;
    const auto& adj = adjacency_[u];
    return std::binary_search(adj.begin(), adj.end(), v);
  }

  /// Position of `v` in the neighbor list of `u`.
  std::size_t neighbor_index(NodeId u, NodeId v) const {
    const auto& adj = adjacency_.at(u);
    auto it = std::lower_bound(adj.begin(), adj.end(), v);
    if (it == adj.end() || *it != v) {
      throw Error(ErrorKind::LabelOutOfRange, "node " + std::to_string(v) +
                                                  " is not adjacent to " + std::to_string(u));
    }
    return static_cast<std::size_t>(it - adj.begin());
  }

  /// Edges with u < v, lexicographically sorted.
  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    out.reserve(edge_count_);
    for (NodeId u = 0; u < node_count(); ++u) {
      for (NodeId v : adjacency_[u]) {
        if (u < v) out.emplace_back(u, v);
      }
    }
    return out;
  }

  std::size_t max_degree() const {
    std::size_t best = 0;
    for (const auto& adj : adjacency_) best = std::max(best, adj.size());
    return best;
  }

  friend Graph build_graph(std::span<const Edge> edges, std::size_t n);

 private:
  std::vector<std::vector<NodeId>> adjacency_;
  std::size_t edge_count_ = 0;
};

/// Hop distances from `root`; unreachable nodes stay at SIZE_MAX.
inline std::vector<std::size_t> bfs_distances(std::size_t n,
                                              const std::vector<std::vector<NodeId>>& adj,
                                              NodeId root) {
  std::vector<std::size_t> dist(n, SIZE_MAX);
  std::deque<NodeId> queue{root};
  dist[root] = 0;
  while (!queue.empty()) {
    const NodeId u = queue.front();
    queue.pop_front();
    for (NodeId v : adj[u]) {
      if (dist[v] == SIZE_MAX) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  return dist;
}

inline Graph build_graph(std::span<const Edge> edges, std::size_t n) {
  if (n == 0) throw Error(ErrorKind::InvalidParameters, "graph needs at least one node");
  std::vector<std::vector<NodeId>> adj(n);
  for (const auto& [u, v] : edges) {
    if (u >= n || v >= n) {
      throw Error(ErrorKind::LabelOutOfRange, "edge (" + std::to_string(u) + "," +
                                                  std::to_string(v) + ") outside 0.." +
                                                  std::to_string(n - 1));
    }
    if (u == v) throw Error(ErrorKind::SelfLoop, "self-loop at node " + std::to_string(u));
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  for (NodeId u = 0; u < n; ++u) {
    auto& list = adj[u];
    std::sort(list.begin(), list.end());
    auto dup = std::adjacent_find(list.begin(), list.end());
    if (dup != list.end()) {
      throw Error(ErrorKind::DuplicateEdge, "edge (" + std::to_string(std::min<NodeId>(u, *dup)) +
                                                "," + std::to_string(std::max<NodeId>(u, *dup)) +
                                                ") listed twice");
    }
  }
  const auto dist = bfs_distances(n, adj, 0);
  for (NodeId v = 0; v < n; ++v) {
    if (dist[v] == SIZE_MAX) {
      throw Error(ErrorKind::Disconnected, "node " + std::to_string(v) + " unreachable from node 0");
    }
  }
  Graph g;
  g.adjacency_ = std::move(adj);
  g.edge_count_ = edges.size();
  return g;
}

inline Graph build_graph(const std::vector<Edge>& edges, std::size_t n) {
  return build_graph(std::span<const Edge>(edges), n);
}

inline std::vector<std::size_t> bfs_distances(const Graph& g, NodeId root) {
  std::vector<std::vector<NodeId>> adj(g.node_count());
  for (NodeId v = 0; v < g.node_count(); ++v) {
    auto nb = g.neighbors(v);
    adj[v].assign(nb.begin(), nb.end());
  }
  return bfs_distances(g.node_count(), adj, root);
}

inline std::size_t eccentricity(const Graph& g, NodeId root) {
  const auto dist = bfs_distances(g, root);
  return *std::max_element(dist.begin(), dist.end());
}

inline std::size_t diameter(const Graph& g) {
  std::size_t best = 0;
  for (NodeId v = 0; v < g.node_count(); ++v) best = std::max(best, eccentricity(g, v));
  return best;
}

/// pi(v) = d(v) / 2m.
inline DistVector stationary_distribution(const Graph& g) {
  std::vector<BigInt> nums;
  nums.reserve(g.node_count());
  for (NodeId v = 0; v < g.node_count(); ++v) nums.emplace_back(g.degree(v));
  return DistVector(std::move(nums), BigInt(2 * g.edge_count()));
}

/// A proper 2-coloring when the graph is bipartite.
inline std::optional<std::vector<int>> two_coloring(const Graph& g) {
  std::vector<int> color(g.node_count(), -1);
  std::deque<NodeId> queue{0};
  color[0] = 0;
  while (!queue.empty()) {
    const NodeId u = queue.front();
    queue.pop_front();
    for (NodeId v : g.neighbors(u)) {
      if (color[v] == -1) {
        color[v] = 1 - color[u];
        queue.push_back(v);
      } else if (color[v] == color[u]) {
        return std::nullopt;
      }
    }
  }
  return color;
}

/// Throws unless a (possibly lazy) walk on `g` converges to pi.
inline void validate_for_walk(const Graph& g, bool lazy) {
  if (g.node_count() < 2) {
    throw Error(ErrorKind::DegenerateGraph, "a random walk needs at least two nodes");
  }
  if (lazy) return;
  if (auto coloring = two_coloring(g)) {
    throw BipartiteError("graph is bipartite; the simple walk is periodic (use the lazy walk)",
                         std::move(*coloring));
  }
}

// Text format: "n m" then m lines "u v" with u < v.

inline Graph parse_graph_text(std::istream& in) {
  auto fail = [](std::size_t line_no, const std::string& why) -> Error {
    return Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": " + why);
  };
  auto read_fields = [&](const std::string& line, std::size_t line_no) {
    std::vector<std::uint64_t> out;
    std::size_t pos = 0;
    while (pos < line.size()) {
      if (line[pos] == ' ') {
        if (pos == 0 || line[pos - 1] == ' ' || pos + 1 == line.size()) {
          throw fail(line_no, "fields must be separated by single spaces");
        }
        ++pos;
        continue;
      }
      std::size_t end = line.find(' ', pos);
      if (end == std::string::npos) end = line.size();
      const std::string token = line.substr(pos, end - pos);
      if (!all_digits(token) || token.size() > 18 || (token.size() > 1 && token[0] == '0')) {
        throw fail(line_no, "'" + token + "' is not a decimal label");
      }
      out.push_back(std::stoull(token));
      pos = end;
    }
    if (out.size() != 2) throw fail(line_no, "expected exactly two fields");
    return out;
  };

  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw fail(line_no, "missing header");
  const auto header = read_fields(line, line_no);
  const std::uint64_t n = header[0];
  const std::uint64_t m = header[1];
  if (n == 0 || n > UINT32_MAX) throw fail(line_no, "node count out of range");
  std::vector<Edge> edges;
  edges.reserve(m);
  for (std::uint64_t i = 0; i < m; ++i) {
    ++line_no;
    if (!std::getline(in, line)) throw fail(line_no, "expected " + std::to_string(m) + " edge lines");
    const auto e = read_fields(line, line_no);
    if (e[0] >= e[1]) throw fail(line_no, "edge must satisfy u < v");
    if (e[1] >= n) throw fail(line_no, "label out of range");
    edges.emplace_back(static_cast<NodeId>(e[0]), static_cast<NodeId>(e[1]));
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty()) throw fail(line_no, "unexpected trailing content");
  }
  return build_graph(edges, n);
}

inline Graph parse_graph_text(const std::string& text) {
  std::istringstream in(text);
  return parse_graph_text(in);
}

inline void write_graph_text(const Graph& g, std::ostream& out) {
  out << g.node_count() << ' ' << g.edge_count() << '\n';
  for (const auto& [u, v] : g.edges()) out << u << ' ' << v << '\n';
}

}  // namespace mixtime
