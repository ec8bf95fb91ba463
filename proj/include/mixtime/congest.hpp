#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mixtime/error.hpp"
#include "mixtime/graph.hpp"
#include "mixtime/numeric.hpp"

namespace mixtime {

/// Framing cost added to every payload.
inline constexpr std::size_t kTagBits = 8;

enum class PayloadKind : std::uint8_t {
  Flood,         // BFS exploration, payload = sender depth
  ParentSelect,  // BFS child -> chosen parent, payload = 0
  Done,          // BFS echo, payload = subtree height
  Broadcast,     // tree broadcast of one value
  WalkCount,     // number of walk tokens crossing the edge
  Deviation,     // one chunk of a partial deviation sum
};

enum class Phase : std::uint8_t { Bfs, Broadcast, Walk, Upcast, Other };

inline std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::Bfs: return "bfs";
    case Phase::Broadcast: return "broadcast";
    case Phase::Walk: return "walk";
    case Phase::Upcast: return "upcast";
    case Phase::Other: return "other";
  }
  return "other";
}

struct Message {
  NodeId src = 0;
  NodeId dst = 0;
  PayloadKind kind = PayloadKind::Broadcast;
  BigInt payload = 0;

  std::size_t payload_bits() const { return bit_width(payload); }
  std::size_t bit_size() const { return payload_bits() + kTagBits; }
};

/// Per directed edge, per round. `max_bits` is the largest full bit_size seen.
struct EdgeTraffic {
  NodeId src = 0;
  NodeId dst = 0;
  std::size_t msg_count = 0;
  std::size_t max_bits = 0;
};

struct RoundRecord {
  std::uint64_t round = 0;
  Phase phase = Phase::Other;
  std::vector<EdgeTraffic> traffic;  // sorted by (src, dst); idle edges omitted
};

/// Append-only record of every simulated round.
class CongestLedger {
 public:
  void append(RoundRecord record) {
    record.round = records_.size() + 1;
    records_.push_back(std::move(record));
  }

  std::uint64_t rounds() const noexcept { return records_.size(); }
  const std::vector<RoundRecord>& records() const noexcept { return records_; }

  std::uint64_t rounds_in(Phase phase) const {
    return static_cast<std::uint64_t>(std::count_if(
        records_.begin(), records_.end(), [phase](const auto& r) { return r.phase == phase; }));
  }

  /// Largest per-edge message count in one round; restricted to `phase` when given.
  std::size_t max_messages_per_edge(std::optional<Phase> phase = std::nullopt) const {
    std::size_t best = 0;
    for (const auto& r : records_) {
      if (phase && r.phase != *phase) continue;
      for (const auto& t : r.traffic) best = std::max(best, t.msg_count);
    }
    return best;
  }

  std::size_t max_message_bits(std::optional<Phase> phase = std::nullopt) const {
    std::size_t best = 0;
    for (const auto& r : records_) {
      if (phase && r.phase != *phase) continue;
      for (const auto& t : r.traffic) best = std::max(best, t.max_bits);
    }
    return best;
  }

  std::uint64_t total_messages() const {
    std::uint64_t total = 0;
    for (const auto& r : records_) {
      for (const auto& t : r.traffic) total += t.msg_count;
    }
    return total;
  }

  void write_csv(std::ostream& out) const {
    out << "round,edge_src,edge_dst,msg_count,max_bits\n";
    for (const auto& r : records_) {
      for (const auto& t : r.traffic) {
        out << r.round << ',' << t.src << ',' << t.dst << ',' << t.msg_count << ',' << t.max_bits
            << '\n';
      }
    }
  }

 private:
  std::vector<RoundRecord> records_;
};

/// Per-round capacity of every directed edge.
struct Bandwidth {
  std::size_t max_messages_per_edge = 1;
  /// Full message size including the tag; 0 disables the check.
  std::size_t max_message_bits = 0;

  /// Largest payload that fits in one message.
  std::optional<std::size_t> payload_capacity() const {
    if (max_message_bits == 0) return std::nullopt;
    return max_message_bits > kTagBits ? max_message_bits - kTagBits : 0;
  }
};

using Mailboxes = std::vector<std::vector<Message>>;

/// One synchronous round: validate, record, deliver. Outbox i holds the
/// messages node i sends this round; the returned inbox i holds what node i
/// reads at the start of the next round.
inline Mailboxes run_round(const Graph& g, const Mailboxes& outboxes, CongestLedger& ledger,
                           const Bandwidth& bandwidth = {}, Phase phase = Phase::Other) {
  if (outboxes.size() != g.node_count()) {
    throw Error(ErrorKind::InvalidParameters, "one outbox per node required");
  }
  std::map<std::pair<NodeId, NodeId>, EdgeTraffic> traffic;
  for (NodeId v = 0; v < outboxes.size(); ++v) {
    for (const auto& msg : outboxes[v]) {
      if (msg.src != v || !g.has_edge(msg.src, msg.dst)) {
        throw Error(ErrorKind::NonAdjacentSend, "node " + std::to_string(v) + " cannot send " +
                                                    std::to_string(msg.src) + "->" +
                                                    std::to_string(msg.dst));
      }
      if (msg.payload < 0) {
        throw Error(ErrorKind::InvalidParameters, "payloads are non-negative integers");
      }
      auto& t = traffic[{msg.src, msg.dst}];
      t.src = msg.src;
      t.dst = msg.dst;
      t.msg_count += 1;
      t.max_bits = std::max(t.max_bits, msg.bit_size());
    }
  }
  for (const auto& [edge, t] : traffic) {
    if (t.msg_count > bandwidth.max_messages_per_edge) {
      throw Error(ErrorKind::BandwidthExceeded,
                  std::to_string(t.msg_count) + " messages on " + std::to_string(edge.first) +
                      "->" + std::to_string(edge.second) + " in one round");
    }
    if (bandwidth.max_message_bits != 0 && t.max_bits > bandwidth.max_message_bits) {
      throw Error(ErrorKind::BandwidthExceeded,
                  std::to_string(t.max_bits) + "-bit message on " + std::to_string(edge.first) +
                      "->" + std::to_string(edge.second) + " exceeds budget of " +
                      std::to_string(bandwidth.max_message_bits));
    }
  }

  RoundRecord record;
  record.phase = phase;
  record.traffic.reserve(traffic.size());
  for (auto& [edge, t] : traffic) record.traffic.push_back(t);
  ledger.append(std::move(record));

  Mailboxes inboxes(g.node_count());
  for (const auto& box : outboxes) {
    for (const auto& msg : box) inboxes[msg.dst].push_back(msg);
  }
  return inboxes;
}

/// Binds a graph, a bandwidth budget, and a ledger so node programs only deal
/// with outboxes.
class Network {
 public:
  Network(const Graph& g, Bandwidth bandwidth, CongestLedger& ledger)
      : graph_(&g), bandwidth_(bandwidth), ledger_(&ledger) {}

  const Graph& graph() const noexcept { return *graph_; }
  const Bandwidth& bandwidth() const noexcept { return bandwidth_; }
  CongestLedger& ledger() noexcept { return *ledger_; }
  std::uint64_t rounds() const noexcept { return ledger_->rounds(); }

  Mailboxes empty_outboxes() const { return Mailboxes(graph_->node_count()); }

  Mailboxes run_round(const Mailboxes& outboxes, Phase phase) {
    return mixtime::run_round(*graph_, outboxes, *ledger_, bandwidth_, phase);
  }

 private:
  const Graph* graph_;
  Bandwidth bandwidth_;
  CongestLedger* ledger_;
};

struct BfsTree {
  NodeId root = 0;
  std::vector<NodeId> parent;  // root maps to itself
  std::vector<std::size_t> depth;
  std::vector<std::vector<NodeId>> children;  // sorted
  std::size_t height = 0;
};

struct BfsResult {
  BfsTree tree;
  std::uint64_t rounds_used = 0;
};

/// Distributed BFS by flooding, with an echo convergecast so the root learns
/// when the tree is complete (and its height) without knowing the diameter.
///
/// A node at depth k hears the flood in round k, then in round k+1 sends
/// ParentSelect to its parent (smallest-label flooding neighbor) and Flood to
/// every other neighbor. Each node therefore hears from every neighbor exactly
/// once; once it has, and every child has reported Done, it sends Done with
/// its subtree height. The root finishes at the end of round 2*height + 1.
inline BfsResult build_bfs_tree(Network& net, NodeId root) {
  const Graph& g = net.graph();
  const std::size_t n = g.node_count();
  if (root >= n) throw Error(ErrorKind::LabelOutOfRange, "root outside graph");

  struct NodeState {
    bool joined = false;
    bool announced = false;  // Flood/ParentSelect sent
    bool done_sent = false;
    NodeId parent = 0;
    std::size_t depth = 0;
    std::size_t heard = 0;
    std::size_t done_children = 0;
    std::size_t subtree_height = 0;
    std::vector<NodeId> children;
  };
  std::vector<NodeState> state(n);
  state[root].joined = true;
  state[root].parent = root;

  const std::uint64_t start = net.rounds();
  bool complete = n == 1;
  while (!complete) {
    Mailboxes out = net.empty_outboxes();
    for (NodeId v = 0; v < n; ++v) {
      auto& s = state[v];
      if (s.joined && !s.announced) {
        for (NodeId w : g.neighbors(v)) {
          const bool to_parent = v != root && w == s.parent;
          out[v].push_back(Message{v, w, to_parent ? PayloadKind::ParentSelect : PayloadKind::Flood,
                                   to_parent ? BigInt(0) : BigInt(s.depth)});
        }
        s.announced = true;
      } else if (v != root && s.announced && !s.done_sent && s.heard == g.degree(v) &&
                 s.done_children == s.children.size()) {
        out[v].push_back(Message{v, s.parent, PayloadKind::Done, BigInt(s.subtree_height)});
        s.done_sent = true;
      }
    }
    const Mailboxes in = net.run_round(out, Phase::Bfs);
    for (NodeId v = 0; v < n; ++v) {
      auto& s = state[v];
      for (const auto& msg : in[v]) {
        switch (msg.kind) {
          case PayloadKind::Flood:
            s.heard += 1;
            if (!s.joined) {
              s.joined = true;
              s.parent = msg.src;  // inbox is in sender order, so this is the smallest label
              s.depth = static_cast<std::size_t>(msg.payload) + 1;
            }
            break;
          case PayloadKind::ParentSelect:
            s.heard += 1;
            s.children.push_back(msg.src);
            break;
          case PayloadKind::Done:
            s.done_children += 1;
            s.subtree_height = std::max(s.subtree_height, static_cast<std::size_t>(msg.payload) + 1);
            break;
          default:
            throw Error(ErrorKind::InvalidParameters, "unexpected message during BFS");
        }
      }
    }
    const auto& r = state[root];
    complete = r.heard == g.degree(root) && r.done_children == r.children.size();
  }

  BfsResult result;
  result.rounds_used = net.rounds() - start;
  auto& tree = result.tree;
  tree.root = root;
  tree.parent.resize(n);
  tree.depth.resize(n);
  tree.children.resize(n);
  for (NodeId v = 0; v < n; ++v) {
    tree.parent[v] = state[v].parent;
    tree.depth[v] = state[v].depth;
    tree.children[v] = state[v].children;
    std::sort(tree.children[v].begin(), tree.children[v].end());
  }
  tree.height = state[root].subtree_height;
  return result;
}

inline BfsResult build_bfs_tree(const Graph& g, NodeId root, CongestLedger& ledger) {
  Network net(g, Bandwidth{}, ledger);
  return build_bfs_tree(net, root);
}

struct BroadcastResult {
  std::vector<std::vector<BigInt>> received;  // per node, in broadcast order
  std::uint64_t rounds_used = 0;
};

/// Pipelined broadcast down the tree: the root injects one value per round,
/// every node forwards each value to its children one round after hearing it.
/// Takes height + values.size() - 1 rounds.
inline BroadcastResult broadcast_values(Network& net, const BfsTree& tree,
                                        std::span<const BigInt> values) {
  const std::size_t n = net.graph().node_count();
  BroadcastResult result;
  result.received.assign(n, {});
  result.received[tree.root].assign(values.begin(), values.end());
  const std::uint64_t start = net.rounds();
  std::vector<std::size_t> forwarded(n, 0);
  auto pending = [&] {
    for (NodeId v = 0; v < n; ++v) {
      if (!tree.children[v].empty() && forwarded[v] < values.size()) return true;
    }
    return false;
  };
  while (pending()) {
    Mailboxes out = net.empty_outboxes();
    for (NodeId v = 0; v < n; ++v) {
      if (tree.children[v].empty() || forwarded[v] >= result.received[v].size()) continue;
      const BigInt& value = result.received[v][forwarded[v]];
      for (NodeId c : tree.children[v]) out[v].push_back(Message{v, c, PayloadKind::Broadcast, value});
      forwarded[v] += 1;
    }
    const Mailboxes in = net.run_round(out, Phase::Broadcast);
    for (NodeId v = 0; v < n; ++v) {
      for (const auto& msg : in[v]) result.received[v].push_back(msg.payload);
    }
  }
  result.rounds_used = net.rounds() - start;
  return result;
}

struct UpcastResult {
  BigInt total = 0;
  std::uint64_t rounds_used = 0;
  std::size_t chunks = 1;
};

/// Convergecast of non-negative integers to the root. When the bandwidth
/// budget cannot carry `bound` (a pre-agreed upper limit on the total) in one
/// message, partial sums travel as little-endian chunks over consecutive
/// rounds with the carry kept locally; rounds_used <= height + chunks - 1.
inline UpcastResult upcast_numerators(Network& net, const BfsTree& tree,
                                      std::span<const BigInt> values, const BigInt& bound) {
  const std::size_t n = net.graph().node_count();
  if (values.size() != n) throw Error(ErrorKind::InvalidParameters, "one value per node required");
  BigInt sum = 0;
  for (const auto& v : values) {
    if (v < 0) throw Error(ErrorKind::InvalidParameters, "upcast values must be non-negative");
    sum += v;
  }
  if (sum > bound) throw Error(ErrorKind::InvalidParameters, "upcast values exceed their bound");

  const std::size_t width = bit_width(bound);
  const auto capacity = net.bandwidth().payload_capacity();
  if (capacity && *capacity == 0) throw Error(ErrorKind::BandwidthExceeded, "no payload capacity");
  const std::size_t chunk_bits = capacity ? *capacity : width;
  const std::size_t chunks = (width + chunk_bits - 1) / chunk_bits;
  const BigInt mask = (BigInt(1) << chunk_bits) - 1;

  UpcastResult result;
  result.chunks = chunks;
  const std::uint64_t start = net.rounds();

  // received[v][j] accumulates chunk j from all children; arrived[v][j] counts them.
  std::vector<std::vector<BigInt>> received(n, std::vector<BigInt>(chunks, BigInt(0)));
  std::vector<std::vector<std::size_t>> arrived(n, std::vector<std::size_t>(chunks, 0));
  std::vector<BigInt> carry(values.begin(), values.end());  // own value enters as carry
  std::vector<std::size_t> sent(n, 0);
  std::vector<std::size_t> delivered(n, 0);  // chunks received from each child

  auto root_ready = [&] {
    return tree.children[tree.root].empty() ||
           arrived[tree.root][chunks - 1] == tree.children[tree.root].size();
  };
  while (!root_ready()) {
    Mailboxes out = net.empty_outboxes();
    for (NodeId v = 0; v < n; ++v) {
      if (v == tree.root || sent[v] >= chunks) continue;
      const std::size_t j = sent[v];
      if (arrived[v][j] != tree.children[v].size()) continue;
      BigInt acc = carry[v] + received[v][j];
      const BigInt low = j + 1 == chunks ? acc : BigInt(acc & mask);
      carry[v] = j + 1 == chunks ? BigInt(0) : BigInt(acc >> chunk_bits);
      out[v].push_back(Message{v, tree.parent[v], PayloadKind::Deviation, low});
      sent[v] += 1;
    }
    const Mailboxes in = net.run_round(out, Phase::Upcast);
    for (NodeId v = 0; v < n; ++v) {
      for (const auto& msg : in[v]) {
        // Chunks from one child arrive in order.
        const std::size_t j = delivered[msg.src]++;
        received[v][j] += msg.payload;
        arrived[v][j] += 1;
      }
    }
  }
  result.total = values[tree.root];
  for (std::size_t j = 0; j < chunks; ++j) result.total += received[tree.root][j] << (j * chunk_bits);
  result.rounds_used = net.rounds() - start;
  return result;
}

struct RationalUpcastResult {
  Rational total = 0;
  std::uint64_t rounds_used = 0;
};

/// Exact sum of non-negative rationals at the root. Values travel as integer
/// numerators over their common denominator, which every node is assumed to
/// know in advance. `bound` caps the total and fixes the chunk count; it
/// defaults to the total itself.
inline RationalUpcastResult upcast_sum(Network& net, const BfsTree& tree,
                                       std::span<const Rational> values,
                                       std::optional<Rational> bound = std::nullopt) {
  BigInt common = 1;
  for (const auto& v : values) {
    common = boost::multiprecision::lcm(common, BigInt(boost::multiprecision::denominator(v)));
  }
  std::vector<BigInt> nums;
  nums.reserve(values.size());
  Rational sum = 0;
  for (const auto& v : values) {
    nums.push_back(BigInt(boost::multiprecision::numerator(v)) *
                   (common / BigInt(boost::multiprecision::denominator(v))));
    sum += v;
  }
  const Rational cap = bound.value_or(sum);
  const Rational scaled = cap * common;
  const BigInt int_bound = BigInt(boost::multiprecision::numerator(scaled)) /
                           BigInt(boost::multiprecision::denominator(scaled));
  const UpcastResult up = upcast_numerators(net, tree, nums, int_bound);
  return RationalUpcastResult{Rational(up.total, common), up.rounds_used};
}

}  // namespace mixtime
