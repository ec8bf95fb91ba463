#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "mixtime/congest.hpp"
#include "mixtime/families.hpp"
#include "suite.hpp"

namespace mixtime {
namespace {

Graph triangle() { return generate(family::Complete{3}); }

// All-pairs hop distances by Floyd-Warshall; independent of any BFS code.
std::vector<std::vector<std::size_t>> floyd_warshall(const Graph& g) {
  const std::size_t n = g.node_count();
  const std::size_t inf = n + 1;
  std::vector<std::vector<std::size_t>> d(n, std::vector<std::size_t>(n, inf));
  for (NodeId v = 0; v < n; ++v) {
    d[v][v] = 0;
    for (NodeId w : g.neighbors(v)) d[v][w] = 1;
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
  return d;
}

TEST(Message, BitSize) {
  EXPECT_EQ((Message{0, 1, PayloadKind::WalkCount, BigInt(0)}.bit_size()), 1 + kTagBits);
  EXPECT_EQ((Message{0, 1, PayloadKind::WalkCount, BigInt(1)}.bit_size()), 1 + kTagBits);
  EXPECT_EQ((Message{0, 1, PayloadKind::WalkCount, BigInt(255)}.bit_size()), 8 + kTagBits);
  EXPECT_EQ((Message{0, 1, PayloadKind::WalkCount, BigInt(256)}.bit_size()), 9 + kTagBits);
}

TEST(RunRound, EmptyOutboxes) {
  const Graph g = triangle();
  CongestLedger ledger;
  const Mailboxes in = run_round(g, Mailboxes(3), ledger);
  for (const auto& box : in) EXPECT_TRUE(box.empty());
  ASSERT_EQ(ledger.rounds(), 1u);
  EXPECT_TRUE(ledger.records()[0].traffic.empty());
  EXPECT_EQ(ledger.total_messages(), 0u);
}

TEST(RunRound, DeliversToReceiverOnly) {
  const Graph g = triangle();
  CongestLedger ledger;
  Mailboxes out(3);
  out[0].push_back(Message{0, 1, PayloadKind::WalkCount, BigInt(42)});
  const Mailboxes in = run_round(g, out, ledger);
  EXPECT_TRUE(in[0].empty());
  ASSERT_EQ(in[1].size(), 1u);
  EXPECT_EQ(in[1][0].payload, 42);
  EXPECT_TRUE(in[2].empty());

  ASSERT_EQ(ledger.records()[0].traffic.size(), 1u);
  const auto& t = ledger.records()[0].traffic[0];
  EXPECT_EQ(t.src, 0u);
  EXPECT_EQ(t.dst, 1u);
  EXPECT_EQ(t.msg_count, 1u);
  EXPECT_EQ(t.max_bits, 6 + kTagBits);

  // Nothing is re-delivered in the following round.
  const Mailboxes again = run_round(g, Mailboxes(3), ledger);
  for (const auto& box : again) EXPECT_TRUE(box.empty());
}

TEST(RunRound, BandwidthExceeded) {
  const Graph g = triangle();
  CongestLedger ledger;
  Mailboxes out(3);
  out[0].push_back(Message{0, 1, PayloadKind::WalkCount, BigInt(1)});
  out[0].push_back(Message{0, 1, PayloadKind::WalkCount, BigInt(2)});
  try {
    run_round(g, out, ledger, Bandwidth{1, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::BandwidthExceeded);
  }
  EXPECT_EQ(ledger.rounds(), 0u);

  Mailboxes wide(3);
  wide[0].push_back(Message{0, 1, PayloadKind::WalkCount, BigInt(1) << 20});
  EXPECT_THROW(run_round(g, wide, ledger, Bandwidth{1, 16}), Error);
  EXPECT_NO_THROW(run_round(g, wide, ledger, Bandwidth{1, 21 + kTagBits}));
}

TEST(RunRound, NonAdjacentSend) {
  const Graph g = generate(family::Cycle{5});
  CongestLedger ledger;
  Mailboxes out(5);
  out[0].push_back(Message{0, 2, PayloadKind::WalkCount, BigInt(1)});
  try {
    run_round(g, out, ledger);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonAdjacentSend);
  }
  Mailboxes forged(5);
  forged[3].push_back(Message{0, 1, PayloadKind::WalkCount, BigInt(1)});
  EXPECT_THROW(run_round(g, forged, ledger), Error);
}

TEST(Ledger, CsvExport) {
  const Graph g = triangle();
  CongestLedger ledger;
  Mailboxes out(3);
  out[2].push_back(Message{2, 0, PayloadKind::Broadcast, BigInt(5)});
  run_round(g, out, ledger);
  run_round(g, Mailboxes(3), ledger);
  std::ostringstream csv;
  ledger.write_csv(csv);
  EXPECT_EQ(csv.str(), "round,edge_src,edge_dst,msg_count,max_bits\n1,2,0,1,11\n");
}

TEST(Bfs, Triangle) {
  CongestLedger ledger;
  const auto [tree, rounds] = build_bfs_tree(triangle(), 0, ledger);
  EXPECT_EQ(tree.parent[1], 0u);
  EXPECT_EQ(tree.parent[2], 0u);
  EXPECT_EQ(tree.parent[0], 0u);
  EXPECT_EQ(tree.height, 1u);
  EXPECT_EQ(rounds, 3u);
  EXPECT_EQ(ledger.rounds(), rounds);
}

TEST(Bfs, LollipopFromPathEnd) {
  CongestLedger ledger;
  const auto result = build_bfs_tree(generate(family::Lollipop{4, 4}), 7, ledger);
  // Path 7-6-5-4-3 has four hops and the other clique nodes are one more.
  EXPECT_EQ(result.tree.height, 5u);
  EXPECT_EQ(result.tree.depth, (std::vector<std::size_t>{5, 5, 5, 4, 3, 2, 1, 0}));
}

TEST(Bfs, CycleDepths) {
  CongestLedger ledger;
  const auto result = build_bfs_tree(generate(family::Cycle{5}), 0, ledger);
  EXPECT_EQ(result.tree.depth, (std::vector<std::size_t>{0, 1, 2, 2, 1}));
}

TEST(Bfs, MatchesShortestPathsOnSuite) {
  for (const auto& s : testing::suite_graphs()) {
    const Graph& g = s.graph;
    const auto dist = floyd_warshall(g);
    for (NodeId root = 0; root < g.node_count(); ++root) {
      CongestLedger ledger;
      const auto [tree, rounds] = build_bfs_tree(g, root, ledger);
      std::size_t height = 0;
      for (NodeId v = 0; v < g.node_count(); ++v) {
        EXPECT_EQ(tree.depth[v], dist[root][v]) << s.name;
        height = std::max(height, tree.depth[v]);
        if (v != root) {
          EXPECT_TRUE(g.has_edge(v, tree.parent[v]));
          EXPECT_EQ(tree.depth[v], tree.depth[tree.parent[v]] + 1);
          const auto& siblings = tree.children[tree.parent[v]];
          EXPECT_TRUE(std::binary_search(siblings.begin(), siblings.end(), v));
        }
      }
      EXPECT_EQ(tree.height, height) << s.name;
      // Flooding plus echo: the root hears back after 2 * height + 1 rounds.
      EXPECT_EQ(rounds, 2 * tree.height + 1) << s.name;
      EXPECT_LE(ledger.max_messages_per_edge(), 1u);
    }
  }
}

TEST(Broadcast, PipelinedValuesReachEveryNode) {
  const Graph g = generate(family::Lollipop{4, 4});
  CongestLedger ledger;
  Network net(g, Bandwidth{}, ledger);
  const auto bfs = build_bfs_tree(net, 0);
  const std::vector<BigInt> values{BigInt(8), BigInt(10), BigInt(123456789)};
  const auto result = broadcast_values(net, bfs.tree, values);
  for (const auto& seen : result.received) EXPECT_EQ(seen, values);
  EXPECT_EQ(result.rounds_used, bfs.tree.height + values.size() - 1);
  EXPECT_LE(ledger.max_messages_per_edge(Phase::Broadcast), 1u);
}

struct UpcastFixture {
  Graph g;
  CongestLedger ledger;
  std::unique_ptr<Network> net;
  BfsTree tree;

  explicit UpcastFixture(Graph graph, Bandwidth bw = {}) : g(std::move(graph)) {
    net = std::make_unique<Network>(g, bw, ledger);
    tree = build_bfs_tree(*net, 0).tree;
  }
};

TEST(Upcast, Examples) {
  {
    UpcastFixture f(generate(family::Cycle{7}));
    const std::vector<Rational> zeros(7, Rational(0));
    const auto r = upcast_sum(*f.net, f.tree, zeros);
    EXPECT_EQ(r.total, 0);
    EXPECT_LE(r.rounds_used, f.tree.height);
  }
  {
    UpcastFixture f(triangle());
    const std::vector<Rational> vals{Rational(1, 6), Rational(1, 3), Rational(1, 2)};
    const auto r = upcast_sum(*f.net, f.tree, vals);
    EXPECT_EQ(r.total, 1);
    EXPECT_EQ(r.rounds_used, 1u);
  }
}

TEST(Upcast, StationaryEntriesSumToOne) {
  for (const auto& s : testing::suite_graphs()) {
    UpcastFixture f(s.graph);
    const auto pi = stationary_distribution(s.graph).entries();
    const auto r = upcast_sum(*f.net, f.tree, pi);
    EXPECT_EQ(r.total, 1) << s.name;
    EXPECT_LE(r.rounds_used, f.tree.height) << s.name;
    EXPECT_LE(f.ledger.max_messages_per_edge(Phase::Upcast), 1u);
  }
}

TEST(Upcast, ChunkedUnderNarrowBudget) {
  std::mt19937_64 rng(5);
  for (const auto& s : testing::suite_graphs()) {
    // 12-bit words: 4 payload bits per chunk.
    UpcastFixture f(s.graph, Bandwidth{1, 12});
    std::vector<BigInt> values;
    BigInt expected = 0;
    for (NodeId v = 0; v < s.graph.node_count(); ++v) {
      values.emplace_back(rng() % 5000);
      expected += values.back();
    }
    const BigInt bound = BigInt(5000) * s.graph.node_count();
    const auto r = upcast_numerators(*f.net, f.tree, values, bound);
    EXPECT_EQ(r.total, expected) << s.name;
    EXPECT_EQ(r.chunks, (bit_width(bound) + 3) / 4);
    EXPECT_EQ(r.rounds_used, f.tree.height + r.chunks - 1) << s.name;
    EXPECT_LE(f.ledger.max_message_bits(Phase::Upcast), 12u);
    EXPECT_LE(f.ledger.max_messages_per_edge(), 1u);
  }
}

TEST(Upcast, RejectsValuesAboveBound) {
  UpcastFixture f(triangle());
  const std::vector<BigInt> values{BigInt(5), BigInt(5), BigInt(5)};
  EXPECT_THROW(upcast_numerators(*f.net, f.tree, values, BigInt(10)), Error);
}

}  // namespace
}  // namespace mixtime
