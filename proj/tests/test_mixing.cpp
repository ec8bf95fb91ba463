#include <gtest/gtest.h>

#include <future>
#include <sstream>

#include "mixtime/agreement.hpp"
#include "mixtime/families.hpp"
#include "mixtime/mixing.hpp"
#include "mixtime/oracle.hpp"
#include "suite.hpp"

namespace mixtime {
namespace {

Graph triangle() { return generate(family::Complete{3}); }

BigInt sum(std::span<const BigInt> xs) {
  BigInt s = 0;
  for (const auto& x : xs) s += x;
  return s;
}

WalkConfig plain_config(BigInt tokens, Rational eps, std::uint64_t max_length = 4096) {
  WalkConfig cfg;
  cfg.tokens = std::move(tokens);
  cfg.epsilon = std::move(eps);
  cfg.max_length = max_length;
  return cfg;
}

TEST(ForwardTokens, Examples) {
  Rng rng(1);
  EXPECT_EQ(forward_tokens(BigInt(1000), 4, BigInt(4), rng), std::vector<BigInt>(4, BigInt(250)));

  const auto split = forward_tokens(BigInt(10), 3, BigInt(3), rng);
  EXPECT_EQ(sum(split), 10);
  EXPECT_EQ(std::count(split.begin(), split.end(), BigInt(4)), 1);
  EXPECT_EQ(std::count(split.begin(), split.end(), BigInt(3)), 2);

  // Below threshold: per-token sampling, only conservation is guaranteed.
  const auto few = forward_tokens(BigInt(2), 5, BigInt(5), rng);
  EXPECT_EQ(few.size(), 5u);
  EXPECT_EQ(sum(few), 2);
}

TEST(SplitTokens, ConservesEveryRegime) {
  Rng rng(99);
  for (std::uint64_t held : {0ull, 1ull, 7ull, 64ull, 1000ull, 70000ull, 1000003ull}) {
    for (std::size_t degree : {1u, 2u, 3u, 7u}) {
      for (bool averaging : {false, true}) {
        for (bool lazy : {false, true}) {
          const TokenSplit s = split_tokens(BigInt(held), degree, BigInt(degree * 3), averaging, lazy, rng);
          EXPECT_EQ(s.stay + sum(s.to_neighbor), held);
          if (!lazy) EXPECT_EQ(s.stay, 0);
          if (averaging && held >= degree * 3) {
            const BigInt moving = lazy ? BigInt(held / 2) : BigInt(held);
            for (const auto& c : s.to_neighbor) {
              EXPECT_GE(c, moving / degree);
              EXPECT_LE(c, moving / degree + 1);
            }
          }
        }
      }
    }
  }
  // Huge counts stay exact under averaging.
  const BigInt big = BigInt(1) << 200;
  const auto parts = forward_tokens(big + 2, 3, BigInt(3), rng);
  EXPECT_EQ(sum(parts), big + 2);
}

TEST(SplitTokens, RemainderGoesToUniformSubset) {
  // 5 tokens over 4 neighbors: one neighbor gets 2. Each should be picked ~1/4 of the time.
  Rng rng(2024);
  std::vector<int> hits(4, 0);
  const int trials = 40000;
  for (int t = 0; t < trials; ++t) {
    const auto s = forward_tokens(BigInt(5), 4, BigInt(4), rng);
    for (std::size_t i = 0; i < 4; ++i) {
      if (s[i] == 2) ++hits[i];
    }
  }
  for (int h : hits) EXPECT_NEAR(h / double(trials), 0.25, 0.015);
}

TEST(Walk, TriangleExamples) {
  const Graph g = triangle();
  CongestLedger ledger;
  const WalkConfig cfg = plain_config(BigInt(300), Rational(1, 9));
  EXPECT_EQ(run_walk_phase(g, 0, 1, cfg, ledger).counts,
            (std::vector<BigInt>{BigInt(0), BigInt(150), BigInt(150)}));
  EXPECT_EQ(run_walk_phase(g, 0, 2, cfg, ledger).counts,
            (std::vector<BigInt>{BigInt(150), BigInt(75), BigInt(75)}));

  const TokenState one = run_walk_phase(g, 0, 5, plain_config(BigInt(1), Rational(1, 9)), ledger);
  EXPECT_EQ(sum(one.counts), 1);
  EXPECT_EQ(std::count(one.counts.begin(), one.counts.end(), BigInt(1)), 1);
}

// When every division is exact, averaging reproduces K * P_l with no noise.
void expect_exact_flow(const Graph& g, bool lazy, std::uint64_t per_step, std::uint64_t max_len) {
  for (std::uint64_t len = 1; len <= max_len; ++len) {
    BigInt k = 1;
    for (std::uint64_t i = 0; i < len; ++i) k *= per_step;
    k *= 1000;
    WalkConfig cfg = plain_config(k, Rational(1, 4));
    cfg.lazy = lazy;
    CongestLedger ledger;
    const TokenState st = run_walk_phase(g, 0, len, cfg, ledger);
    const DistVector p = exact_distribution(g, 0, len, lazy);
    for (NodeId v = 0; v < g.node_count(); ++v) {
      EXPECT_EQ(Rational(st.counts[v], k), p[v]) << "len " << len << " node " << v;
    }
  }
}

TEST(Walk, ExactFlowMatchesOracle) {
  expect_exact_flow(generate(family::Complete{4}), false, 3, 8);
  expect_exact_flow(generate(family::Cycle{5}), false, 2, 10);
  expect_exact_flow(generate(family::Cycle{6}), true, 4, 8);
}

TEST(Walk, OnlyNonzeroCountsAreSent) {
  const Graph g = generate(family::Cycle{7});
  CongestLedger ledger;
  run_walk_phase(g, 0, 1, plain_config(BigInt(100), Rational(1, 4)), ledger);
  ASSERT_EQ(ledger.rounds(), 1u);
  EXPECT_EQ(ledger.records()[0].traffic.size(), 2u);
}

TEST(Deviation, Examples) {
  const Graph g = triangle();
  const BigInt k(300);
  const std::vector<BigInt> stationary{BigInt(100), BigInt(100), BigInt(100)};
  EXPECT_EQ(deviation_sum(stationary, g, k, Rational(1, 9)).deviation(), 0);
  const std::vector<BigInt> one_step{BigInt(0), BigInt(150), BigInt(150)};
  const auto r1 = deviation_sum(one_step, g, k, Rational(1, 9));
  EXPECT_EQ(r1.deviation(), Rational(2, 3));
  EXPECT_FALSE(r1.pass);
  const std::vector<BigInt> two_steps{BigInt(150), BigInt(75), BigInt(75)};
  EXPECT_EQ(deviation_sum(two_steps, g, k, Rational(1, 9)).deviation(), Rational(1, 3));
  EXPECT_EQ(r1.denominator, 6 * k);
  // Boundary: equality passes.
  EXPECT_TRUE(deviation_sum(one_step, g, k, Rational(2, 3)).pass);
}

TEST(Estimate, TriangleIsFour) {
  const MixingEstimate est = estimate_mixing_time(triangle(), 0, plain_config(BigInt(300), Rational(1, 9)));
  EXPECT_EQ(est.estimate, 4u);
  ASSERT_NE(est.probe_at(4), nullptr);
  EXPECT_EQ(est.probe_at(1)->deviation, Rational(2, 3));
  EXPECT_EQ(est.probe_at(2)->deviation, Rational(1, 3));
  EXPECT_TRUE(est.probe_at(4)->pass);
  EXPECT_FALSE(est.probe_at(3)->pass);
  EXPECT_EQ(est.bracket_lo, 2u);
  EXPECT_EQ(est.bracket_hi, 4u);
}

TEST(Estimate, CompleteEightWithLooseEpsilon) {
  const MixingEstimate est =
      estimate_mixing_time(generate(family::Complete{8}), 0, plain_config(BigInt(7000), Rational(2)));
  EXPECT_EQ(est.estimate, 1u);
  EXPECT_EQ(est.probes.size(), 1u);
}

TEST(Estimate, CycleFiveMatchesOracle) {
  const Graph g = generate(family::Cycle{5});
  const Rational eps(1, 25);
  WalkConfig cfg = WalkConfig::defaults_for(g);
  cfg.tokens = BigInt(1) << 40;
  const MixingEstimate est = estimate_mixing_time(g, 0, cfg);
  EXPECT_EQ(est.estimate, exact_mixing_time(g, 0, eps, false));
  EXPECT_TRUE(bracket_check(g, 0, est.estimate, eps, cfg.tokens, false).ok);
}

TEST(Estimate, ProbeLogIsConsistent) {
  for (const auto& s : testing::suite_graphs()) {
    const Graph& g = s.graph;
    WalkConfig cfg = WalkConfig::defaults_for(g);
    cfg.lazy = s.lazy;
    cfg.seed = 3;
    const MixingEstimate est = estimate_mixing_time(g, 0, cfg);
    // Doubling phase: lengths 1, 2, 4, ... with all but the last failing.
    std::size_t i = 0;
    std::uint64_t expect_len = 1;
    while (i < est.probes.size() && est.probes[i].length == expect_len && !est.probes[i].pass) {
      ++i;
      expect_len *= 2;
    }
    ASSERT_LT(i, est.probes.size()) << s.name;
    EXPECT_EQ(est.probes[i].length, est.bracket_hi) << s.name;
    EXPECT_TRUE(est.probes[i].pass);
    // The estimate is a passing probe and its predecessor failed (or is 0).
    const ProbeRecord* hit = est.probe_at(est.estimate);
    ASSERT_NE(hit, nullptr) << s.name;
    EXPECT_TRUE(hit->pass);
    if (est.estimate > 1) {
      const ProbeRecord* before = est.probe_at(est.estimate - 1);
      ASSERT_NE(before, nullptr) << s.name;
      EXPECT_FALSE(before->pass);
    }
    std::uint64_t rounds = est.setup_rounds;
    for (const auto& p : est.probes) rounds += p.rounds;
    EXPECT_EQ(rounds, est.total_rounds) << s.name;
    EXPECT_EQ(est.ledger.rounds(), est.total_rounds) << s.name;
  }
}

std::string fingerprint(const MixingEstimate& est) {
  std::ostringstream out;
  est.write_probes_csv(out);
  est.ledger.write_csv(out);
  out << est.estimate;
  return out.str();
}

TEST(Estimate, DeterministicAcrossRunsAndThreads) {
  const Graph g = generate(family::Lollipop{4, 4});
  WalkConfig cfg = plain_config(BigInt(5000), Rational(1, 4));
  cfg.seed = 17;
  cfg.threshold_factor = 50;  // force sampling in the sparse tail
  const std::string ref = fingerprint(estimate_mixing_time(g, 0, cfg));
  EXPECT_EQ(fingerprint(estimate_mixing_time(g, 0, cfg)), ref);
  std::vector<std::future<std::string>> jobs;
  for (int i = 0; i < 4; ++i) {
    jobs.push_back(std::async(std::launch::async, [&] { return fingerprint(estimate_mixing_time(g, 0, cfg)); }));
  }
  for (auto& j : jobs) EXPECT_EQ(j.get(), ref);
  cfg.seed = 18;
  EXPECT_NE(fingerprint(estimate_mixing_time(g, 0, cfg)), ref);
}

TEST(Estimate, MaxLengthExceededCarriesPartialLog) {
  const Graph g = generate(family::Cycle{7});
  WalkConfig cfg = plain_config(BigInt(1) << 30, Rational(1, 1000), 8);
  try {
    estimate_mixing_time(g, 0, cfg);
    FAIL();
  } catch (const MaxLengthExceededError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MaxLengthExceeded);
    const auto& partial = e.partial();
    ASSERT_EQ(partial.probes.size(), 4u);
    EXPECT_EQ(partial.probes.back().length, 8u);
    for (const auto& p : partial.probes) EXPECT_FALSE(p.pass);
    EXPECT_EQ(partial.ledger.rounds(), partial.total_rounds);
  }
}

TEST(Estimate, RejectsBadInput) {
  EXPECT_THROW(estimate_mixing_time(generate(family::Cycle{6}), 0, plain_config(BigInt(10), Rational(1, 4))),
               BipartiteError);
  EXPECT_THROW(estimate_mixing_time(triangle(), 3, plain_config(BigInt(10), Rational(1, 4))), Error);
  EXPECT_THROW(estimate_mixing_time(triangle(), 0, plain_config(BigInt(0), Rational(1, 4))), Error);
  EXPECT_THROW(estimate_mixing_time(triangle(), 0, plain_config(BigInt(10), Rational(0))), Error);
}

TEST(Estimate, BiasAndConservationPerRound) {
  for (const auto& s : testing::suite_graphs()) {
    const Graph& g = s.graph;
    WalkConfig cfg = plain_config(BigInt(123457), Rational(1, g.node_count() * g.node_count()), 100000);
    cfg.lazy = s.lazy;
    cfg.threshold_factor = 1;
    ProbeObserver obs;
    obs.on_round = [&](std::size_t, std::uint64_t, std::uint64_t, std::span<const BigInt> counts) {
      EXPECT_EQ(sum(counts), cfg.tokens) << s.name;
    };
    obs.on_probe = [&](const ProbeRecord& p, std::span<const BigInt> counts) {
      const DistVector exact = exact_distribution(g, 0, p.length, cfg.lazy);
      Rational gap = 0;
      for (NodeId v = 0; v < g.node_count(); ++v) gap += abs(Rational(counts[v], cfg.tokens) - exact[v]);
      EXPECT_LE(gap, bias_bound(p.length, g, cfg.tokens)) << s.name << " len " << p.length;
    };
    estimate_mixing_time(g, 0, cfg, obs);
  }
}

TEST(Estimate, DefaultTokensFitLogWord) {
  for (const auto& s : testing::suite_graphs()) {
    const Graph& g = s.graph;
    WalkConfig cfg = WalkConfig::defaults_for(g);
    cfg.lazy = s.lazy;
    const MixingEstimate est = estimate_mixing_time(g, 0, cfg);
    const std::size_t limit = 9 * ceil_log2(g.node_count()) + 7;
    EXPECT_LE(est.ledger.max_message_bits() - kTagBits, limit) << s.name;
    EXPECT_LE(est.ledger.max_messages_per_edge(Phase::Walk), 1u) << s.name;
  }
}

}  // namespace
}  // namespace mixtime
