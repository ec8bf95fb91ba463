#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mixtime/congest.hpp"
#include "mixtime/error.hpp"
#include "mixtime/graph.hpp"
#include "mixtime/numeric.hpp"

namespace mixtime {

using Rng = std::mt19937_64;

/// Protocol parameters. Use defaults_for() to get the documented defaults
/// for a graph, then override fields.
struct WalkConfig {
  BigInt tokens = 1;           // K
  Rational epsilon{1, 4};      // accept when the L1 deviation is <= epsilon
  std::uint64_t seed = 0;
  bool lazy = false;
  bool averaging = true;       // false: every token always samples its own edge
  std::uint64_t threshold_factor = 1;  // averaging kicks in at degree * factor tokens
  std::uint64_t max_length = 1;
  std::size_t word_bits = 0;   // per-message budget incl. tag; 0 derives it from K

  /// K = ceil(80 n^8 ln n), epsilon = 1/n^2, factor = ceil(ln n),
  /// max_length = n^3 ceil(log2 n).
  static WalkConfig defaults_for(const Graph& g, LogBase k_base = LogBase::Natural) {
    const std::uint64_t n = g.node_count();
    WalkConfig cfg;
    cfg.tokens = paper_token_count(n, k_base);
    cfg.epsilon = Rational(1, n * n);
    cfg.threshold_factor = std::max<std::uint64_t>(1, ceil_ln(n));
    cfg.max_length = std::max<std::uint64_t>(1, n * n * n * ceil_log2(n));
    return cfg;
  }

  void validate() const {
    if (tokens < 1) throw Error(ErrorKind::InvalidConfig, "token count K must be >= 1");
    if (epsilon <= 0 || epsilon > 2) throw Error(ErrorKind::InvalidConfig, "epsilon must lie in (0, 2]");
    if (max_length < 1) throw Error(ErrorKind::InvalidConfig, "max_length must be >= 1");
    if (threshold_factor < 1) throw Error(ErrorKind::InvalidConfig, "threshold factor must be >= 1");
    if (word_bits != 0 && word_bits <= kTagBits) {
      throw Error(ErrorKind::InvalidConfig, "word size must exceed the tag overhead");
    }
  }
};

/// Message budget: explicit word_bits, else one word wide enough for K, n, m
/// and any probe length.
inline std::size_t message_bits(const WalkConfig& cfg, const Graph& g) {
  if (cfg.word_bits != 0) return cfg.word_bits;
  const std::size_t payload =
      std::max({bit_width(cfg.tokens), bit_width(BigInt(cfg.max_length)),
                bit_width(BigInt(g.node_count())), bit_width(BigInt(g.edge_count()))});
  return payload + kTagBits;
}

/// Outcome of one node's local token assignment for one round.
struct TokenSplit {
  BigInt stay = 0;                  // lazy walks only
  std::vector<BigInt> to_neighbor;  // aligned with the sorted neighbor list
};

inline constexpr std::uint64_t kPerTokenSamplingLimit = 1u << 16;

namespace detail {

/// Uniform multinomial over `bins` for `count` independent tokens. Small
/// counts draw one neighbor per token; large counts use the equivalent chain
/// of conditional binomials.
inline std::vector<std::uint64_t> sample_uniform_multinomial(std::uint64_t count, std::size_t bins,
                                                             Rng& rng) {
  std::vector<std::uint64_t> out(bins, 0);
  if (count <= kPerTokenSamplingLimit) {
    std::uniform_int_distribution<std::size_t> pick(0, bins - 1);
    for (std::uint64_t t = 0; t < count; ++t) out[pick(rng)] += 1;
    return out;
  }
  std::uint64_t remaining = count;
  for (std::size_t i = 0; i + 1 < bins && remaining > 0; ++i) {
    std::binomial_distribution<std::uint64_t> draw(remaining, 1.0 / static_cast<double>(bins - i));
    out[i] = draw(rng);
    remaining -= out[i];
  }
  out[bins - 1] += remaining;
  return out;
}

inline std::uint64_t sample_fair_coins(std::uint64_t count, Rng& rng) {
  if (count <= kPerTokenSamplingLimit) {
    std::uint64_t heads = 0;
    for (std::uint64_t t = 0; t < count; ++t) heads += rng() >> 63;
    return heads;
  }
  std::binomial_distribution<std::uint64_t> draw(count, 0.5);
  return draw(rng);
}

}  // namespace detail

/// Decides how many of `held` tokens cross each incident edge this round.
///
/// At or above `threshold` (with averaging on) each neighbor gets
/// floor(moving/d) and the remainder goes one token each to a uniformly
/// random subset of neighbors; a lazy node first keeps ceil(held/2). Below it
/// every token samples independently (a fair stay/move coin first when lazy).
/// The parts always sum to `held`.
inline TokenSplit split_tokens(const BigInt& held, std::size_t degree, const BigInt& threshold,
                               bool averaging, bool lazy, Rng& rng) {
  if (degree == 0) throw Error(ErrorKind::DegenerateGraph, "isolated node cannot forward tokens");
  if (held < 0) throw Error(ErrorKind::InvalidParameters, "negative token count");
  TokenSplit split;
  split.to_neighbor.assign(degree, BigInt(0));
  if (held == 0) return split;

  if (averaging && held >= threshold) {
    const BigInt moving = lazy ? BigInt(held / 2) : held;
    split.stay = held - moving;
    const BigInt base = moving / degree;
    const auto extra = static_cast<std::size_t>(moving % degree);
    for (auto& c : split.to_neighbor) c = base;
    if (extra > 0) {
      std::vector<std::size_t> all(degree);
      std::iota(all.begin(), all.end(), std::size_t{0});
      std::vector<std::size_t> chosen;
      chosen.reserve(extra);
      std::sample(all.begin(), all.end(), std::back_inserter(chosen), extra, rng);
      for (std::size_t i : chosen) split.to_neighbor[i] += 1;
    }
    return split;
  }

  if (held > BigInt(UINT64_MAX)) {
    throw Error(ErrorKind::InvalidParameters, "per-token sampling needs fewer than 2^64 tokens");
  }
  const auto h = held.convert_to<std::uint64_t>();
  const std::uint64_t stay = lazy ? detail::sample_fair_coins(h, rng) : 0;
  split.stay = stay;
  const auto counts = detail::sample_uniform_multinomial(h - stay, degree, rng);
  for (std::size_t i = 0; i < degree; ++i) split.to_neighbor[i] = counts[i];
  return split;
}

/// Non-lazy forwarding with averaging enabled.
inline std::vector<BigInt> forward_tokens(const BigInt& held, std::size_t degree,
                                          const BigInt& threshold, Rng& rng) {
  return split_tokens(held, degree, threshold, true, false, rng).to_neighbor;
}

/// Independent, reproducible stream for one node within one probe.
inline Rng node_stream(std::uint64_t seed, std::uint64_t probe_index, NodeId node) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(probe_index),
                    static_cast<std::uint32_t>(probe_index >> 32), static_cast<std::uint32_t>(node)};
  return Rng(seq);
}

struct TokenState {
  std::vector<BigInt> counts;        // zeta, tokens held per node after the last round
  std::vector<BigInt> round_totals;  // sum of zeta after each round
  std::uint64_t rounds_used = 0;
};

/// Called after every walk round with the per-node counts.
using RoundCallback = std::function<void(std::uint64_t round, std::span<const BigInt> counts)>;

/// K tokens start at `source` and take `length` synchronous steps. Each round
/// every token holder sends one count per incident edge (zero counts are not
/// sent); receivers add up what arrives.
inline TokenState run_walk_phase(Network& net, NodeId source, std::uint64_t length,
                                 const WalkConfig& cfg, std::uint64_t probe_index = 0,
                                 const RoundCallback& on_round = {}) {
  const Graph& g = net.graph();
  const std::size_t n = g.node_count();
  if (source >= n) throw Error(ErrorKind::LabelOutOfRange, "source outside graph");
  if (length < 1) throw Error(ErrorKind::InvalidParameters, "walk length must be >= 1");

  std::vector<Rng> streams;
  streams.reserve(n);
  for (NodeId v = 0; v < n; ++v) streams.push_back(node_stream(cfg.seed, probe_index, v));

  TokenState state;
  state.counts.assign(n, BigInt(0));
  state.counts[source] = cfg.tokens;
  const std::uint64_t start = net.rounds();

  for (std::uint64_t round = 1; round <= length; ++round) {
    Mailboxes out = net.empty_outboxes();
    std::vector<BigInt> next(n, BigInt(0));
    for (NodeId v = 0; v < n; ++v) {
      if (state.counts[v] == 0) continue;
      const std::size_t d = g.degree(v);
      const BigInt threshold = BigInt(d) * cfg.threshold_factor;
      TokenSplit split = split_tokens(state.counts[v], d, threshold, cfg.averaging, cfg.lazy, streams[v]);
      next[v] += split.stay;
      const auto nb = g.neighbors(v);
      for (std::size_t i = 0; i < d; ++i) {
        if (split.to_neighbor[i] == 0) continue;
        out[v].push_back(Message{v, nb[i], PayloadKind::WalkCount, std::move(split.to_neighbor[i])});
      }
    }
    const Mailboxes in = net.run_round(out, Phase::Walk);
    for (NodeId w = 0; w < n; ++w) {
      for (const auto& msg : in[w]) next[w] += msg.payload;
    }
    state.counts = std::move(next);
    BigInt total = 0;
    for (const auto& c : state.counts) total += c;
    state.round_totals.push_back(std::move(total));
    if (on_round) on_round(round, state.counts);
  }
  state.rounds_used = net.rounds() - start;
  return state;
}

inline TokenState run_walk_phase(const Graph& g, NodeId source, std::uint64_t length,
                                 const WalkConfig& cfg, CongestLedger& ledger) {
  Network net(g, Bandwidth{1, message_bits(cfg, g)}, ledger);
  return run_walk_phase(net, source, length, cfg);
}

/// Sum over w of |zeta_w/K - d(w)/2m|, held as integers over 2mK.
struct DeviationReport {
  std::vector<BigInt> numerators;  // |2m zeta_w - d(w) K|
  BigInt total = 0;
  BigInt denominator = 1;  // 2mK
  bool pass = false;

  Rational deviation() const { return Rational(total, denominator); }
};

inline bool deviation_within(const BigInt& total, const BigInt& denominator, const Rational& epsilon) {
  return total * BigInt(boost::multiprecision::denominator(epsilon)) <=
         BigInt(boost::multiprecision::numerator(epsilon)) * denominator;
}

inline DeviationReport deviation_sum(std::span<const BigInt> counts, const Graph& g,
                                     const BigInt& tokens, const Rational& epsilon) {
  if (counts.size() != g.node_count()) throw Error(ErrorKind::InvalidParameters, "one count per node");
  const BigInt two_m = BigInt(2 * g.edge_count());
  DeviationReport report;
  report.denominator = two_m * tokens;
  report.numerators.reserve(counts.size());
  for (NodeId w = 0; w < counts.size(); ++w) {
    report.numerators.push_back(boost::multiprecision::abs(two_m * counts[w] - BigInt(g.degree(w)) * tokens));
    report.total += report.numerators.back();
  }
  report.pass = deviation_within(report.total, report.denominator, epsilon);
  return report;
}

struct ProbeRecord {
  std::size_t index = 0;
  std::uint64_t length = 0;
  Rational deviation = 0;
  bool pass = false;
  std::uint64_t rounds = 0;  // announcement + walk + upcast
};

struct MixingEstimate {
  std::uint64_t estimate = 0;
  std::vector<ProbeRecord> probes;
  std::uint64_t total_rounds = 0;
  std::uint64_t bfs_rounds = 0;
  std::uint64_t setup_rounds = 0;  // BFS plus parameter broadcast
  std::size_t bfs_height = 0;
  std::uint64_t bracket_lo = 0;  // largest failing power of two (0 if none)
  std::uint64_t bracket_hi = 0;  // first passing doubling length
  std::size_t message_bits = 0;
  BigInt tokens = 0;
  Rational epsilon = 0;
  CongestLedger ledger;

  const ProbeRecord* probe_at(std::uint64_t length) const {
    for (const auto& p : probes) {
      if (p.length == length) return &p;
    }
    return nullptr;
  }

  void write_probes_csv(std::ostream& out) const {
    out << "probe_index,length,deviation_num,deviation_den,verdict,rounds\n";
    for (const auto& p : probes) {
      out << p.index << ',' << p.length << ',' << boost::multiprecision::numerator(p.deviation) << ','
          << boost::multiprecision::denominator(p.deviation) << ',' << (p.pass ? "pass" : "fail") << ','
          << p.rounds << '\n';
    }
  }
};

/// Raised when no probe up to max_length passes; carries everything done so far.
class MaxLengthExceededError : public Error {
 public:
  MaxLengthExceededError(const std::string& message, MixingEstimate partial)
      : Error(ErrorKind::MaxLengthExceeded, message), partial_(std::move(partial)) {}

  const MixingEstimate& partial() const noexcept { return partial_; }

 private:
  MixingEstimate partial_;
};

struct ProbeObserver {
  std::function<void(std::size_t probe, std::uint64_t length, std::uint64_t round,
                     std::span<const BigInt> counts)>
      on_round;
  std::function<void(const ProbeRecord& probe, std::span<const BigInt> counts)> on_probe;
};

/// Runs the full protocol from `source`: BFS tree, parameter broadcast, then
/// probes at lengths 1, 2, 4, ... until one passes, then a binary search
/// inside the last doubling bracket. Each probe re-runs the walk from scratch
/// with its own random substream.
inline MixingEstimate estimate_mixing_time(const Graph& g, NodeId source, const WalkConfig& cfg,
                                           const ProbeObserver& observer = {}) {
  cfg.validate();
  validate_for_walk(g, cfg.lazy);
  if (source >= g.node_count()) throw Error(ErrorKind::LabelOutOfRange, "source outside graph");

  MixingEstimate est;
  est.tokens = cfg.tokens;
  est.epsilon = cfg.epsilon;
  est.message_bits = message_bits(cfg, g);
  Network net(g, Bandwidth{1, est.message_bits}, est.ledger);

  const BfsResult bfs = build_bfs_tree(net, source);
  est.bfs_rounds = bfs.rounds_used;
  est.bfs_height = bfs.tree.height;

  // Every node learns n, m, K and the tree height.
  const std::vector<BigInt> params{BigInt(g.node_count()), BigInt(g.edge_count()), cfg.tokens,
                                   BigInt(bfs.tree.height)};
  const auto setup = broadcast_values(net, bfs.tree, params);
  for (const auto& seen : setup.received) {
    if (seen != params) throw Error(ErrorKind::InvalidParameters, "parameter broadcast incomplete");
  }
  est.setup_rounds = net.rounds();

  const BigInt two_m = BigInt(2 * g.edge_count());
  const BigInt denominator = two_m * cfg.tokens;
  const BigInt bound = 2 * denominator;

  auto probe = [&](std::uint64_t length) -> const ProbeRecord& {
    const std::size_t index = est.probes.size();
    const std::uint64_t before = net.rounds();
    const std::vector<BigInt> announce{BigInt(length)};
    broadcast_values(net, bfs.tree, announce);
    RoundCallback on_round;
    if (observer.on_round) {
      on_round = [&](std::uint64_t r, std::span<const BigInt> c) { observer.on_round(index, length, r, c); };
    }
    const TokenState tokens = run_walk_phase(net, source, length, cfg, index, on_round);
    // Each node computes its own numerator |2m zeta_w - d(w) K| locally.
    std::vector<BigInt> local(g.node_count());
    for (NodeId w = 0; w < g.node_count(); ++w) {
      local[w] = boost::multiprecision::abs(two_m * tokens.counts[w] - BigInt(g.degree(w)) * cfg.tokens);
    }
    const UpcastResult up = upcast_numerators(net, bfs.tree, local, bound);
    ProbeRecord rec;
    rec.index = index;
    rec.length = length;
    rec.deviation = Rational(up.total, denominator);
    rec.pass = deviation_within(up.total, denominator, cfg.epsilon);
    rec.rounds = net.rounds() - before;
    est.probes.push_back(rec);
    if (observer.on_probe) observer.on_probe(est.probes.back(), tokens.counts);
    return est.probes.back();
  };

  auto finish = [&] { est.total_rounds = net.rounds(); };

  std::uint64_t failed = 0;
  std::uint64_t passed = 0;
  for (std::uint64_t length = 1;; length = std::min(length * 2, cfg.max_length)) {
    if (probe(length).pass) {
      passed = length;
      break;
    }
    if (length >= cfg.max_length) {
      finish();
      est.bracket_lo = length;
      throw MaxLengthExceededError("no probe up to max_length " + std::to_string(cfg.max_length) +
                                       " reached the threshold",
                                   std::move(est));
    }
    failed = length;
  }
  est.bracket_lo = failed;
  est.bracket_hi = passed;

  std::uint64_t lo = failed;
  std::uint64_t hi = passed;
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (probe(mid).pass) hi = mid;
    else lo = mid;
  }
  est.estimate = hi;
  finish();
  return est;
}

}  // namespace mixtime
