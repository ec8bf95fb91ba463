#pragma once

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mixtime/agreement.hpp"
#include "mixtime/congest.hpp"
#include "mixtime/error.hpp"
#include "mixtime/families.hpp"
#include "mixtime/graph.hpp"
#include "mixtime/mixing.hpp"
#include "mixtime/numeric.hpp"
#include "mixtime/oracle.hpp"

namespace mixtime {

using Json = nlohmann::ordered_json;

struct ExperimentConfig {
  std::string name;  // batch entry label; empty for single runs
  std::optional<std::string> graph_path;
  std::optional<GraphFamily> family;
  NodeId source = 0;

  std::optional<BigInt> tokens;
  bool paper_k = false;
  LogBase k_log_base = LogBase::Natural;
  std::optional<Rational> epsilon;
  std::uint64_t seed = 0;
  bool lazy = false;
  std::optional<std::uint64_t> max_length;
  std::optional<std::uint64_t> threshold_factor;
  bool averaging = true;
  std::optional<std::size_t> word_bits;

  bool oracle = false;
  bool spectral = false;
  std::optional<std::uint64_t> monotonicity_horizon;

  std::optional<std::string> out_dir;
  std::size_t jobs = 1;
};

namespace detail {

inline void check_graph_source(const ExperimentConfig& cfg) {
  if (cfg.graph_path && cfg.family) {
    throw Error(ErrorKind::ConflictingGraphSource, "give either --graph or --family, not both");
  }
  if (!cfg.graph_path && !cfg.family) {
    throw Error(ErrorKind::MissingGraphSource, "one of --graph or --family is required");
  }
}

inline std::uint64_t json_uint(const Json& j, const char* key) {
  if (!j.is_number_unsigned()) {
    throw Error(ErrorKind::InvalidConfig, std::string("'") + key + "' must be a non-negative integer");
  }
  return j.get<std::uint64_t>();
}

inline bool json_bool(const Json& j, const char* key) {
  if (!j.is_boolean()) throw Error(ErrorKind::InvalidConfig, std::string("'") + key + "' must be a boolean");
  return j.get<bool>();
}

inline std::string json_string(const Json& j, const char* key) {
  if (!j.is_string()) throw Error(ErrorKind::InvalidConfig, std::string("'") + key + "' must be a string");
  return j.get<std::string>();
}

}  // namespace detail

/// Applies the keys of one JSON object (same names as the long flags, with
/// '-' spelled '_') on top of `cfg`.
inline void apply_json(const Json& obj, ExperimentConfig& cfg) {
  if (!obj.is_object()) throw Error(ErrorKind::InvalidConfig, "config entries must be JSON objects");
  if (obj.contains("graph") || obj.contains("family")) {
    cfg.graph_path.reset();
    cfg.family.reset();
  }
  for (const auto& [key, value] : obj.items()) {
    const char* k = key.c_str();
    if (key == "experiments") continue;
    if (key == "name") cfg.name = detail::json_string(value, k);
    else if (key == "graph") cfg.graph_path = detail::json_string(value, k);
    else if (key == "family") cfg.family = parse_family(detail::json_string(value, k));
    else if (key == "source") cfg.source = static_cast<NodeId>(detail::json_uint(value, k));
    else if (key == "tokens") cfg.tokens = value.is_string() ? parse_bigint(value.get<std::string>())
                                                             : BigInt(detail::json_uint(value, k));
    else if (key == "paper_k") cfg.paper_k = detail::json_bool(value, k);
    else if (key == "k_log_base") cfg.k_log_base = parse_log_base(detail::json_string(value, k));
    else if (key == "epsilon") cfg.epsilon = parse_rational(detail::json_string(value, k));
    else if (key == "seed") cfg.seed = detail::json_uint(value, k);
    else if (key == "lazy") cfg.lazy = detail::json_bool(value, k);
    else if (key == "max_length") cfg.max_length = detail::json_uint(value, k);
    else if (key == "threshold_factor") cfg.threshold_factor = detail::json_uint(value, k);
    else if (key == "no_averaging") cfg.averaging = !detail::json_bool(value, k);
    else if (key == "word_bits") cfg.word_bits = detail::json_uint(value, k);
    else if (key == "oracle") cfg.oracle = detail::json_bool(value, k);
    else if (key == "spectral") cfg.spectral = detail::json_bool(value, k);
    else if (key == "monotonicity") cfg.monotonicity_horizon = detail::json_uint(value, k);
    else if (key == "out") cfg.out_dir = detail::json_string(value, k);
    else if (key == "jobs") cfg.jobs = detail::json_uint(value, k);
    else throw Error(ErrorKind::UnknownFlag, "unknown config key '" + key + "'");
  }
}

inline Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open config file " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::InvalidConfig, "config file " + path + ": " + e.what());
  }
}

/// Command-line flags as parsed but not yet merged with a config file.
struct FlagSet {
  std::optional<std::string> config_path;
  ExperimentConfig overrides;
  std::vector<std::string> given;  // long names that appeared on the command line
  bool wants(const std::string& name) const {
    return std::find(given.begin(), given.end(), name) != given.end();
  }
};

inline FlagSet parse_flags(const std::vector<std::string>& args) {
  CLI::App app{"mixtime"};
  FlagSet flags;
  auto& o = flags.overrides;
  std::string graph, family, tokens, epsilon, log_base;
  std::uint64_t source = 0, seed = 0, max_length = 0, threshold = 0, horizon = 0;
  std::size_t word_bits = 0, jobs = 1;
  std::string config, out;
  bool paper_k = false, lazy = false, oracle = false, spectral = false, no_averaging = false;

  app.add_option("--config", config);
  app.add_option("--graph", graph);
  app.add_option("--family", family);
  app.add_option("--source", source);
  app.add_option("--epsilon", epsilon);
  app.add_option("--tokens", tokens);
  app.add_flag("--paper-k", paper_k);
  app.add_option("--k-log-base", log_base);
  app.add_option("--seed", seed);
  app.add_flag("--lazy", lazy);
  app.add_option("--max-length", max_length);
  app.add_option("--threshold-factor", threshold);
  app.add_flag("--no-averaging", no_averaging);
  app.add_option("--word-bits", word_bits);
  app.add_flag("--oracle", oracle);
  app.add_flag("--spectral", spectral);
  app.add_option("--monotonicity", horizon);
  app.add_option("--out", out);
  app.add_option("--jobs", jobs);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ExtrasError& e) {
    throw Error(ErrorKind::UnknownFlag, e.what());
  } catch (const CLI::ParseError& e) {
    throw Error(ErrorKind::InvalidConfig, e.what());
  }

  for (const auto* opt : app.get_options()) {
    if (opt->count() > 0) flags.given.push_back(opt->get_name().substr(2));
  }
  if (flags.wants("config")) flags.config_path = config;
  if (flags.wants("graph")) o.graph_path = graph;
  if (flags.wants("family")) o.family = parse_family(family);
  o.source = static_cast<NodeId>(source);
  if (flags.wants("epsilon")) o.epsilon = parse_rational(epsilon);
  if (flags.wants("tokens")) o.tokens = parse_bigint(tokens);
  o.paper_k = paper_k;
  if (flags.wants("k-log-base")) o.k_log_base = parse_log_base(log_base);
  o.seed = seed;
  o.lazy = lazy;
  if (flags.wants("max-length")) o.max_length = max_length;
  if (flags.wants("threshold-factor")) o.threshold_factor = threshold;
  o.averaging = !no_averaging;
  if (flags.wants("word-bits")) o.word_bits = word_bits;
  o.oracle = oracle;
  o.spectral = spectral;
  if (flags.wants("monotonicity")) o.monotonicity_horizon = horizon;
  if (flags.wants("out")) o.out_dir = out;
  o.jobs = jobs;
  return flags;
}

inline void apply_flags(const FlagSet& flags, ExperimentConfig& cfg) {
  const auto& o = flags.overrides;
  if (flags.wants("graph") || flags.wants("family")) {
    cfg.graph_path = o.graph_path;
    cfg.family = o.family;
  }
  if (flags.wants("source")) cfg.source = o.source;
  if (flags.wants("epsilon")) cfg.epsilon = o.epsilon;
  if (flags.wants("tokens")) { cfg.tokens = o.tokens; cfg.paper_k = false; }
  if (flags.wants("paper-k")) { cfg.paper_k = true; cfg.tokens.reset(); }
  if (flags.wants("k-log-base")) cfg.k_log_base = o.k_log_base;
  if (flags.wants("seed")) cfg.seed = o.seed;
  if (flags.wants("lazy")) cfg.lazy = true;
  if (flags.wants("max-length")) cfg.max_length = o.max_length;
  if (flags.wants("threshold-factor")) cfg.threshold_factor = o.threshold_factor;
  if (flags.wants("no-averaging")) cfg.averaging = false;
  if (flags.wants("word-bits")) cfg.word_bits = o.word_bits;
  if (flags.wants("oracle")) cfg.oracle = true;
  if (flags.wants("spectral")) cfg.spectral = true;
  if (flags.wants("monotonicity")) cfg.monotonicity_horizon = o.monotonicity_horizon;
  if (flags.wants("out")) cfg.out_dir = o.out_dir;
  if (flags.wants("jobs")) cfg.jobs = o.jobs;
}

inline void check_config(const ExperimentConfig& cfg, const FlagSet& flags) {
  if (flags.wants("tokens") && flags.wants("paper-k")) {
    throw Error(ErrorKind::InvalidConfig, "--tokens and --paper-k are mutually exclusive");
  }
  if (cfg.jobs < 1) throw Error(ErrorKind::InvalidConfig, "--jobs must be >= 1");
  detail::check_graph_source(cfg);
}

/// Flags override values from the optional --config JSON file.
inline ExperimentConfig parse_config(const std::vector<std::string>& args) {
  const FlagSet flags = parse_flags(args);
  ExperimentConfig cfg;
  if (flags.config_path) {
    const Json file = load_json_file(*flags.config_path);
    if (file.contains("experiments")) {
      throw Error(ErrorKind::InvalidConfig, "config lists several experiments; run it as a batch");
    }
    apply_json(file, cfg);
  }
  apply_flags(flags, cfg);
  check_config(cfg, flags);
  return cfg;
}

/// Like parse_config, but a config file may hold an "experiments" array; each
/// entry is layered over the file's top-level keys, then the flags. Entries
/// write into <out>/<name> (or <out>/exp_<i>).
inline std::vector<ExperimentConfig> parse_batch(const std::vector<std::string>& args) {
  const FlagSet flags = parse_flags(args);
  if (!flags.config_path) return {parse_config(args)};
  const Json file = load_json_file(*flags.config_path);
  if (!file.contains("experiments")) return {parse_config(args)};
  if (!file["experiments"].is_array() || file["experiments"].empty()) {
    throw Error(ErrorKind::InvalidConfig, "'experiments' must be a non-empty array");
  }
  std::vector<ExperimentConfig> out;
  std::size_t index = 0;
  for (const auto& entry : file["experiments"]) {
    ExperimentConfig cfg;
    apply_json(file, cfg);
    cfg.name.clear();
    apply_json(entry, cfg);
    apply_flags(flags, cfg);
    check_config(cfg, flags);
    if (cfg.name.empty()) cfg.name = "exp_" + std::to_string(index);
    if (cfg.out_dir) cfg.out_dir = (std::filesystem::path(*cfg.out_dir) / cfg.name).string();
    out.push_back(std::move(cfg));
    ++index;
  }
  return out;
}

inline Graph load_graph(const ExperimentConfig& cfg) {
  detail::check_graph_source(cfg);
  if (cfg.family) return generate(*cfg.family, cfg.seed);
  std::ifstream in(*cfg.graph_path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open graph file " + *cfg.graph_path);
  return parse_graph_text(in);
}

inline WalkConfig resolve_walk_config(const ExperimentConfig& cfg, const Graph& g) {
  WalkConfig walk = WalkConfig::defaults_for(g, cfg.k_log_base);
  if (cfg.tokens && !cfg.paper_k) walk.tokens = *cfg.tokens;
  if (cfg.epsilon) walk.epsilon = *cfg.epsilon;
  walk.seed = cfg.seed;
  walk.lazy = cfg.lazy;
  walk.averaging = cfg.averaging;
  if (cfg.max_length) walk.max_length = *cfg.max_length;
  if (cfg.threshold_factor) walk.threshold_factor = *cfg.threshold_factor;
  if (cfg.word_bits) walk.word_bits = *cfg.word_bits;
  walk.validate();
  return walk;
}

struct CongestionSummary {
  std::size_t max_messages_per_edge = 0;       // any phase
  std::size_t max_walk_messages_per_edge = 0;  // walk phase only
  std::size_t max_message_bits = 0;
  std::size_t max_walk_payload_bits = 0;
  std::uint64_t total_messages = 0;
  std::uint64_t walk_rounds = 0;
};

inline CongestionSummary summarize(const CongestLedger& ledger) {
  CongestionSummary s;
  s.max_messages_per_edge = ledger.max_messages_per_edge();
  s.max_walk_messages_per_edge = ledger.max_messages_per_edge(Phase::Walk);
  s.max_message_bits = ledger.max_message_bits();
  const std::size_t walk_bits = ledger.max_message_bits(Phase::Walk);
  s.max_walk_payload_bits = walk_bits > kTagBits ? walk_bits - kTagBits : 0;
  s.total_messages = ledger.total_messages();
  s.walk_rounds = ledger.rounds_in(Phase::Walk);
  return s;
}

struct ExperimentReport {
  std::string status = "ok";  // or "max_length_exceeded"
  std::string graph_source;
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t diameter = 0;
  NodeId source = 0;
  WalkConfig walk;
  MixingEstimate estimate;
  std::optional<BracketCheck> agreement;
  std::optional<SpectralReport> spectral;
  std::optional<MonotonicityVerdict> monotonicity;
  CongestionSummary congestion;
  std::vector<std::pair<std::string, double>> timings_seconds;  // kept out of report.json

  Json to_json() const;
};

inline Json ExperimentReport::to_json() const {
  Json j;
  j["status"] = status;
  j["config"] = {
      {"graph", graph_source},
      {"source", source},
      {"tokens", walk.tokens.str()},
      {"epsilon", to_string(walk.epsilon)},
      {"seed", walk.seed},
      {"lazy", walk.lazy},
      {"averaging", walk.averaging},
      {"threshold_factor", walk.threshold_factor},
      {"max_length", walk.max_length},
      {"message_bits", estimate.message_bits},
  };
  j["graph"] = {{"n", n}, {"m", m}, {"diameter", diameter}, {"bfs_height", estimate.bfs_height}};
  Json probes = Json::array();
  for (const auto& p : estimate.probes) {
    probes.push_back({{"index", p.index},
                      {"length", p.length},
                      {"deviation", to_string(p.deviation)},
                      {"pass", p.pass},
                      {"rounds", p.rounds}});
  }
  Json est = {{"bracket", {estimate.bracket_lo, estimate.bracket_hi}},
              {"total_rounds", estimate.total_rounds},
              {"bfs_rounds", estimate.bfs_rounds},
              {"setup_rounds", estimate.setup_rounds},
              {"probes", probes}};
  if (status == "ok") est["value"] = estimate.estimate;
  else est["value"] = nullptr;
  j["estimate"] = est;
  if (agreement) {
    j["oracle"] = {{"exact_mixing_time", agreement->exact},
                   {"delta", to_string(agreement->delta)},
                   {"lower", agreement->lower},
                   {"upper", agreement->upper ? Json(*agreement->upper) : Json(nullptr)},
                   {"agreement", agreement->ok}};
  }
  if (spectral) {
    const auto& s = *spectral;
    j["spectral"] = {{"lambda2", s.lambda2},
                     {"lambda_min", s.lambda_min},
                     {"abs_gap", s.abs_gap},
                     {"cheeger_lower", s.cheeger_lower},
                     {"cheeger_upper", s.cheeger_upper},
                     {"tau_quarter", s.tau_quarter ? Json(*s.tau_quarter) : Json(nullptr)},
                     {"sandwich_ok", s.sandwich_ok},
                     {"mixing_upper_bound",
                      s.mixing_upper_bound ? Json(*s.mixing_upper_bound) : Json(nullptr)},
                     {"relaxation_time", s.relaxation_time},
                     {"error_bound", s.error_bound},
                     {"eigenvalues", s.eigenvalues}};
  }
  if (monotonicity) {
    j["monotonicity"] = {{"horizon", monotonicity->distances.size() - 1},
                         {"ok", monotonicity->ok},
                         {"first_violation", monotonicity->first_violation
                                                 ? Json(*monotonicity->first_violation)
                                                 : Json(nullptr)}};
  }
  j["congestion"] = {{"max_messages_per_edge_per_round", congestion.max_messages_per_edge},
                     {"max_walk_messages_per_edge_per_round", congestion.max_walk_messages_per_edge},
                     {"max_message_bits", congestion.max_message_bits},
                     {"max_walk_payload_bits", congestion.max_walk_payload_bits},
                     {"total_messages", congestion.total_messages},
                     {"walk_rounds", congestion.walk_rounds}};
  return j;
}

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << content;
}

inline void write_outputs(const ExperimentReport& report, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  write_file(base / "report.json", report.to_json().dump(2) + "\n");
  std::ostringstream probes, ledger;
  report.estimate.write_probes_csv(probes);
  report.estimate.ledger.write_csv(ledger);
  write_file(base / "probes.csv", probes.str());
  write_file(base / "ledger.csv", ledger.str());
  Json timings = Json::object();
  for (const auto& [name, secs] : report.timings_seconds) timings[name] = secs;
  write_file(base / "timings.json", timings.dump(2) + "\n");
}

}  // namespace detail

/// Raised after the partial report has been assembled (and written).
class ExperimentCapExceeded : public Error {
 public:
  ExperimentCapExceeded(const std::string& message, ExperimentReport partial)
      : Error(ErrorKind::MaxLengthExceeded, message), partial_(std::move(partial)) {}
  const ExperimentReport& partial() const noexcept { return partial_; }

 private:
  ExperimentReport partial_;
};

inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  using Clock = std::chrono::steady_clock;
  auto seconds_since = [](Clock::time_point t) {
    return std::chrono::duration<double>(Clock::now() - t).count();
  };

  ExperimentReport report;
  const Graph g = load_graph(cfg);
  report.graph_source = cfg.family ? to_string(*cfg.family) : *cfg.graph_path;
  report.n = g.node_count();
  report.m = g.edge_count();
  report.source = cfg.source;
  if (cfg.source >= g.node_count()) {
    throw Error(ErrorKind::LabelOutOfRange, "source " + std::to_string(cfg.source) + " outside graph");
  }
  validate_for_walk(g, cfg.lazy);
  report.walk = resolve_walk_config(cfg, g);
  report.diameter = diameter(g);

  auto t0 = Clock::now();
  try {
    report.estimate = estimate_mixing_time(g, cfg.source, report.walk);
  } catch (const MaxLengthExceededError& e) {
    report.status = "max_length_exceeded";
    report.estimate = e.partial();
    report.congestion = summarize(report.estimate.ledger);
    report.timings_seconds.emplace_back("estimate", seconds_since(t0));
    if (cfg.out_dir) detail::write_outputs(report, *cfg.out_dir);
    throw ExperimentCapExceeded(e.what(), std::move(report));
  }
  report.timings_seconds.emplace_back("estimate", seconds_since(t0));
  report.congestion = summarize(report.estimate.ledger);

  if (cfg.oracle) {
    t0 = Clock::now();
    report.agreement = bracket_check(g, cfg.source, report.estimate.estimate, report.walk.epsilon,
                                     report.walk.tokens, report.walk.lazy, report.walk.max_length);
    report.timings_seconds.emplace_back("oracle", seconds_since(t0));
  }
  if (cfg.monotonicity_horizon) {
    t0 = Clock::now();
    report.monotonicity = check_monotonicity(g, cfg.source, *cfg.monotonicity_horizon, cfg.lazy);
    report.timings_seconds.emplace_back("monotonicity", seconds_since(t0));
  }
  if (cfg.spectral) {
    t0 = Clock::now();
    report.spectral = spectral_report(g, cfg.lazy, cfg.source);
    report.timings_seconds.emplace_back("spectral", seconds_since(t0));
  }
  if (cfg.out_dir) detail::write_outputs(report, *cfg.out_dir);
  return report;
}

inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidConfig:
    case ErrorKind::UnknownFlag:
    case ErrorKind::MalformedRational:
    case ErrorKind::MissingGraphSource:
    case ErrorKind::ConflictingGraphSource:
    case ErrorKind::IoError:
      return 2;
    case ErrorKind::DuplicateEdge:
    case ErrorKind::SelfLoop:
    case ErrorKind::Disconnected:
    case ErrorKind::LabelOutOfRange:
    case ErrorKind::InvalidParameters:
    case ErrorKind::DegenerateGraph:
    case ErrorKind::BipartiteGraph:
    case ErrorKind::ParseError:
      return 3;
    case ErrorKind::MaxLengthExceeded:
      return 4;
    default:
      return 1;
  }
}

inline Json error_object(const Error& e) {
  Json err = {{"kind", std::string(to_string(e.kind()))},
              {"message", e.what()},
              {"exit_code", exit_code_for(e.kind())}};
  if (const auto* bip = dynamic_cast<const BipartiteError*>(&e)) err["coloring"] = bip->coloring();
  return Json{{"error", err}};
}

inline std::string summary_line(const ExperimentReport& r) {
  std::ostringstream s;
  s << r.graph_source << " n=" << r.n << " m=" << r.m << " D=" << r.diameter << " source=" << r.source
    << " epsilon=" << to_string(r.walk.epsilon) << " K=" << r.walk.tokens;
  s << "\n  estimate " << r.estimate.estimate << " after " << r.estimate.probes.size() << " probes, "
    << r.estimate.total_rounds << " rounds";
  if (r.agreement) {
    s << "\n  oracle " << r.agreement->exact << ", bracket [" << r.agreement->lower << ", "
      << (r.agreement->upper ? std::to_string(*r.agreement->upper) : std::string("-")) << "] "
      << (r.agreement->ok ? "agree" : "DISAGREE");
  }
  if (r.spectral) {
    s << "\n  lambda2 " << r.spectral->lambda2 << ", abs gap " << r.spectral->abs_gap << ", sandwich "
      << (r.spectral->sandwich_ok ? "ok" : "violated");
  }
  if (r.monotonicity) s << "\n  monotonicity " << (r.monotonicity->ok ? "ok" : "violated");
  s << "\n  congestion: " << r.congestion.max_walk_messages_per_edge << " walk msg/edge/round, "
    << r.congestion.max_message_bits << " max bits";
  return s.str();
}

/// Whole command-line entry point; returns the process exit status.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<ExperimentConfig> batch;
  try {
    batch = parse_batch(args);
  } catch (const Error& e) {
    out << error_object(e).dump() << '\n';
    err << e.what() << '\n';
    return exit_code_for(e.kind());
  }

  struct Outcome {
    int code = 0;
    std::string text;
  };
  std::vector<Outcome> outcomes(batch.size());
  auto run_one = [&](std::size_t i) {
    const auto& cfg = batch[i];
    Outcome& o = outcomes[i];
    try {
      const ExperimentReport report = run_experiment(cfg);
      o.text = summary_line(report);
    } catch (const Error& e) {
      o.code = exit_code_for(e.kind());
      const Json obj = error_object(e);
      o.text = obj.dump();
      if (cfg.out_dir) {
        try {
          std::filesystem::create_directories(*cfg.out_dir);
          detail::write_file(std::filesystem::path(*cfg.out_dir) / "error.json", obj.dump(2) + "\n");
        } catch (const std::exception&) {
        }
      }
    } catch (const std::exception& e) {
      o.code = 1;
      o.text = Json{{"error", {{"kind", "Internal"}, {"message", e.what()}, {"exit_code", 1}}}}.dump();
    }
  };

  const std::size_t jobs = std::min(batch.front().jobs, batch.size());
  if (jobs <= 1) {
    for (std::size_t i = 0; i < batch.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < batch.size(); i = next++) run_one(i);
      });
    }
    for (auto& t : workers) t.join();
  }

  int code = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (!batch[i].name.empty()) out << "[" << batch[i].name << "] ";
    out << outcomes[i].text << '\n';
    if (code == 0) code = outcomes[i].code;
  }
  return code;
}

}  // namespace mixtime
