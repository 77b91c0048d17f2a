#pragma once

// Per-host dependence tests over input x output channel pairs, FDR control,
// graph construction, diffing and export.

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "opstat/stat_engine.hpp"
#include "opstat/trace_ingest.hpp"

namespace opstat {

enum class Method { ks, log_odds, both };

std::string_view to_string(Method m);
/// Accepts "ks", "log-odds" / "log_odds", "both".
Method parse_method(std::string_view s);

struct DiscoveryConfig {
  double horizon = 1.0;
  double alpha = 0.05;
  std::size_t min_samples = 10;
  Method method = Method::ks;
  std::uint64_t seed = 0;
  /// Virtual channel draws per pair; the KS statistic is averaged over them.
  std::size_t replications = 1;
  std::size_t bins = 20;
  double dirichlet_alpha = 1.0;
  /// log 20: the conventional "strong evidence" Bayes factor.
  double log_odds_threshold = std::log(20.0);
};

void validate(const DiscoveryConfig& config);

struct ChannelPairResult {
  ChannelId input;
  ChannelId output;
  std::size_t n_delays = 0;
  std::size_t n_virtual = 0;
  TestOutcome ks;
  double log_odds = 0.0;
  double q_value = 1.0;
  bool dependent = false;
  /// Fewer than min_samples paired delays; the pair was not tested.
  bool insufficient = false;
};

/// Tests every (input, output) channel pair of one host. Pairs are evaluated
/// in parallel; each pair's virtual channel uses a substream keyed by
/// (seed, pair index), so the result does not depend on thread count.
std::vector<ChannelPairResult> local_dependencies(const HostTrace& trace,
                                                  const DiscoveryConfig& config);

namespace reference {
std::vector<ChannelPairResult> local_dependencies(const HostTrace& trace,
                                                  const DiscoveryConfig& config);
}  // namespace reference

struct HostResults {
  std::string host;
  std::vector<ChannelPairResult> results;
};

struct EdgeKey {
  std::string from;
  std::string to;
  std::string service;

  auto operator<=>(const EdgeKey&) const = default;
  bool operator==(const EdgeKey&) const = default;
};

struct Edge {
  EdgeKey key;
  double q_value = 1.0;
  std::size_t n_delays = 0;
  double statistic = 0.0;

  bool operator==(const Edge&) const = default;
};

struct DependencyGraph {
  std::set<std::string> nodes;
  std::map<EdgeKey, Edge> edges;

  /// Adds the edge, keeping the stronger evidence (smaller q, then larger
  /// statistic) when the key already exists.
  void add_edge(const Edge& edge);

  /// Nodes reachable from `from` along directed edges, excluding `from`.
  std::set<std::string> reachable_from(const std::string& from) const;

  bool operator==(const DependencyGraph&) const = default;
};

/// Maps every dependent pair (in,s_in,x) x (out,s_out,y) on host h to
/// edges x -(s_in)-> h and h -(s_out)-> y.
DependencyGraph build_graph(std::span<const HostResults> per_host);

struct GraphDiff {
  std::vector<EdgeKey> added;
  std::vector<EdgeKey> removed;
};

GraphDiff graph_diff(const DependencyGraph& before, const DependencyGraph& after);

enum class GraphFormat { dot, json };

std::string export_graph(const DependencyGraph& g, GraphFormat format);

}  // namespace opstat
