#include <algorithm>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "opstat/dep_discovery.hpp"
#include "opstat/error.hpp"

using namespace opstat;

namespace {

ChannelId in(std::string svc, std::string remote) { return {Direction::in, std::move(svc), std::move(remote)}; }
ChannelId out(std::string svc, std::string remote) { return {Direction::out, std::move(svc), std::move(remote)}; }

// Test-only import of the JSON export.
DependencyGraph import_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  DependencyGraph g;
  for (const auto& n : j.at("nodes")) g.nodes.insert(n.get<std::string>());
  for (const auto& e : j.at("edges")) {
    Edge edge{{e.at("from"), e.at("to"), e.at("service")}, e.at("q_value"), e.at("n_delays"), e.at("statistic")};
    g.edges.emplace(edge.key, edge);
  }
  return g;
}

SynthSpec fan_out(std::uint64_t seed, std::size_t servers, std::size_t planted) {
  SynthSpec s;
  s.host = "desktop";
  s.duration = 600;
  s.seed = seed;
  s.channels.push_back({in("http", "gateway"), 1.0});
  for (std::size_t i = 0; i < servers; ++i) {
    s.channels.push_back({out("rpc" + std::to_string(i), "server" + std::to_string(i)), 0.5});
    if (i < planted) s.dependencies.push_back({s.channels[0].id, s.channels.back().id, 0.05, 0.9});
  }
  return s;
}

}  // namespace

TEST_CASE("config validation and method names") {
  CHECK(parse_method("ks") == Method::ks);
  CHECK(parse_method("log-odds") == Method::log_odds);
  CHECK(parse_method("log_odds") == Method::log_odds);
  CHECK(parse_method("both") == Method::both);
  CHECK_THROWS_AS(parse_method("bayes"), Error);
  DiscoveryConfig c;
  c.alpha = 0;
  CHECK_THROWS_AS(validate(c), Error);
  c = {};
  c.horizon = -1;
  CHECK_THROWS_AS(validate(c), Error);
  c = {};
  c.replications = 0;
  CHECK_THROWS_AS(validate(c), Error);
}

TEST_CASE("local_dependencies") {
  CHECK(local_dependencies(HostTrace{}, {}).empty());

  const auto synth = synth_trace(fan_out(3, 4, 1));
  DiscoveryConfig cfg;
  cfg.seed = 5;
  const auto res = local_dependencies(synth.trace, cfg);
  REQUIRE(res.size() == 4);
  for (const auto& r : res) {
    CHECK_FALSE(r.insufficient);
    if (r.output.remote == "server0") CHECK(r.dependent);
    CHECK(r.dependent == (r.q_value <= cfg.alpha));
  }

  SUBCASE("null pairs are flagged at about the nominal rate") {
    std::size_t flagged = 0, nulls = 0, planted = 0;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      DiscoveryConfig c2;
      c2.seed = seed;
      for (const auto& r : local_dependencies(synth_trace(fan_out(seed, 4, 1)).trace, c2)) {
        if (r.output.remote == "server0") {
          planted += r.dependent;
        } else {
          flagged += r.dependent;
          ++nulls;
        }
      }
    }
    CHECK(planted == 40);
    CHECK(static_cast<double>(flagged) / static_cast<double>(nulls) <= 0.1);
  }

  SUBCASE("parallel equals serial reference") {
    DiscoveryConfig c2 = cfg;
    c2.replications = 3;
    c2.method = Method::both;
    const auto par = local_dependencies(synth.trace, c2);
    const auto ser = reference::local_dependencies(synth.trace, c2);
    REQUIRE(par.size() == ser.size());
    for (std::size_t i = 0; i < par.size(); ++i) {
      CHECK(par[i].ks.statistic == ser[i].ks.statistic);
      CHECK(par[i].ks.p_value == ser[i].ks.p_value);
      CHECK(par[i].q_value == ser[i].q_value);
      CHECK(par[i].log_odds == ser[i].log_odds);
      CHECK(par[i].dependent == ser[i].dependent);
    }
  }
  SUBCASE("log-odds method finds the planted pair") {
    DiscoveryConfig c2 = cfg;
    c2.method = Method::log_odds;
    for (const auto& r : local_dependencies(synth.trace, c2)) {
      if (r.output.remote == "server0") CHECK(r.dependent);
      if (r.output.remote != "server0") CHECK(r.log_odds < 20.0);
    }
  }
  SUBCASE("too few delays are not tested") {
    DiscoveryConfig c2 = cfg;
    c2.min_samples = 1000000;
    for (const auto& r : local_dependencies(synth.trace, c2)) {
      CHECK(r.insufficient);
      CHECK_FALSE(r.dependent);
      CHECK(r.q_value == 1.0);
    }
  }
}

TEST_CASE("build_graph") {
  CHECK(build_graph({}).nodes.empty());

  ChannelPairResult r;
  r.input = in("http", "x");
  r.output = out("dns", "y");
  r.dependent = true;
  r.q_value = 0.01;
  r.n_delays = 40;
  r.ks.statistic = 0.3;
  ChannelPairResult miss = r;
  miss.output = out("dns", "z");
  miss.dependent = false;
  const std::vector<HostResults> hosts{{"h", {r, miss}}};
  const auto g = build_graph(hosts);
  CHECK(g.nodes == std::set<std::string>{"h", "x", "y"});
  REQUIRE(g.edges.size() == 2);
  CHECK(g.edges.contains(EdgeKey{"x", "h", "http"}));
  CHECK(g.edges.contains(EdgeKey{"h", "y", "dns"}));

  SUBCASE("duplicate key keeps stronger evidence") {
    DependencyGraph d;
    d.add_edge({{"a", "b", "s"}, 0.04, 10, 0.2});
    d.add_edge({{"a", "b", "s"}, 0.01, 12, 0.1});
    d.add_edge({{"a", "b", "s"}, 0.03, 99, 0.9});
    CHECK(d.edges.at({"a", "b", "s"}).q_value == 0.01);
    d.add_edge({{"a", "b", "s"}, 0.01, 5, 0.5});
    CHECK(d.edges.at({"a", "b", "s"}).statistic == 0.5);
  }
}

TEST_CASE("constellation fan-out from a synthetic desktop") {
  const auto synth = synth_trace(fan_out(11, 8, 5));
  DiscoveryConfig cfg;
  cfg.seed = 2;
  const std::vector<HostResults> hosts{{"desktop", local_dependencies(synth.trace, cfg)}};
  const auto g = build_graph(hosts);
  std::set<std::string> want{"server0", "server1", "server2", "server3", "server4"};
  CHECK(g.reachable_from("desktop") == want);
  CHECK(g.reachable_from("gateway").size() == 6);
}

TEST_CASE("graph_diff") {
  const auto before = build_graph(std::vector<HostResults>{
      {"desktop", local_dependencies(synth_trace(fan_out(1, 3, 2)).trace, {})}});
  CHECK(graph_diff(before, before).added.empty());
  CHECK(graph_diff(before, before).removed.empty());

  auto grown = before;
  grown.add_edge({{"desktop", "extra", "ssh"}, 0.001, 50, 0.4});
  const auto d1 = graph_diff(before, grown);
  CHECK(d1.added == std::vector<EdgeKey>{{"desktop", "extra", "ssh"}});
  CHECK(d1.removed.empty());

  const auto after = build_graph(std::vector<HostResults>{
      {"desktop", local_dependencies(synth_trace(fan_out(1, 3, 1)).trace, {})}});
  const auto d2 = graph_diff(before, after);
  CHECK(d2.removed == std::vector<EdgeKey>{{"desktop", "server1", "rpc1"}});
  CHECK(d2.added.empty());
}

TEST_CASE("export_graph") {
  const DependencyGraph empty;
  CHECK(export_graph(empty, GraphFormat::dot) == "digraph constellation {\n}\n");
  CHECK(import_json(export_graph(empty, GraphFormat::json)) == empty);

  DependencyGraph g;
  g.add_edge({{"h", "y", "dns"}, 0.02, 30, 0.25});
  g.add_edge({{"x", "h", "http"}, 0.001, 31, 0.5});
  g.nodes = {"h", "x", "y"};
  const auto dot = export_graph(g, GraphFormat::dot);
  std::istringstream is(dot);
  std::vector<std::string> edge_lines;
  for (std::string line; std::getline(is, line);) {
    if (line.find("->") != std::string::npos) edge_lines.push_back(line);
  }
  REQUIRE(edge_lines.size() == 2);
  CHECK(std::is_sorted(edge_lines.begin(), edge_lines.end()));
  CHECK(edge_lines[0] == "  \"h\" -> \"y\" [label=\"dns\", q_value=0.02, n_delays=30];");
  CHECK(import_json(export_graph(g, GraphFormat::json)) == g);
  CHECK(export_graph(g, GraphFormat::json) == export_graph(import_json(export_graph(g, GraphFormat::json)), GraphFormat::json));
}
