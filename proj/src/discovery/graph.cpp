#include <algorithm>
#include <deque>
#include <sstream>

#include "json.hpp"
#include "opstat/dep_discovery.hpp"

namespace opstat {

void DependencyGraph::add_edge(const Edge& edge) {
  nodes.insert(edge.key.from);
  nodes.insert(edge.key.to);
  auto [it, inserted] = edges.try_emplace(edge.key, edge);
  if (inserted) return;
  Edge& kept = it->second;
  const bool stronger = edge.q_value < kept.q_value ||
                        (edge.q_value == kept.q_value && edge.statistic > kept.statistic);
  if (stronger) kept = edge;
}

std::set<std::string> DependencyGraph::reachable_from(const std::string& from) const {
  std::map<std::string, std::vector<std::string>> adjacency;
  for (const auto& [key, e] : edges) adjacency[key.from].push_back(key.to);
  std::set<std::string> seen;
  std::deque<std::string> queue{from};
  while (!queue.empty()) {
    const auto node = queue.front();
    queue.pop_front();
    for (const auto& next : adjacency[node]) {
      if (next != from && seen.insert(next).second) queue.push_back(next);
    }
  }
  return seen;
}

DependencyGraph build_graph(std::span<const HostResults> per_host) {
  DependencyGraph g;
  for (const auto& host : per_host) {
    for (const auto& r : host.results) {
      if (!r.dependent) continue;
      g.add_edge({{r.input.remote, host.host, r.input.service},
                  r.q_value, r.n_delays, r.ks.statistic});
      g.add_edge({{host.host, r.output.remote, r.output.service},
                  r.q_value, r.n_delays, r.ks.statistic});
    }
  }
  return g;
}

GraphDiff graph_diff(const DependencyGraph& before, const DependencyGraph& after) {
  GraphDiff diff;
  for (const auto& [key, e] : after.edges) {
    if (!before.edges.contains(key)) diff.added.push_back(key);
  }
  for (const auto& [key, e] : before.edges) {
    if (!after.edges.contains(key)) diff.removed.push_back(key);
  }
  return diff;
}

namespace {

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

std::string to_dot(const DependencyGraph& g) {
  std::ostringstream os;
  os << "digraph constellation {\n";
  for (const auto& n : g.nodes) os << "  " << quoted(n) << ";\n";
  for (const auto& [key, e] : g.edges) {
    os << "  " << quoted(key.from) << " -> " << quoted(key.to) << " [label=" << quoted(key.service)
       << ", q_value=" << format_double(e.q_value) << ", n_delays=" << e.n_delays << "];\n";
  }
  os << "}\n";
  return os.str();
}

std::string to_json(const DependencyGraph& g) {
  nlohmann::json j;
  j["nodes"] = nlohmann::json::array();
  for (const auto& n : g.nodes) j["nodes"].push_back(n);
  j["edges"] = nlohmann::json::array();
  for (const auto& [key, e] : g.edges) {
    j["edges"].push_back({{"from", key.from},
                          {"to", key.to},
                          {"service", key.service},
                          {"q_value", e.q_value},
                          {"n_delays", e.n_delays},
                          {"statistic", e.statistic}});
  }
  return j.dump(2) + "\n";
}

}  // namespace

std::string export_graph(const DependencyGraph& g, GraphFormat format) {
  return format == GraphFormat::dot ? to_dot(g) : to_json(g);
}

}  // namespace opstat
