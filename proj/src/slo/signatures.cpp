#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>

#include "../text_util.hpp"
#include "json.hpp"
#include "opstat/error.hpp"
#include "opstat/rng.hpp"
#include "opstat/slo_diagnosis.hpp"

namespace opstat {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("signature lengths differ");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

struct KMeansRun {
  std::vector<std::size_t> assignment;
  std::vector<std::vector<double>> centroids;
  double inertia = 0.0;
};

std::vector<std::vector<double>> seed_plus_plus(std::span<const Signature> points, std::size_t k,
                                                Rng& rng) {
  const std::size_t n = points.size();
  std::vector<std::vector<double>> centroids;
  centroids.push_back(points[rng.below(n)].attributions);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  while (centroids.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(points[i].attributions, centroids.back()));
      total += d2[i];
    }
    std::size_t pick = 0;
    if (total <= 0.0) {
      pick = rng.below(n);
    } else {
      double target = rng.uniform() * total;
      for (pick = 0; pick + 1 < n; ++pick) {
        target -= d2[pick];
        if (target < 0.0) break;
      }
    }
    centroids.push_back(points[pick].attributions);
  }
  return centroids;
}

KMeansRun lloyd(std::span<const Signature> points, std::vector<std::vector<double>> centroids,
                std::size_t max_iterations) {
  const std::size_t n = points.size();
  const std::size_t k = centroids.size();
  const std::size_t dim = centroids.front().size();
  KMeansRun run;
  run.assignment.assign(n, 0);
  std::vector<double> best_d(n, 0.0);

  for (std::size_t iter = 0; iter < max_iterations; ++iter) {
    bool changed = false;
    const auto sn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static) reduction(|| : changed)
    for (std::int64_t ii = 0; ii < sn; ++ii) {
      const auto i = static_cast<std::size_t>(ii);
      std::size_t best = 0;
      double bd = squared_distance(points[i].attributions, centroids[0]);
      for (std::size_t c = 1; c < k; ++c) {
        const double d = squared_distance(points[i].attributions, centroids[c]);
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      best_d[i] = bd;
      if (iter == 0 || run.assignment[i] != best) changed = true;
      run.assignment[i] = best;
    }
    if (!changed) break;

    std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& a = points[i].attributions;
      for (std::size_t d = 0; d < dim; ++d) sums[run.assignment[i]][d] += a[d];
      ++counts[run.assignment[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        // Empty cluster: move it onto the point worst served by its centre.
        const auto far = static_cast<std::size_t>(
            std::max_element(best_d.begin(), best_d.end()) - best_d.begin());
        centroids[c] = points[far].attributions;
        best_d[far] = 0.0;
        continue;
      }
      for (std::size_t d = 0; d < dim; ++d) {
        centroids[c][d] = sums[c][d] / static_cast<double>(counts[c]);
      }
    }
  }

  run.inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    run.inertia += squared_distance(points[i].attributions, centroids[run.assignment[i]]);
  }
  run.centroids = std::move(centroids);
  return run;
}

}  // namespace

Clustering cluster_signatures(std::span<const Signature> signatures, std::size_t k,
                              std::uint64_t seed, const ClusterConfig& config) {
  if (k == 0) throw Error("k must be at least 1");
  if (signatures.size() < k) throw Error("fewer signatures than clusters");
  const std::size_t dim = signatures.front().attributions.size();
  for (const auto& s : signatures) {
    if (s.attributions.size() != dim) throw Error("signature lengths differ");
  }

  KMeansRun best;
  best.inertia = std::numeric_limits<double>::infinity();
  const std::size_t restarts = std::max<std::size_t>(1, config.restarts);
  for (std::size_t r = 0; r < restarts; ++r) {
    Rng rng(derive_seed(seed, {r}));
    auto run = lloyd(signatures, seed_plus_plus(signatures, k, rng), config.max_iterations);
    if (run.inertia < best.inertia) best = std::move(run);
  }

  // Renumber clusters by first appearance so ids are stable across restarts.
  std::vector<std::size_t> remap(k, k);
  std::size_t next = 0;
  for (std::size_t a : best.assignment) {
    if (remap[a] == k) remap[a] = next++;
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (remap[c] == k) remap[c] = next++;
  }
  Clustering out;
  out.inertia = best.inertia;
  out.assignment.reserve(best.assignment.size());
  for (std::size_t a : best.assignment) out.assignment.push_back(remap[a]);
  out.centroids.resize(k);
  for (std::size_t c = 0; c < k; ++c) out.centroids[remap[c]] = best.centroids[c];
  return out;
}

std::vector<RetrievalHit> retrieve(const Signature& query, const SignatureCatalog& catalog,
                                   std::size_t top_k) {
  if (catalog.empty()) throw Error("empty catalog");
  if (top_k == 0) throw Error("top_k must be at least 1");
  std::vector<RetrievalHit> hits;
  hits.reserve(catalog.size());
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    hits.push_back({i, std::sqrt(squared_distance(query.attributions,
                                                  catalog[i].signature.attributions))});
  }
  std::stable_sort(hits.begin(), hits.end(), [](const RetrievalHit& a, const RetrievalHit& b) {
    return a.distance < b.distance;
  });
  if (hits.size() > top_k) hits.resize(top_k);
  return hits;
}

std::string serialize_catalog(const SignatureCatalog& catalog) {
  std::string out;
  for (const auto& e : catalog) {
    nlohmann::json j;
    j["ts"] = e.signature.ts;
    j["attributions"] = e.signature.attributions;
    j["abnormal"] = e.signature.abnormal;
    j["annotation"] = e.annotation;
    out += j.dump();
    out += '\n';
  }
  return out;
}

SignatureCatalog parse_catalog(std::istream& in) {
  SignatureCatalog catalog;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::skippable(line)) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(line_no, "record", e.what());
    }
    CatalogEntry entry;
    try {
      entry.signature.ts = j.at("ts").get<double>();
      entry.signature.attributions = j.at("attributions").get<std::vector<double>>();
      entry.signature.abnormal = j.at("abnormal").get<std::vector<bool>>();
      entry.annotation = j.at("annotation").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, "record", e.what());
    }
    if (entry.signature.abnormal.size() != entry.signature.attributions.size()) {
      throw ParseError(line_no, "abnormal", "length differs from attributions");
    }
    if (!catalog.empty() &&
        entry.signature.attributions.size() != catalog.front().signature.attributions.size()) {
      throw ParseError(line_no, "attributions", "length differs from earlier entries");
    }
    catalog.push_back(std::move(entry));
  }
  return catalog;
}

}  // namespace opstat
