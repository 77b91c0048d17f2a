#include <algorithm>
#include <cmath>
#include <numeric>

#include "opstat/error.hpp"
#include "opstat/rng.hpp"
#include "opstat/slo_diagnosis.hpp"
#include "opstat/stat_engine.hpp"

namespace opstat {

namespace {

// Rows ordered by (timestamp, metric values, ART). Folds and all sums follow
// this order, so shuffling epochs that share a timestamp changes nothing.
std::vector<std::size_t> canonical_order(const MetricDataset& data) {
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (data.timestamp(a) != data.timestamp(b)) return data.timestamp(a) < data.timestamp(b);
    const auto ra = data.row(a), rb = data.row(b);
    const auto c = std::lexicographical_compare_three_way(ra.begin(), ra.end(), rb.begin(), rb.end());
    if (c != 0) return c < 0;
    return data.art_ms(a) < data.art_ms(b);
  });
  return order;
}

struct FoldPlan {
  std::vector<std::size_t> order;              // canonical order
  std::vector<std::vector<std::size_t>> train;  // per fold, canonical order
  std::vector<std::vector<std::size_t>> test;   // per fold, canonical order
};

FoldPlan make_folds(const MetricDataset& data, std::size_t folds) {
  if (folds < 2) throw Error("need at least 2 folds");
  if (data.size() < folds) throw Error("fewer epochs than folds");
  FoldPlan plan;
  plan.order = canonical_order(data);
  plan.train.resize(folds);
  plan.test.resize(folds);
  const std::size_t n = data.size();
  for (std::size_t rank = 0; rank < n; ++rank) {
    const std::size_t fold = rank * folds / n;
    for (std::size_t f = 0; f < folds; ++f) {
      (f == fold ? plan.test[f] : plan.train[f]).push_back(plan.order[rank]);
    }
  }
  return plan;
}

SloState majority(std::span<const SloState> labels, std::span<const std::size_t> rows) {
  std::size_t v = 0;
  for (std::size_t r : rows) v += labels[r] == SloState::violation;
  return 2 * v > rows.size() ? SloState::violation : SloState::compliant;
}

bool has_both_classes(std::span<const SloState> labels, std::span<const std::size_t> rows) {
  bool v = false, c = false;
  for (std::size_t r : rows) (labels[r] == SloState::violation ? v : c) = true;
  return v && c;
}

void check_selection_inputs(const MetricDataset& data, std::span<const SloState> labels,
                            const SelectionConfig& config) {
  if (config.max_features == 0) throw Error("max_features must be at least 1");
  if (labels.size() != data.size()) throw Error("label count does not match the dataset");
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (!has_both_classes(labels, all)) throw Error("need both classes");
}

double accuracy(std::span<const SloState> pred, std::span<const SloState> truth) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) ok += pred[i] == truth[i];
  return static_cast<double>(ok) / static_cast<double>(truth.size());
}

// Out-of-fold attributions cached per (row, metric). A naive Bayes feature is
// fitted independently of the others, so one pass covers every candidate set.
class OutOfFoldCache {
 public:
  OutOfFoldCache(const MetricDataset& data, std::span<const SloState> labels, std::size_t folds)
      : k_(data.metric_count()),
        attribution_(data.size() * data.metric_count(), 0.0),
        prior_(data.size(), 0.0),
        fallback_(data.size(), SloState::compliant),
        degenerate_(data.size(), false) {
    const auto plan = make_folds(data, folds);
    std::vector<std::size_t> all(k_);
    std::iota(all.begin(), all.end(), std::size_t{0});
    for (std::size_t f = 0; f < folds; ++f) {
      const SloState fb = majority(labels, plan.train[f]);
      const bool ok = has_both_classes(labels, plan.train[f]);
      DiagnosisModel model;
      if (ok) model = fit_classifier(data, labels, all, plan.train[f]);
      for (std::size_t r : plan.test[f]) {
        fallback_[r] = fb;
        degenerate_[r] = !ok;
        if (!ok) continue;
        prior_[r] = model.log_prior_ratio();
        for (std::size_t j = 0; j < k_; ++j) {
          const double x = data.value(r, j);
          attribution_[r * k_ + j] =
              model.violation[j].log_density(x) - model.compliant[j].log_density(x);
        }
      }
    }
  }

  // `features` must be ascending so the sum order matches classify().
  void predict(std::span<const std::size_t> features, std::vector<SloState>& out) const {
    out.resize(prior_.size());
    for (std::size_t r = 0; r < prior_.size(); ++r) {
      if (features.empty() || degenerate_[r]) {
        out[r] = fallback_[r];
        continue;
      }
      double lo = prior_[r];
      for (std::size_t f : features) lo += attribution_[r * k_ + f];
      out[r] = lo > 0.0 ? SloState::violation : SloState::compliant;
    }
  }

 private:
  std::size_t k_;
  std::vector<double> attribution_;
  std::vector<double> prior_;
  std::vector<SloState> fallback_;
  std::vector<bool> degenerate_;
};

std::vector<std::size_t> with_feature(std::span<const std::size_t> set, std::size_t j) {
  std::vector<std::size_t> out(set.begin(), set.end());
  out.insert(std::upper_bound(out.begin(), out.end(), j), j);
  return out;
}

std::vector<std::size_t> select_cached(const MetricDataset& data, std::span<const SloState> labels,
                                       const SelectionConfig& config, bool parallel) {
  check_selection_inputs(data, labels, config);
  const OutOfFoldCache cache(data, labels, config.folds);
  const std::size_t k = data.metric_count();

  std::vector<std::size_t> selected;
  std::vector<SloState> current;
  cache.predict(selected, current);
  std::vector<double> score(k);

  while (selected.size() < config.max_features && selected.size() < k) {
    const auto n_candidates = static_cast<std::int64_t>(k);
#pragma omp parallel if (parallel)
    {
      std::vector<SloState> pred;
#pragma omp for schedule(static)
      for (std::int64_t jj = 0; jj < n_candidates; ++jj) {
        const auto j = static_cast<std::size_t>(jj);
        if (std::binary_search(selected.begin(), selected.end(), j)) {
          score[j] = -1.0;
          continue;
        }
        cache.predict(with_feature(selected, j), pred);
        score[j] = accuracy(pred, labels);
      }
    }
    const auto best = static_cast<std::size_t>(
        std::max_element(score.begin(), score.end()) - score.begin());
    if (score[best] < 0.0) break;
    const auto candidate = with_feature(selected, best);
    std::vector<SloState> pred;
    cache.predict(candidate, pred);
    if (!selected.empty()) {
      const auto cmp = compare_predictions(current, pred, labels, config.alpha);
      if (!(cmp.significant && cmp.better == Better::b)) break;
    }
    selected = candidate;
    current = std::move(pred);
  }
  return selected;
}

}  // namespace

std::vector<SloState> cross_validated_predictions(const MetricDataset& data,
                                                  std::span<const SloState> labels,
                                                  std::span<const std::size_t> feature_set,
                                                  std::size_t folds) {
  if (labels.size() != data.size()) throw Error("label count does not match the dataset");
  const auto plan = make_folds(data, folds);
  std::vector<SloState> out(data.size(), SloState::compliant);
  for (std::size_t f = 0; f < folds; ++f) {
    if (feature_set.empty() || !has_both_classes(labels, plan.train[f])) {
      const SloState fb = majority(labels, plan.train[f]);
      for (std::size_t r : plan.test[f]) out[r] = fb;
      continue;
    }
    const auto model = fit_classifier(data, labels, feature_set, plan.train[f]);
    for (std::size_t r : plan.test[f]) out[r] = classify(model, data.row(r)).state;
  }
  return out;
}

std::vector<std::size_t> select_features(const MetricDataset& data,
                                         std::span<const SloState> labels,
                                         const SelectionConfig& config) {
  return select_cached(data, labels, config, true);
}

namespace reference {

std::vector<std::size_t> select_features(const MetricDataset& data,
                                         std::span<const SloState> labels,
                                         const SelectionConfig& config) {
  check_selection_inputs(data, labels, config);
  const std::size_t k = data.metric_count();
  std::vector<std::size_t> selected;
  auto current = cross_validated_predictions(data, labels, selected, config.folds);
  while (selected.size() < config.max_features && selected.size() < k) {
    double best_score = -1.0;
    std::size_t best = k;
    std::vector<SloState> best_pred;
    for (std::size_t j = 0; j < k; ++j) {
      if (std::binary_search(selected.begin(), selected.end(), j)) continue;
      auto pred = cross_validated_predictions(data, labels, with_feature(selected, j), config.folds);
      const double s = accuracy(pred, labels);
      if (s > best_score) {
        best_score = s;
        best = j;
        best_pred = std::move(pred);
      }
    }
    if (best == k) break;
    if (!selected.empty()) {
      const auto cmp = compare_predictions(current, best_pred, labels, config.alpha);
      if (!(cmp.significant && cmp.better == Better::b)) break;
    }
    selected = with_feature(selected, best);
    current = std::move(best_pred);
  }
  return selected;
}

}  // namespace reference

FeatureScreen screen_features(const MetricDataset& data, std::span<const SloState> labels,
                              const ScreenConfig& config) {
  if (labels.size() != data.size()) throw Error("label count does not match the dataset");
  std::vector<std::size_t> viol, comp;
  for (std::size_t i = 0; i < data.size(); ++i) {
    (labels[i] == SloState::violation ? viol : comp).push_back(i);
  }
  if (viol.empty() || comp.empty()) throw Error("need both classes");
  const std::size_t k = data.metric_count();
  FeatureScreen out;
  out.statistics.resize(k);
  out.p_values.resize(k);
  const auto sk = static_cast<std::int64_t>(k);
#pragma omp parallel for schedule(static)
  for (std::int64_t jj = 0; jj < sk; ++jj) {
    const auto j = static_cast<std::size_t>(jj);
    std::vector<double> a, b;
    a.reserve(viol.size());
    b.reserve(comp.size());
    for (std::size_t r : viol) a.push_back(data.value(r, j));
    for (std::size_t r : comp) b.push_back(data.value(r, j));
    const auto t = ks_test(a, b, config.alpha);
    out.statistics[j] = t.statistic;
    out.p_values[j] = t.p_value;
  }
  const auto bh = bh_select(out.p_values, config.alpha);
  out.q_values = bh.q_values;
  for (std::size_t j : bh.rejected_indices) {
    if (out.statistics[j] >= config.min_effect) out.selected.push_back(j);
  }
  return out;
}

std::vector<double> bootstrap_feature_confidence(const MetricDataset& data,
                                                 std::span<const SloState> labels,
                                                 std::size_t b, std::uint64_t seed,
                                                 const SelectionConfig& config) {
  if (b == 0) throw Error("bootstrap needs at least one resample");
  check_selection_inputs(data, labels, config);
  const std::size_t n = data.size();
  const std::size_t k = data.metric_count();
  std::vector<std::vector<std::size_t>> picks(b);
  const auto resamples = static_cast<std::int64_t>(b);

#pragma omp parallel for schedule(dynamic)
  for (std::int64_t rr = 0; rr < resamples; ++rr) {
    const auto r = static_cast<std::uint64_t>(rr);
    std::vector<std::size_t> rows(n);
    std::vector<SloState> sub_labels(n);
    for (std::uint64_t attempt = 0;; ++attempt) {
      Rng rng(derive_seed(seed, {r, attempt}));
      for (auto& row : rows) row = static_cast<std::size_t>(rng.below(n));
      std::sort(rows.begin(), rows.end());
      bool v = false, c = false;
      for (std::size_t i = 0; i < n; ++i) {
        sub_labels[i] = labels[rows[i]];
        (sub_labels[i] == SloState::violation ? v : c) = true;
      }
      if (v && c) break;
      // A resample missing a class is redrawn; the original data has both,
      // so this terminates.
    }
    const auto sub = data.subset(rows);
    picks[static_cast<std::size_t>(rr)] = select_cached(sub, sub_labels, config, false);
  }

  std::vector<double> freq(k, 0.0);
  for (const auto& p : picks) {
    for (std::size_t j : p) freq[j] += 1.0;
  }
  for (auto& f : freq) f /= static_cast<double>(b);
  return freq;
}

}  // namespace opstat
