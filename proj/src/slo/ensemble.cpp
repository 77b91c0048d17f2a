#include <algorithm>
#include <limits>
#include <numeric>

#include "opstat/error.hpp"
#include "opstat/slo_diagnosis.hpp"

namespace opstat {

Ensemble ensemble_fit(const MetricDataset& data, std::span<const SloState> labels,
                      std::size_t window_length, std::span<const std::size_t> feature_set) {
  if (window_length == 0) throw Error("window_length must be positive");
  if (labels.size() != data.size()) throw Error("label count does not match the dataset");
  Ensemble ensemble;
  for (std::size_t first = 0; first < data.size(); first += window_length) {
    const std::size_t end = std::min(first + window_length, data.size());
    std::vector<std::size_t> rows(end - first);
    std::iota(rows.begin(), rows.end(), first);
    const bool both = std::any_of(rows.begin(), rows.end(),
                                  [&](std::size_t r) { return labels[r] == SloState::violation; }) &&
                      std::any_of(rows.begin(), rows.end(),
                                  [&](std::size_t r) { return labels[r] == SloState::compliant; });
    if (!both) continue;
    ensemble.members.push_back({first, end, fit_classifier(data, labels, feature_set, rows)});
  }
  if (ensemble.members.empty()) throw Error("no window contains both classes");
  return ensemble;
}

EnsembleChoice ensemble_classify(const Ensemble& ensemble, const MetricDataset& recent,
                                 std::span<const SloState> recent_labels,
                                 std::span<const double> sample) {
  if (ensemble.members.empty()) throw Error("empty ensemble");
  if (recent_labels.size() != recent.size()) throw Error("label count does not match the dataset");
  EnsembleChoice choice;
  if (recent.empty()) {
    // Nothing to score against: fall back to the most recent member.
    choice.member = ensemble.members.size() - 1;
  } else {
    choice.brier = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < ensemble.members.size(); ++m) {
      const double b = brier_score(ensemble.members[m].model, recent, recent_labels);
      if (b < choice.brier) {
        choice.brier = b;
        choice.member = m;
      }
    }
  }
  choice.result = classify(ensemble.members[choice.member].model, sample);
  return choice;
}

}  // namespace opstat
