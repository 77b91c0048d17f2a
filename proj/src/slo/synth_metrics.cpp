#include <cstdio>

#include "opstat/error.hpp"
#include "opstat/rng.hpp"
#include "opstat/slo_diagnosis.hpp"

namespace opstat {

namespace {

constexpr std::uint64_t kMetricParams = 1;
constexpr std::uint64_t kStates = 2;
constexpr std::uint64_t kValues = 3;

std::string metric_name(std::size_t j) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "metric_%02zu", j);
  return buf;
}

}  // namespace

SyntheticMetrics synth_metrics(const MetricSynthSpec& spec) {
  if (spec.metrics == 0) throw Error("need at least one metric");
  if (spec.causes * spec.drivers_per_cause > spec.metrics) {
    throw Error("driver blocks do not fit in the metric count");
  }
  if (!(spec.violation_fraction >= 0.0 && spec.violation_fraction < 1.0)) {
    throw Error("violation_fraction must lie in [0, 1)");
  }
  if (spec.causes == 0 && spec.violation_fraction > 0.0) {
    throw Error("violations need at least one cause");
  }
  if (!(spec.persistence >= 0.0 && spec.persistence < 1.0)) {
    throw Error("persistence must lie in [0, 1)");
  }
  if (!(spec.slo_threshold_ms > 0.0)) throw Error("SLO threshold must be positive");

  std::vector<std::string> names;
  for (std::size_t j = 0; j < spec.metrics; ++j) names.push_back(metric_name(j));
  SyntheticMetrics out{MetricDataset(names), {}, {}};

  out.drivers.resize(spec.causes);
  for (std::size_t c = 0; c < spec.causes; ++c) {
    for (std::size_t d = 0; d < spec.drivers_per_cause; ++d) {
      out.drivers[c].push_back(c * spec.drivers_per_cause + d);
    }
  }

  // Per-metric units: location and scale differ so the data is not
  // accidentally standardised.
  Rng params(derive_seed(spec.seed, {kMetricParams}));
  std::vector<double> loc(spec.metrics), scale(spec.metrics);
  for (std::size_t j = 0; j < spec.metrics; ++j) {
    loc[j] = params.uniform(10.0, 100.0);
    scale[j] = params.uniform(1.0, 10.0);
  }

  Rng states(derive_seed(spec.seed, {kStates}));
  Rng values(derive_seed(spec.seed, {kValues}));
  auto draw_state = [&]() -> int {
    if (spec.causes == 0 || states.uniform() >= spec.violation_fraction) return -1;
    return static_cast<int>(states.below(spec.causes));
  };

  std::vector<double> row(spec.metrics);
  int state = -1;
  out.cause.reserve(spec.epochs);
  for (std::size_t i = 0; i < spec.epochs; ++i) {
    if (i == 0 || !states.bernoulli(spec.persistence)) state = draw_state();
    out.cause.push_back(state);
    for (std::size_t j = 0; j < spec.metrics; ++j) row[j] = values.normal();
    if (state >= 0) {
      const auto& drivers = out.drivers[static_cast<std::size_t>(state)];
      for (std::size_t d = 0; d < drivers.size(); ++d) {
        row[drivers[d]] += (d % 2 == 0 ? spec.shift : -spec.shift);
      }
    }
    for (std::size_t j = 0; j < spec.metrics; ++j) row[j] = loc[j] + scale[j] * row[j];
    const double art = state >= 0 ? spec.slo_threshold_ms * values.uniform(1.1, 2.0)
                                  : spec.slo_threshold_ms * values.uniform(0.3, 0.9);
    out.data.add_epoch(static_cast<double>(i) * spec.epoch_seconds, art, row);
  }
  return out;
}

}  // namespace opstat
