#include <cmath>
#include <string>

#include "opstat/error.hpp"
#include "opstat/stat_engine.hpp"

namespace opstat {

namespace {

void check_model(const LogOddsModel& model) {
  if (model.bins < 2) throw Error("log-odds model needs at least 2 bins");
  if (!(model.horizon > 0.0)) throw Error("log-odds model horizon must be positive");
  if (!(model.dirichlet_alpha > 0.0)) throw Error("log-odds model prior must be positive");
}

}  // namespace

double dirichlet_multinomial_log_marginal(std::span<const std::size_t> counts, double alpha) {
  const double k = static_cast<double>(counts.size());
  double n = 0.0;
  double sum = 0.0;
  for (std::size_t c : counts) {
    n += static_cast<double>(c);
    sum += std::lgamma(static_cast<double>(c) + alpha) - std::lgamma(alpha);
  }
  return std::lgamma(k * alpha) - std::lgamma(n + k * alpha) + sum;
}

std::vector<std::size_t> bin_delays(std::span<const double> delays, const LogOddsModel& model) {
  check_model(model);
  std::vector<std::size_t> counts(model.bins, 0);
  const double width = model.horizon / static_cast<double>(model.bins);
  for (double d : delays) {
    if (!(d >= 0.0 && d <= model.horizon)) {
      throw Error("delay " + std::to_string(d) + " outside [0, horizon]");
    }
    auto bin = static_cast<std::size_t>(d / width);
    if (bin >= model.bins) bin = model.bins - 1;
    ++counts[bin];
  }
  return counts;
}

double log_odds_dependence(std::span<const double> delays, const LogOddsModel& model) {
  const auto counts = bin_delays(delays, model);
  const double n = static_cast<double>(delays.size());
  // Uniform delays put mass 1/K on every bin, so log P(X | H0) = -n log K.
  return dirichlet_multinomial_log_marginal(counts, model.dirichlet_alpha) +
         n * std::log(static_cast<double>(model.bins));
}

double log_odds_two_sample(std::span<const double> a, std::span<const double> b,
                           const LogOddsModel& model) {
  const auto ca = bin_delays(a, model);
  const auto cb = bin_delays(b, model);
  std::vector<std::size_t> pooled(ca.size());
  for (std::size_t i = 0; i < ca.size(); ++i) pooled[i] = ca[i] + cb[i];
  const double alpha = model.dirichlet_alpha;
  return dirichlet_multinomial_log_marginal(ca, alpha) +
         dirichlet_multinomial_log_marginal(cb, alpha) -
         dirichlet_multinomial_log_marginal(pooled, alpha);
}

}  // namespace opstat
