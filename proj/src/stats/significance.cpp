#include <algorithm>
#include <cmath>
#include <numbers>

#include "opstat/error.hpp"
#include "opstat/stat_engine.hpp"

namespace opstat {

namespace {

double mean_of(std::span<const double> xs) {
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

}  // namespace

TestOutcome mean_difference_test(std::span<const double> a, std::span<const double> b,
                                 double sigma, double alpha, double practical_delta) {
  if (!(sigma > 0.0)) throw Error("mean_difference_test: sigma must be positive");
  if (a.empty() || b.empty()) throw Error("no samples");

  const double gap = mean_of(a) - mean_of(b);
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double z = gap / (sigma * std::sqrt(1.0 / na + 1.0 / nb));

  TestOutcome out;
  out.statistic = z;
  out.n_a = a.size();
  out.n_b = b.size();
  out.p_value = std::clamp(std::erfc(std::abs(z) / std::numbers::sqrt2), 0.0, 1.0);
  out.significant = out.p_value <= alpha;
  out.practically_significant = out.significant && std::abs(gap) >= practical_delta;
  return out;
}

double calibrate_p_value(double p) {
  if (!(p > 0.0)) throw Error("calibrate_p_value: p must be positive");
  if (p > 1.0) throw Error("calibrate_p_value: p must not exceed 1");
  if (p >= 1.0 / std::numbers::e) return 1.0;
  return std::min(1.0, -std::numbers::e * p * std::log(p));
}

double mcnemar_exact_p(std::size_t n01, std::size_t n10) {
  const std::size_t n = n01 + n10;
  if (n == 0) return 1.0;
  const std::size_t k = std::min(n01, n10);
  // P(X <= k) for X ~ Binomial(n, 1/2), summed in log space.
  const double log_half_n = static_cast<double>(n) * std::log(0.5);
  const double lg_n1 = std::lgamma(static_cast<double>(n) + 1.0);
  double tail = 0.0;
  for (std::size_t i = 0; i <= k; ++i) {
    const double log_choose = lg_n1 - std::lgamma(static_cast<double>(i) + 1.0) -
                              std::lgamma(static_cast<double>(n - i) + 1.0);
    tail += std::exp(log_choose + log_half_n);
  }
  return std::min(1.0, 2.0 * tail);
}

}  // namespace opstat
