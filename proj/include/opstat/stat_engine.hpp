#pragma once

// Hypothesis-testing primitives shared by dependency discovery, SLO
// diagnosis and the repair-log miner.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace opstat {

/// Right-continuous empirical distribution function over a finite sample.
class EmpiricalCdf {
 public:
  /// Throws opstat::Error("no samples") on empty input and on non-finite values.
  explicit EmpiricalCdf(std::span<const double> samples);

  /// F(x) = #{samples <= x} / n.
  double operator()(double x) const noexcept;

  std::size_t size() const noexcept { return sorted_.size(); }
  std::span<const double> samples() const noexcept { return sorted_; }

 private:
  std::vector<double> sorted_;
};

EmpiricalCdf empirical_cdf(std::span<const double> samples);

struct TestOutcome {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  bool significant = false;
  std::optional<bool> practically_significant;
};

/// Two-sample Kolmogorov-Smirnov distance, evaluated exactly over the union
/// of sample points.
double ks_statistic(const EmpiricalCdf& a, const EmpiricalCdf& b);

/// Asymptotic two-sample p-value Q(d * sqrt(nm/(n+m))), clamped to [0, 1].
double ks_p_value(double d, std::size_t n, std::size_t m);

/// Runs ks_statistic + ks_p_value and fills a TestOutcome at level alpha.
TestOutcome ks_test(std::span<const double> a, std::span<const double> b, double alpha);

/// Permutation p-value for the KS statistic:
/// (1 + #{permuted D >= observed D}) / (n_perm + 1).
/// Permutation i draws from a substream keyed by (seed, i), so the result is
/// identical for any thread count.
double permutation_p_value(std::span<const double> a, std::span<const double> b,
                           std::size_t n_perm, std::uint64_t seed);

namespace reference {
/// Single-threaded permutation_p_value. Kept as the check for the OpenMP path.
double permutation_p_value(std::span<const double> a, std::span<const double> b,
                           std::size_t n_perm, std::uint64_t seed);
}  // namespace reference

struct RejectionSet {
  std::size_t m = 0;
  double alpha = 0.0;
  /// Largest p-value still rejected; 0 when nothing is rejected.
  double threshold = 0.0;
  std::vector<std::size_t> rejected_indices;  // ascending
  std::vector<double> q_values;               // same order as the input

  bool rejected(std::size_t i) const;
};

/// Benjamini-Hochberg step-up selection at FDR level alpha.
RejectionSet bh_select(std::span<const double> p_values, double alpha);

/// Expected number of falsely rejected nulls among m all-null tests.
double expected_false_positives(std::size_t m, double p_threshold);

/// Expected share of the rejections that are false when every test is null:
/// expected_false_positives / rejections, capped at 1. Zero rejections give 0.
double expected_false_proportion(std::size_t m, double p_threshold, std::size_t rejections);

/// z-test for a difference of means with known, shared sigma, plus an
/// effect-size gate: practically_significant requires |mean gap| >= practical_delta.
TestOutcome mean_difference_test(std::span<const double> a, std::span<const double> b,
                                 double sigma, double alpha, double practical_delta);

/// -e p ln p for p < 1/e, else 1. A lower bound on the Bayes factor in favour
/// of the null; it is not a posterior probability.
double calibrate_p_value(double p);

/// Exact two-sided McNemar test on discordant counts.
double mcnemar_exact_p(std::size_t n01, std::size_t n10);

struct LogOddsModel {
  double horizon = 1.0;
  std::size_t bins = 20;
  double dirichlet_alpha = 1.0;
};

/// Log marginal likelihood of bin counts under a symmetric Dirichlet prior,
/// for the ordered sequence (multinomial coefficient omitted).
double dirichlet_multinomial_log_marginal(std::span<const std::size_t> counts, double alpha);

/// Bins delays in [0, horizon] into K equal-width bins (the last bin is
/// closed on the right).
std::vector<std::size_t> bin_delays(std::span<const double> delays, const LogOddsModel& model);

/// log Bayes factor of a Dirichlet-multinomial delay model against the
/// uniform-delay model. Positive values favour dependence.
double log_odds_dependence(std::span<const double> delays, const LogOddsModel& model);

/// log Bayes factor that two delay samples follow different binned
/// distributions versus one shared distribution. Positive values favour a
/// difference.
double log_odds_two_sample(std::span<const double> a, std::span<const double> b,
                           const LogOddsModel& model);

}  // namespace opstat
