#pragma once

// SLO compliance diagnosis: labelling, a Gaussian naive Bayes classifier
// over server metrics, per-epoch metric signatures, model comparison,
// feature selection, signature clustering and retrieval, windowed
// ensembles, and bootstrap feature confidence.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace opstat {

enum class SloState { compliant, violation };

std::string_view to_string(SloState s);

/// Epoch-stamped metric rows stored row-major.
class MetricDataset {
 public:
  MetricDataset() = default;
  explicit MetricDataset(std::vector<std::string> metric_names);

  /// Throws when the row length is wrong, a value is not finite, or the
  /// timestamp goes backwards.
  void add_epoch(double ts, double art_ms, std::span<const double> metrics);

  std::size_t size() const noexcept { return timestamps_.size(); }
  std::size_t metric_count() const noexcept { return names_.size(); }
  bool empty() const noexcept { return timestamps_.empty(); }

  const std::vector<std::string>& metric_names() const noexcept { return names_; }
  double timestamp(std::size_t i) const { return timestamps_[i]; }
  double art_ms(std::size_t i) const { return art_[i]; }
  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * names_.size(), names_.size()};
  }
  double value(std::size_t i, std::size_t metric) const { return values_[i * names_.size() + metric]; }

  /// Rows in the given order; the order must keep timestamps non-decreasing.
  MetricDataset subset(std::span<const std::size_t> rows) const;

 private:
  std::vector<std::string> names_;
  std::vector<double> timestamps_;
  std::vector<double> art_;
  std::vector<double> values_;
};

/// Header `ts,art_ms,<metric_1>,...,<metric_k>` then numeric rows.
MetricDataset parse_metrics(std::istream& in);
MetricDataset parse_metrics_file(const std::string& path);
std::string serialize_metrics(const MetricDataset& data);

struct SloConfig {
  double threshold_ms = 0.0;
};

/// violation iff ART > threshold (strict).
std::vector<SloState> label_slo(const MetricDataset& data, const SloConfig& config);

inline constexpr double kVarianceFloor = 1e-6;

struct Gaussian {
  double mean = 0.0;
  double variance = 1.0;

  double log_density(double x) const;
};

struct DiagnosisModel {
  std::vector<std::string> metric_names;  // all metrics of the training data
  std::vector<std::size_t> feature_set;   // ascending metric indices
  double prior_violation = 0.5;
  double prior_compliant = 0.5;
  std::vector<Gaussian> violation;  // parallel to feature_set
  std::vector<Gaussian> compliant;  // parallel to feature_set

  double log_prior_ratio() const;
};

/// Gaussian naive Bayes with maximum-likelihood moments, variance floor and
/// empirical class prior. Needs both classes and a non-empty feature set.
DiagnosisModel fit_classifier(const MetricDataset& data, std::span<const SloState> labels,
                              std::span<const std::size_t> feature_set);

/// Same as fit_classifier restricted to the listed rows.
DiagnosisModel fit_classifier(const MetricDataset& data, std::span<const SloState> labels,
                              std::span<const std::size_t> feature_set,
                              std::span<const std::size_t> rows);

struct Classification {
  SloState state = SloState::compliant;
  double log_odds = 0.0;
  double posterior_violation = 0.5;
  double posterior_compliant = 0.5;
};

Classification classify(const DiagnosisModel& model, std::span<const double> metrics);

/// Per-metric log-likelihood contributions toward violation. Vectors span
/// every metric of the model; metrics outside the feature set carry 0.
struct Signature {
  double ts = 0.0;
  std::vector<double> attributions;
  std::vector<bool> abnormal;  // attribution > 0

  std::vector<std::size_t> abnormal_metrics() const;
};

Signature signature(const DiagnosisModel& model, std::span<const double> metrics, double ts = 0.0);

enum class Better { a, b, neither };

struct ModelComparison {
  Better better = Better::neither;
  bool significant = false;
  double p_value = 1.0;
  std::size_t a_wrong_b_right = 0;  // n01
  std::size_t a_right_b_wrong = 0;  // n10
};

/// Exact McNemar test on two prediction vectors scored against the truth.
ModelComparison compare_predictions(std::span<const SloState> pred_a,
                                    std::span<const SloState> pred_b,
                                    std::span<const SloState> truth, double alpha);

ModelComparison accuracy_significant(const DiagnosisModel& a, const DiagnosisModel& b,
                                     const MetricDataset& eval, std::span<const SloState> labels,
                                     double alpha);

struct SelectionConfig {
  double alpha = 0.05;
  std::size_t max_features = 10;
  std::size_t folds = 5;
};

/// Out-of-fold predictions over time-contiguous folds. An empty feature set
/// predicts the training fold's majority class.
std::vector<SloState> cross_validated_predictions(const MetricDataset& data,
                                                  std::span<const SloState> labels,
                                                  std::span<const std::size_t> feature_set,
                                                  std::size_t folds);

/// Greedy forward selection on cross-validated accuracy, gated by McNemar
/// significance against the current set. Ties go to the lowest metric index.
std::vector<std::size_t> select_features(const MetricDataset& data,
                                         std::span<const SloState> labels,
                                         const SelectionConfig& config);

namespace reference {
/// Refits a full model per fold and candidate; slow, used to check the
/// cached-attribution kernel.
std::vector<std::size_t> select_features(const MetricDataset& data,
                                         std::span<const SloState> labels,
                                         const SelectionConfig& config);
}  // namespace reference

struct ScreenConfig {
  double alpha = 0.01;
  /// Minimum KS distance between the class-conditional distributions. At
  /// large sample sizes tiny shifts test significant; this gate drops them.
  double min_effect = 0.1;
};

struct FeatureScreen {
  std::vector<double> statistics;  // KS distance per metric
  std::vector<double> p_values;
  std::vector<double> q_values;
  std::vector<std::size_t> selected;  // ascending
};

/// Per-metric two-sample KS test of violation against compliant values,
/// BH-controlled across metrics and gated on effect size.
FeatureScreen screen_features(const MetricDataset& data, std::span<const SloState> labels,
                              const ScreenConfig& config = {});

/// Fraction of b bootstrap resamples whose selected set contains each metric.
std::vector<double> bootstrap_feature_confidence(const MetricDataset& data,
                                                 std::span<const SloState> labels,
                                                 std::size_t b, std::uint64_t seed,
                                                 const SelectionConfig& config = {});

struct Clustering {
  std::vector<std::size_t> assignment;  // cluster ids numbered by first appearance
  std::vector<std::vector<double>> centroids;
  double inertia = 0.0;
};

struct ClusterConfig {
  std::size_t max_iterations = 100;
  std::size_t restarts = 8;
};

/// k-means with k-means++ seeding over attribution vectors; the restart with
/// the lowest inertia wins.
Clustering cluster_signatures(std::span<const Signature> signatures, std::size_t k,
                              std::uint64_t seed, const ClusterConfig& config = {});

struct CatalogEntry {
  Signature signature;
  std::string annotation;
};

using SignatureCatalog = std::vector<CatalogEntry>;

struct RetrievalHit {
  std::size_t index = 0;
  double distance = 0.0;
};

/// Catalog entries by ascending L2 distance; equal distances keep insertion order.
std::vector<RetrievalHit> retrieve(const Signature& query, const SignatureCatalog& catalog,
                                   std::size_t top_k);

/// One JSON object per line: {ts, attributions, abnormal, annotation}.
std::string serialize_catalog(const SignatureCatalog& catalog);
SignatureCatalog parse_catalog(std::istream& in);

struct EnsembleMember {
  std::size_t first_epoch = 0;
  std::size_t end_epoch = 0;  // exclusive
  DiagnosisModel model;
};

struct Ensemble {
  std::vector<EnsembleMember> members;
};

/// One model per contiguous window of window_length epochs. Windows missing
/// a class are skipped; throws when none remain.
Ensemble ensemble_fit(const MetricDataset& data, std::span<const SloState> labels,
                      std::size_t window_length, std::span<const std::size_t> feature_set);

double brier_score(const DiagnosisModel& model, const MetricDataset& data,
                   std::span<const SloState> labels);

struct EnsembleChoice {
  std::size_t member = 0;
  double brier = 0.0;
  Classification result;
};

/// Delegates to the member with the lowest Brier score on the recent
/// labelled epochs.
EnsembleChoice ensemble_classify(const Ensemble& ensemble, const MetricDataset& recent,
                                 std::span<const SloState> recent_labels,
                                 std::span<const double> sample);

struct MetricSynthSpec {
  std::size_t epochs = 10000;
  std::size_t metrics = 30;
  std::size_t causes = 3;
  std::size_t drivers_per_cause = 3;
  double violation_fraction = 0.3;
  /// Driver displacement during a violation, in metric standard deviations.
  double shift = 5.0;
  /// Probability that an epoch keeps the previous epoch's state.
  double persistence = 0.8;
  double slo_threshold_ms = 200.0;
  double epoch_seconds = 60.0;
  std::uint64_t seed = 0;
};

struct SyntheticMetrics {
  MetricDataset data;
  std::vector<int> cause;                          // -1 for compliant epochs
  std::vector<std::vector<std::size_t>> drivers;   // per cause, ascending
};

/// Gaussian metrics with planted violation causes; each cause displaces a
/// disjoint block of driver metrics and pushes ART above the threshold.
SyntheticMetrics synth_metrics(const MetricSynthSpec& spec);

}  // namespace opstat
