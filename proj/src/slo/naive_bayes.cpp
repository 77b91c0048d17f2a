#include <algorithm>
#include <cmath>
#include <numbers>

#include "opstat/error.hpp"
#include "opstat/slo_diagnosis.hpp"
#include "opstat/stat_engine.hpp"

namespace opstat {

double Gaussian::log_density(double x) const {
  const double d = x - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * variance) + d * d / variance);
}

double DiagnosisModel::log_prior_ratio() const {
  return std::log(prior_violation) - std::log(prior_compliant);
}

namespace {

Gaussian fit_gaussian(const MetricDataset& data, std::size_t metric,
                      std::span<const std::size_t> rows) {
  double sum = 0.0;
  for (std::size_t r : rows) sum += data.value(r, metric);
  const double n = static_cast<double>(rows.size());
  const double mean = sum / n;
  double ss = 0.0;
  for (std::size_t r : rows) {
    const double d = data.value(r, metric) - mean;
    ss += d * d;
  }
  return {mean, std::max(ss / n, kVarianceFloor)};
}

void check_metrics(const DiagnosisModel& model, std::span<const double> metrics) {
  for (std::size_t f : model.feature_set) {
    if (f >= metrics.size() || !std::isfinite(metrics[f])) {
      const std::string name =
          f < model.metric_names.size() ? model.metric_names[f] : std::to_string(f);
      throw Error("missing value for metric '" + name + "'");
    }
  }
}

}  // namespace

DiagnosisModel fit_classifier(const MetricDataset& data, std::span<const SloState> labels,
                              std::span<const std::size_t> feature_set,
                              std::span<const std::size_t> rows) {
  if (labels.size() != data.size()) throw Error("label count does not match the dataset");
  if (feature_set.empty()) throw Error("empty feature set");
  for (std::size_t f : feature_set) {
    if (f >= data.metric_count()) throw Error("feature index out of range");
  }
  std::vector<std::size_t> viol, comp;
  for (std::size_t r : rows) (labels[r] == SloState::violation ? viol : comp).push_back(r);
  if (viol.empty() || comp.empty()) throw Error("need both classes");

  DiagnosisModel model;
  model.metric_names = data.metric_names();
  model.feature_set.assign(feature_set.begin(), feature_set.end());
  std::sort(model.feature_set.begin(), model.feature_set.end());
  model.feature_set.erase(std::unique(model.feature_set.begin(), model.feature_set.end()),
                          model.feature_set.end());
  const double total = static_cast<double>(viol.size() + comp.size());
  model.prior_violation = static_cast<double>(viol.size()) / total;
  model.prior_compliant = static_cast<double>(comp.size()) / total;
  for (std::size_t f : model.feature_set) {
    model.violation.push_back(fit_gaussian(data, f, viol));
    model.compliant.push_back(fit_gaussian(data, f, comp));
  }
  return model;
}

DiagnosisModel fit_classifier(const MetricDataset& data, std::span<const SloState> labels,
                              std::span<const std::size_t> feature_set) {
  std::vector<std::size_t> rows(data.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return fit_classifier(data, labels, feature_set, rows);
}

Signature signature(const DiagnosisModel& model, std::span<const double> metrics, double ts) {
  check_metrics(model, metrics);
  Signature sig;
  sig.ts = ts;
  sig.attributions.assign(model.metric_names.size(), 0.0);
  sig.abnormal.assign(model.metric_names.size(), false);
  for (std::size_t i = 0; i < model.feature_set.size(); ++i) {
    const std::size_t f = model.feature_set[i];
    const double a = model.violation[i].log_density(metrics[f]) -
                     model.compliant[i].log_density(metrics[f]);
    sig.attributions[f] = a;
    sig.abnormal[f] = a > 0.0;
  }
  return sig;
}

std::vector<std::size_t> Signature::abnormal_metrics() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < abnormal.size(); ++i) {
    if (abnormal[i]) out.push_back(i);
  }
  return out;
}

Classification classify(const DiagnosisModel& model, std::span<const double> metrics) {
  check_metrics(model, metrics);
  double lo = model.log_prior_ratio();
  for (std::size_t i = 0; i < model.feature_set.size(); ++i) {
    const double x = metrics[model.feature_set[i]];
    lo += model.violation[i].log_density(x) - model.compliant[i].log_density(x);
  }
  Classification c;
  c.log_odds = lo;
  c.posterior_violation = 1.0 / (1.0 + std::exp(-lo));
  c.posterior_compliant = 1.0 / (1.0 + std::exp(lo));
  c.state = lo > 0.0 ? SloState::violation : SloState::compliant;
  return c;
}

ModelComparison compare_predictions(std::span<const SloState> pred_a,
                                    std::span<const SloState> pred_b,
                                    std::span<const SloState> truth, double alpha) {
  if (truth.empty()) throw Error("empty evaluation set");
  if (pred_a.size() != truth.size() || pred_b.size() != truth.size()) {
    throw Error("prediction and label counts differ");
  }
  ModelComparison out;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool a_ok = pred_a[i] == truth[i];
    const bool b_ok = pred_b[i] == truth[i];
    if (!a_ok && b_ok) ++out.a_wrong_b_right;
    if (a_ok && !b_ok) ++out.a_right_b_wrong;
  }
  out.p_value = mcnemar_exact_p(out.a_wrong_b_right, out.a_right_b_wrong);
  out.significant = out.p_value <= alpha;
  if (out.a_wrong_b_right > out.a_right_b_wrong) out.better = Better::b;
  else if (out.a_right_b_wrong > out.a_wrong_b_right) out.better = Better::a;
  return out;
}

ModelComparison accuracy_significant(const DiagnosisModel& a, const DiagnosisModel& b,
                                     const MetricDataset& eval, std::span<const SloState> labels,
                                     double alpha) {
  if (eval.empty()) throw Error("empty evaluation set");
  if (labels.size() != eval.size()) throw Error("label count does not match the dataset");
  std::vector<SloState> pa(eval.size()), pb(eval.size());
  for (std::size_t i = 0; i < eval.size(); ++i) {
    pa[i] = classify(a, eval.row(i)).state;
    pb[i] = classify(b, eval.row(i)).state;
  }
  return compare_predictions(pa, pb, labels, alpha);
}

double brier_score(const DiagnosisModel& model, const MetricDataset& data,
                   std::span<const SloState> labels) {
  if (data.empty()) throw Error("empty evaluation set");
  double sum = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double y = labels[i] == SloState::violation ? 1.0 : 0.0;
    const double d = classify(model, data.row(i)).posterior_violation - y;
    sum += d * d;
  }
  return sum / static_cast<double>(data.size());
}

}  // namespace opstat
