#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include "../text_util.hpp"
#include "opstat/error.hpp"
#include "opstat/slo_diagnosis.hpp"
#include "opstat/trace_ingest.hpp"

namespace opstat {

std::string_view to_string(SloState s) {
  return s == SloState::violation ? "violation" : "compliant";
}

MetricDataset::MetricDataset(std::vector<std::string> metric_names)
    : names_(std::move(metric_names)) {
  if (names_.empty()) throw Error("metric dataset needs at least one metric");
}

void MetricDataset::add_epoch(double ts, double art_ms, std::span<const double> metrics) {
  if (metrics.size() != names_.size()) {
    throw Error("epoch has " + std::to_string(metrics.size()) + " metrics, expected " +
                std::to_string(names_.size()));
  }
  if (!std::isfinite(ts) || !std::isfinite(art_ms)) throw Error("non-finite timestamp or ART");
  for (std::size_t j = 0; j < metrics.size(); ++j) {
    if (!std::isfinite(metrics[j])) throw Error("non-finite value for metric " + names_[j]);
  }
  if (!timestamps_.empty() && ts < timestamps_.back()) throw Error("timestamps must not decrease");
  timestamps_.push_back(ts);
  art_.push_back(art_ms);
  values_.insert(values_.end(), metrics.begin(), metrics.end());
}

MetricDataset MetricDataset::subset(std::span<const std::size_t> rows) const {
  MetricDataset out(names_);
  out.timestamps_.reserve(rows.size());
  out.art_.reserve(rows.size());
  out.values_.reserve(rows.size() * names_.size());
  for (std::size_t r : rows) out.add_epoch(timestamps_[r], art_[r], row(r));
  return out;
}

MetricDataset parse_metrics(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> names;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::skippable(line)) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto cols = detail::split(line, ',');
    if (cols.size() < 3 || cols[0] != "ts" || cols[1] != "art_ms") {
      throw ParseError(line_no, "header", "expected 'ts,art_ms,<metric>,...'");
    }
    for (std::size_t j = 2; j < cols.size(); ++j) {
      if (cols[j].empty()) throw ParseError(line_no, "header", "empty metric name");
      names.emplace_back(cols[j]);
    }
    break;
  }
  if (names.empty()) throw ParseError(line_no + 1, "header", "missing header line");

  MetricDataset data(names);
  std::vector<double> row(names.size());
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::skippable(line)) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto cols = detail::split(line, ',');
    if (cols.size() != names.size() + 2) {
      throw ParseError(line_no, "row", "expected " + std::to_string(names.size() + 2) +
                                           " columns, got " + std::to_string(cols.size()));
    }
    double ts = 0.0, art = 0.0;
    if (!detail::parse_double(cols[0], ts) || !std::isfinite(ts)) {
      throw ParseError(line_no, "ts", "not a finite number");
    }
    if (!detail::parse_double(cols[1], art) || !std::isfinite(art)) {
      throw ParseError(line_no, "art_ms", "not a finite number");
    }
    for (std::size_t j = 0; j < names.size(); ++j) {
      if (!detail::parse_double(cols[j + 2], row[j]) || !std::isfinite(row[j])) {
        throw ParseError(line_no, names[j], "not a finite number");
      }
    }
    if (!data.empty() && ts < data.timestamp(data.size() - 1)) {
      throw ParseError(line_no, "ts", "timestamps must not decrease");
    }
    data.add_epoch(ts, art, row);
  }
  return data;
}

MetricDataset parse_metrics_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open metrics file '" + path + "'");
  return parse_metrics(in);
}

std::string serialize_metrics(const MetricDataset& data) {
  std::string out = "ts,art_ms";
  for (const auto& n : data.metric_names()) out += "," + n;
  out += '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    out += format_double(data.timestamp(i));
    out += ',';
    out += format_double(data.art_ms(i));
    for (double v : data.row(i)) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

std::vector<SloState> label_slo(const MetricDataset& data, const SloConfig& config) {
  if (!(config.threshold_ms > 0.0)) throw Error("SLO threshold must be positive");
  std::vector<SloState> labels(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    labels[i] = data.art_ms(i) > config.threshold_ms ? SloState::violation : SloState::compliant;
  }
  return labels;
}

}  // namespace opstat
