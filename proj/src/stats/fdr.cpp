#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "opstat/error.hpp"
#include "opstat/stat_engine.hpp"

namespace opstat {

bool RejectionSet::rejected(std::size_t i) const {
  return std::binary_search(rejected_indices.begin(), rejected_indices.end(), i);
}

RejectionSet bh_select(std::span<const double> p_values, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("bh_select: alpha must lie in (0, 1)");
  for (std::size_t i = 0; i < p_values.size(); ++i) {
    const double p = p_values[i];
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error("bh_select: p-value at index " + std::to_string(i) + " is outside [0, 1]");
    }
  }

  RejectionSet out;
  out.m = p_values.size();
  out.alpha = alpha;
  out.q_values.assign(out.m, 1.0);
  if (out.m == 0) return out;

  std::vector<std::size_t> order(out.m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return p_values[x] < p_values[y]; });

  const double m = static_cast<double>(out.m);
  std::size_t k_star = 0;
  for (std::size_t rank = 1; rank <= out.m; ++rank) {
    if (p_values[order[rank - 1]] * m <= static_cast<double>(rank) * alpha) k_star = rank;
  }

  // Step-up adjusted p-values: running minimum from the largest rank down.
  double running = 1.0;
  for (std::size_t rank = out.m; rank >= 1; --rank) {
    const std::size_t idx = order[rank - 1];
    running = std::min(running, p_values[idx] * m / static_cast<double>(rank));
    out.q_values[idx] = std::min(running, 1.0);
  }

  if (k_star > 0) {
    out.threshold = p_values[order[k_star - 1]];
    for (std::size_t i = 0; i < out.m; ++i) {
      if (p_values[i] <= out.threshold) out.rejected_indices.push_back(i);
    }
  }
  return out;
}

double expected_false_positives(std::size_t m, double p_threshold) {
  if (!(p_threshold >= 0.0 && p_threshold <= 1.0)) {
    throw Error("expected_false_positives: threshold must lie in [0, 1]");
  }
  return static_cast<double>(m) * p_threshold;
}

double expected_false_proportion(std::size_t m, double p_threshold, std::size_t rejections) {
  if (rejections == 0) return 0.0;
  return std::min(1.0, expected_false_positives(m, p_threshold) / static_cast<double>(rejections));
}

}  // namespace opstat
