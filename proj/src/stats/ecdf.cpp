#include <algorithm>
#include <cmath>

#include "opstat/error.hpp"
#include "opstat/stat_engine.hpp"

namespace opstat {

EmpiricalCdf::EmpiricalCdf(std::span<const double> samples)
    : sorted_(samples.begin(), samples.end()) {
  if (sorted_.empty()) throw Error("no samples");
  for (double x : sorted_) {
    if (!std::isfinite(x)) throw Error("non-finite sample");
  }
  std::sort(sorted_.begin(), sorted_.end());
}

double EmpiricalCdf::operator()(double x) const noexcept {
  const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
  return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

EmpiricalCdf empirical_cdf(std::span<const double> samples) { return EmpiricalCdf(samples); }

}  // namespace opstat
