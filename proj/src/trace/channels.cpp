#include <algorithm>

#include "opstat/error.hpp"
#include "opstat/rng.hpp"
#include "opstat/trace_ingest.hpp"

namespace opstat {

std::vector<double> delay_samples(std::span<const double> input, std::span<const double> output,
                                  double horizon) {
  if (!(horizon > 0.0)) throw Error("delay_samples: horizon must be positive");
  std::vector<double> delays;
  delays.reserve(output.size());
  std::size_t j = 0;
  for (double t_out : output) {
    while (j < input.size() && input[j] <= t_out) ++j;
    if (j == 0) continue;
    const double d = t_out - input[j - 1];
    if (d <= horizon) delays.push_back(d);
  }
  return delays;
}

std::vector<double> virtual_random_delays(std::span<const double> input, std::size_t n_out,
                                          double start, double duration, double horizon,
                                          std::uint64_t seed) {
  if (n_out == 0) return {};
  if (!(duration > 0.0)) throw Error("virtual_random_delays: duration must be positive");
  Rng rng(seed);
  std::vector<double> departures(n_out);
  for (auto& t : departures) t = rng.uniform(start, start + duration);
  std::sort(departures.begin(), departures.end());
  return delay_samples(input, departures, horizon);
}

}  // namespace opstat
