#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>

#include "opstat/error.hpp"
#include "opstat/rng.hpp"
#include "opstat/stat_engine.hpp"

namespace opstat {

namespace {

// Scaled statistic max |i*m - j*n| over the merged step points. Integer
// arithmetic keeps permuted and observed values exactly comparable.
std::int64_t scaled_ks(std::span<const double> a, std::span<const double> b) {
  const auto n = static_cast<std::int64_t>(a.size());
  const auto m = static_cast<std::int64_t>(b.size());
  std::int64_t i = 0, j = 0, best = 0;
  while (i < n && j < m) {
    const double x = std::min(a[i], b[j]);
    while (i < n && a[i] <= x) ++i;
    while (j < m && b[j] <= x) ++j;
    best = std::max(best, std::abs(i * m - j * n));
  }
  return best;
}

// Pooled sample sorted once; a permutation only relabels it. Runs of equal
// values are consumed together so ties follow the right-continuous rule.
struct PooledSample {
  std::vector<double> values;
  std::vector<std::uint8_t> labels;  // 1 = first sample
  std::size_t n = 0;
  std::size_t m = 0;

  PooledSample(std::span<const double> a, std::span<const double> b) : n(a.size()), m(b.size()) {
    std::vector<std::pair<double, std::uint8_t>> all;
    all.reserve(n + m);
    for (double x : a) all.emplace_back(x, 1);
    for (double x : b) all.emplace_back(x, 0);
    std::sort(all.begin(), all.end());
    values.reserve(all.size());
    labels.reserve(all.size());
    for (auto& [x, l] : all) {
      values.push_back(x);
      labels.push_back(l);
    }
  }

  std::int64_t statistic(const std::vector<std::uint8_t>& lab) const {
    const auto sn = static_cast<std::int64_t>(n);
    const auto sm = static_cast<std::int64_t>(m);
    std::int64_t i = 0, j = 0, best = 0;
    std::size_t k = 0;
    while (k < values.size()) {
      const double x = values[k];
      while (k < values.size() && values[k] == x) {
        if (lab[k]) ++i; else ++j;
        ++k;
      }
      best = std::max(best, std::abs(i * sm - j * sn));
    }
    return best;
  }

  void permute(std::vector<std::uint8_t>& lab, Rng& rng) const {
    lab = labels;
    for (std::size_t k = lab.size(); k > 1; --k) {
      const auto r = static_cast<std::size_t>(rng.below(k));
      std::swap(lab[k - 1], lab[r]);
    }
  }
};

void check_permutation_inputs(std::span<const double> a, std::span<const double> b,
                              std::size_t n_perm) {
  if (a.empty() || b.empty()) throw Error("no samples");
  if (n_perm == 0) throw Error("n_perm must be at least 1");
}

}  // namespace

double ks_statistic(const EmpiricalCdf& a, const EmpiricalCdf& b) {
  const auto scaled = scaled_ks(a.samples(), b.samples());
  return static_cast<double>(scaled) /
         (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

double ks_p_value(double d, std::size_t n, std::size_t m) {
  if (!std::isfinite(d)) throw Error("ks_p_value: non-finite statistic");
  if (n == 0 || m == 0) throw Error("ks_p_value: sample counts must be positive");
  d = std::clamp(d, 0.0, 1.0);
  const double nn = static_cast<double>(n), mm = static_cast<double>(m);
  const double lambda = d * std::sqrt(nn * mm / (nn + mm));
  if (lambda <= 0.0) return 1.0;
  if (lambda < 1.18) {
    // Jacobi-transformed series; the alternating form cancels badly here.
    const double pi = std::numbers::pi;
    double tail = 0.0;
    for (int k = 1; k < 64; ++k) {
      const double odd = 2.0 * k - 1.0;
      const double term = std::exp(-odd * odd * pi * pi / (8.0 * lambda * lambda));
      tail += term;
      if (term < 1e-18) break;
    }
    return std::clamp(1.0 - std::sqrt(2.0 * pi) / lambda * tail, 0.0, 1.0);
  }
  double sum = 0.0;
  for (int j = 1; j < 100000; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += (j % 2 == 1 ? term : -term);
    if (term < 1e-12) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

TestOutcome ks_test(std::span<const double> a, std::span<const double> b, double alpha) {
  const EmpiricalCdf fa(a), fb(b);
  TestOutcome out;
  out.statistic = ks_statistic(fa, fb);
  out.n_a = fa.size();
  out.n_b = fb.size();
  out.p_value = ks_p_value(out.statistic, out.n_a, out.n_b);
  out.significant = out.p_value <= alpha;
  return out;
}

double permutation_p_value(std::span<const double> a, std::span<const double> b,
                           std::size_t n_perm, std::uint64_t seed) {
  check_permutation_inputs(a, b, n_perm);
  const PooledSample pooled(a, b);
  const std::int64_t observed = pooled.statistic(pooled.labels);
  const auto perms = static_cast<std::int64_t>(n_perm);
  std::int64_t exceed = 0;
#pragma omp parallel
  {
    std::vector<std::uint8_t> lab;
#pragma omp for reduction(+ : exceed) schedule(static)
    for (std::int64_t p = 0; p < perms; ++p) {
      Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(p)}));
      pooled.permute(lab, rng);
      if (pooled.statistic(lab) >= observed) ++exceed;
    }
  }
  return static_cast<double>(1 + exceed) / static_cast<double>(n_perm + 1);
}

namespace reference {

double permutation_p_value(std::span<const double> a, std::span<const double> b,
                           std::size_t n_perm, std::uint64_t seed) {
  check_permutation_inputs(a, b, n_perm);
  const PooledSample pooled(a, b);
  const std::int64_t observed = pooled.statistic(pooled.labels);
  std::size_t exceed = 0;
  std::vector<std::uint8_t> lab;
  for (std::size_t p = 0; p < n_perm; ++p) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(p)}));
    pooled.permute(lab, rng);
    if (pooled.statistic(lab) >= observed) ++exceed;
  }
  return static_cast<double>(1 + exceed) / static_cast<double>(n_perm + 1);
}

}  // namespace reference

}  // namespace opstat
