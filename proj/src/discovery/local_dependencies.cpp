#include <string>

#include "opstat/dep_discovery.hpp"
#include "opstat/error.hpp"
#include "opstat/rng.hpp"

namespace opstat {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::ks: return "ks";
    case Method::log_odds: return "log-odds";
    case Method::both: return "both";
  }
  return "ks";
}

Method parse_method(std::string_view s) {
  if (s == "ks") return Method::ks;
  if (s == "log-odds" || s == "log_odds") return Method::log_odds;
  if (s == "both") return Method::both;
  throw Error("unknown method '" + std::string(s) + "' (expected ks, log-odds or both)");
}

void validate(const DiscoveryConfig& config) {
  if (!(config.alpha > 0.0 && config.alpha < 1.0)) throw Error("alpha must lie in (0, 1)");
  if (!(config.horizon > 0.0)) throw Error("horizon must be positive");
  if (config.min_samples < 1) throw Error("min_samples must be at least 1");
  if (config.replications < 1) throw Error("replications must be at least 1");
  if (config.bins < 2) throw Error("bins must be at least 2");
  if (!(config.dirichlet_alpha > 0.0)) throw Error("dirichlet_alpha must be positive");
}

namespace {

struct PairPlan {
  const ChannelSeries* input;
  const ChannelSeries* output;
};

std::vector<PairPlan> plan_pairs(const HostTrace& trace) {
  std::vector<PairPlan> plan;
  const auto ins = trace.inputs();
  const auto outs = trace.outputs();
  plan.reserve(ins.size() * outs.size());
  for (const auto* in : ins) {
    for (const auto* out : outs) plan.push_back({in, out});
  }
  return plan;
}

ChannelPairResult test_pair(const HostTrace& trace, const PairPlan& pair, std::size_t index,
                            const DiscoveryConfig& config) {
  ChannelPairResult r;
  r.input = pair.input->id;
  r.output = pair.output->id;
  const auto real = delay_samples(pair.input->times, pair.output->times, config.horizon);
  r.n_delays = real.size();
  if (real.size() < config.min_samples || trace.duration <= 0.0) {
    r.insufficient = true;
    return r;
  }

  const EmpiricalCdf real_cdf(real);
  const LogOddsModel model{config.horizon, config.bins, config.dirichlet_alpha};
  double d_sum = 0.0;
  std::size_t virtual_total = 0;
  for (std::size_t rep = 0; rep < config.replications; ++rep) {
    const auto virt = virtual_random_delays(pair.input->times, pair.output->times.size(),
                                            trace.start, trace.duration, config.horizon,
                                            derive_seed(config.seed, {index, rep}));
    if (virt.empty()) {
      r.insufficient = true;
      return r;
    }
    d_sum += ks_statistic(real_cdf, EmpiricalCdf(virt));
    virtual_total += virt.size();
    if (rep == 0) r.log_odds = log_odds_two_sample(real, virt, model);
  }
  const auto reps = static_cast<double>(config.replications);
  r.n_virtual = static_cast<std::size_t>(static_cast<double>(virtual_total) / reps + 0.5);
  r.ks.statistic = d_sum / reps;
  r.ks.n_a = r.n_delays;
  r.ks.n_b = r.n_virtual;
  r.ks.p_value = ks_p_value(r.ks.statistic, r.ks.n_a, r.ks.n_b);
  r.ks.significant = r.ks.p_value <= config.alpha;
  return r;
}

// Single synchronisation point: BH across the host's tested pairs.
void select_dependent(std::vector<ChannelPairResult>& results, const DiscoveryConfig& config) {
  std::vector<std::size_t> tested;
  std::vector<double> p;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i].insufficient) continue;
    tested.push_back(i);
    p.push_back(results[i].ks.p_value);
  }
  if (tested.empty()) return;
  const auto selection = bh_select(p, config.alpha);
  for (std::size_t t = 0; t < tested.size(); ++t) {
    auto& r = results[tested[t]];
    r.q_value = selection.q_values[t];
    const bool ks_hit = selection.rejected(t);
    const bool bayes_hit = r.log_odds >= config.log_odds_threshold;
    switch (config.method) {
      case Method::ks: r.dependent = ks_hit; break;
      case Method::log_odds: r.dependent = bayes_hit; break;
      case Method::both: r.dependent = ks_hit && bayes_hit; break;
    }
  }
}

}  // namespace

std::vector<ChannelPairResult> local_dependencies(const HostTrace& trace,
                                                  const DiscoveryConfig& config) {
  validate(config);
  const auto plan = plan_pairs(trace);
  std::vector<ChannelPairResult> results(plan.size());
  const auto n = static_cast<std::int64_t>(plan.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    results[idx] = test_pair(trace, plan[idx], idx, config);
  }
  select_dependent(results, config);
  return results;
}

namespace reference {

std::vector<ChannelPairResult> local_dependencies(const HostTrace& trace,
                                                  const DiscoveryConfig& config) {
  validate(config);
  const auto plan = plan_pairs(trace);
  std::vector<ChannelPairResult> results;
  results.reserve(plan.size());
  for (std::size_t i = 0; i < plan.size(); ++i) results.push_back(test_pair(trace, plan[i], i, config));
  select_dependent(results, config);
  return results;
}

}  // namespace reference

}  // namespace opstat
