#include <limits>
#include <map>
#include <unordered_map>

#include "opstat/error.hpp"
#include "opstat/repair_sim.hpp"

namespace opstat {

namespace {

// Records of each machine in log order, machines in order of first appearance.
std::vector<std::vector<const LogRecord*>> by_machine(const RepairLog& log) {
  std::unordered_map<std::string_view, std::size_t> index;
  std::vector<std::vector<const LogRecord*>> out;
  for (const auto& r : log.records) {
    auto [it, fresh] = index.emplace(r.machine, out.size());
    if (fresh) out.emplace_back();
    out[it->second].push_back(&r);
  }
  return out;
}

bool escalated(RepairAction a) {
  return a != RepairAction::do_nothing && a != RepairAction::reboot;
}

}  // namespace

std::map<std::string, WatchdogEstimate> estimate_watchdog_fpr(const RepairLog& log,
                                                              const GroundTruth* truth,
                                                              std::int64_t lookahead) {
  if (log.records.empty()) throw Error("estimate_watchdog_fpr: empty log");
  if (lookahead < 0) throw Error("estimate_watchdog_fpr: lookahead must be >= 0");

  std::map<std::string, WatchdogEstimate> est;
  for (const auto& r : log.records) {
    for (const auto& [w, s] : r.reports) {
      auto& e = est[w];
      ++e.reports;
      if (s == WatchdogStatus::error) ++e.errors;
    }
  }

  constexpr auto kNever = std::numeric_limits<std::int64_t>::max();
  for (const auto& recs : by_machine(log)) {
    const std::size_t n = recs.size();
    // A tick is "bad" when its Error is corroborated or it belongs to a
    // Failure episode that escalated past Reboot.
    std::vector<char> bad(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t errors = 0;
      for (const auto& rep : recs[i]->reports) errors += rep.second == WatchdogStatus::error;
      bad[i] = errors >= 2;
    }
    for (std::size_t i = 0; i < n;) {
      if (recs[i]->state != HealthState::failure) {
        ++i;
        continue;
      }
      std::size_t j = i;
      bool esc = false;
      while (j < n && recs[j]->state == HealthState::failure) {
        esc = esc || (recs[j]->action && escalated(*recs[j]->action));
        ++j;
      }
      if (esc) {
        for (std::size_t x = i; x < j; ++x) bad[x] = 1;
      }
      i = j;
    }
    // Backward sweeps: next bad tick strictly after i, next Healthy at or after i.
    std::vector<std::int64_t> next_bad(n, kNever), next_healthy(n, kNever);
    std::int64_t nb = kNever, nh = kNever;
    for (std::size_t i = n; i-- > 0;) {
      next_bad[i] = nb;
      if (recs[i]->state == HealthState::healthy) nh = recs[i]->tick;
      next_healthy[i] = nh;
      if (bad[i]) nb = recs[i]->tick;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const std::int64_t t = recs[i]->tick;
      const bool clean = !bad[i] && (next_bad[i] == kNever || next_bad[i] - t > lookahead) &&
                         next_healthy[i] != kNever && next_healthy[i] - t <= lookahead;
      if (!clean) continue;
      for (const auto& [w, s] : recs[i]->reports) {
        auto& e = est[w];
        ++e.clean_reports;
        if (s == WatchdogStatus::error) ++e.suspected_false;
      }
    }
  }

  for (auto& [w, e] : est) {
    if (e.errors > 0 && e.clean_reports > 0) {
      e.rate = static_cast<double>(e.suspected_false) / static_cast<double>(e.clean_reports);
    }
  }

  if (truth) {
    std::map<std::pair<std::string_view, std::int64_t>, TrueFault> fault;
    for (const auto& r : truth->records) fault[{r.machine, r.tick}] = r.fault;
    std::map<std::string, std::pair<std::size_t, std::size_t>> healthy;  // errors, reports
    for (const auto& r : log.records) {
      auto it = fault.find({r.machine, r.tick});
      if (it == fault.end() || it->second != TrueFault::none) continue;
      for (const auto& [w, s] : r.reports) {
        auto& h = healthy[w];
        h.first += s == WatchdogStatus::error;
        ++h.second;
      }
    }
    for (auto& [w, e] : est) {
      auto it = healthy.find(w);
      if (it != healthy.end() && it->second.second > 0) {
        e.true_rate = static_cast<double>(it->second.first) / static_cast<double>(it->second.second);
      }
    }
  }
  return est;
}

double CostModel::of(RepairAction a) const {
  switch (a) {
    case RepairAction::reboot: return reboot;
    case RepairAction::reimage: return reimage;
    case RepairAction::replace: return replace;
    case RepairAction::do_nothing: return do_nothing;
  }
  return 0.0;
}

PolicyMetrics evaluate_policy(const RepairLog& log, const CostModel& costs) {
  if (log.records.empty()) throw Error("evaluate_policy: empty log");
  PolicyMetrics pm;
  pm.machine_ticks = log.records.size();
  double action_cost = 0.0;
  for (const auto& r : log.records) {
    if (r.action) {
      action_cost += costs.of(*r.action);
      ++pm.action_counts[std::string(to_string(*r.action))];
    }
  }
  for (const auto& recs : by_machine(log)) {
    std::size_t run = 0;
    for (const auto* r : recs) {
      if (r->state == HealthState::failure) {
        ++run;
        continue;
      }
      if (run) pm.episode_lengths.push_back(run);
      run = 0;
    }
    if (run) pm.episode_lengths.push_back(run);  // still open at the end of the log
  }
  for (auto len : pm.episode_lengths) pm.failure_ticks += len;
  pm.episodes = pm.episode_lengths.size();
  pm.availability = static_cast<double>(pm.machine_ticks - pm.failure_ticks) /
                    static_cast<double>(pm.machine_ticks);
  pm.total_cost = action_cost + costs.downtime_per_tick * static_cast<double>(pm.failure_ticks);
  pm.mean_time_to_healthy =
      pm.episodes ? static_cast<double>(pm.failure_ticks) / static_cast<double>(pm.episodes) : 0.0;
  return pm;
}

}  // namespace opstat
