#include <algorithm>
#include <unordered_map>

#include "opstat/error.hpp"
#include "opstat/repair_sim.hpp"

namespace opstat {

std::string_view to_string(WatchdogStatus s) {
  switch (s) {
    case WatchdogStatus::ok: return "OK";
    case WatchdogStatus::warning: return "Warning";
    case WatchdogStatus::error: return "Error";
  }
  return "?";
}

std::string_view to_string(RepairAction a) {
  switch (a) {
    case RepairAction::reboot: return "Reboot";
    case RepairAction::reimage: return "ReImage";
    case RepairAction::replace: return "Replace";
    case RepairAction::do_nothing: return "DoNothing";
  }
  return "?";
}

std::string_view to_string(HealthState s) {
  return s == HealthState::healthy ? "Healthy" : "Failure";
}

std::string_view to_string(TrueFault f) {
  switch (f) {
    case TrueFault::none: return "none";
    case TrueFault::transient: return "transient";
    case TrueFault::persistent: return "persistent";
  }
  return "?";
}

std::string_view to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::escalation: return "escalation";
    case PolicyKind::do_nothing: return "do-nothing";
    case PolicyKind::always_reboot: return "always-reboot";
    case PolicyKind::always_replace: return "always-replace";
  }
  return "?";
}

WatchdogStatus parse_watchdog_status(std::string_view s) {
  if (s == "OK") return WatchdogStatus::ok;
  if (s == "Warning") return WatchdogStatus::warning;
  if (s == "Error") return WatchdogStatus::error;
  throw Error("unknown watchdog status '" + std::string(s) + "'");
}

RepairAction parse_repair_action(std::string_view s) {
  if (s == "Reboot") return RepairAction::reboot;
  if (s == "ReImage") return RepairAction::reimage;
  if (s == "Replace") return RepairAction::replace;
  if (s == "DoNothing") return RepairAction::do_nothing;
  throw Error("unknown repair action '" + std::string(s) + "'");
}

HealthState parse_health_state(std::string_view s) {
  if (s == "Healthy") return HealthState::healthy;
  if (s == "Failure") return HealthState::failure;
  throw Error("unknown machine state '" + std::string(s) + "'");
}

TrueFault parse_true_fault(std::string_view s) {
  if (s == "none") return TrueFault::none;
  if (s == "transient") return TrueFault::transient;
  if (s == "persistent") return TrueFault::persistent;
  throw Error("unknown fault kind '" + std::string(s) + "'");
}

PolicyKind parse_policy_kind(std::string_view s) {
  if (s == "escalation") return PolicyKind::escalation;
  if (s == "do-nothing" || s == "do_nothing") return PolicyKind::do_nothing;
  if (s == "always-reboot" || s == "always_reboot") return PolicyKind::always_reboot;
  if (s == "always-replace" || s == "always_replace") return PolicyKind::always_replace;
  throw Error("unknown policy '" + std::string(s) + "'");
}

bool error_predicate(std::span<const WatchdogStatus> statuses) {
  return std::find(statuses.begin(), statuses.end(), WatchdogStatus::error) != statuses.end();
}

bool error_predicate(std::span<const WatchdogReport> reports) {
  bool in_error = false;
  for (const auto& r : reports) {
    if (r.machine != reports.front().machine || r.tick != reports.front().tick) {
      throw Error("error_predicate: reports span more than one machine or tick");
    }
    in_error = in_error || r.status == WatchdogStatus::error;
  }
  return in_error;
}

RepairAction escalation_policy(std::span<const RepairEvent> history, std::int64_t now,
                               std::int64_t window, bool in_error) {
  if (!in_error) return RepairAction::do_nothing;
  std::size_t recent = 0;
  for (auto it = history.rbegin(); it != history.rend(); ++it) {
    if (it->action == RepairAction::replace) break;
    if (it->tick > now) continue;
    if (now - it->tick >= window) break;  // history is chronological
    ++recent;
  }
  if (recent == 0) return RepairAction::reboot;
  if (recent == 1) return RepairAction::reimage;
  return RepairAction::replace;
}

RepairAction Policy::choose(std::span<const RepairEvent> history, std::int64_t now,
                            bool in_error) const {
  if (!in_error) return RepairAction::do_nothing;
  switch (kind) {
    case PolicyKind::escalation: return escalation_policy(history, now, window, in_error);
    case PolicyKind::do_nothing: return RepairAction::do_nothing;
    case PolicyKind::always_reboot: return RepairAction::reboot;
    case PolicyKind::always_replace: return RepairAction::replace;
  }
  return RepairAction::do_nothing;
}

std::int64_t RepairLatency::of(RepairAction a) const {
  switch (a) {
    case RepairAction::reboot: return reboot;
    case RepairAction::reimage: return reimage;
    case RepairAction::replace: return replace;
    case RepairAction::do_nothing: return do_nothing;
  }
  return 1;
}

std::int64_t RepairLatency::max() const { return std::max({reboot, reimage, replace, do_nothing}); }

std::vector<IssuedAction> device_manager_step(std::vector<MachineState>& machines,
                                              std::int64_t tick,
                                              std::span<const WatchdogReport> reports,
                                              const DeviceManagerConfig& config) {
  std::unordered_map<std::string_view, std::size_t> index;
  index.reserve(machines.size());
  for (std::size_t m = 0; m < machines.size(); ++m) index.emplace(machines[m].id, m);

  std::vector<char> in_error(machines.size(), 0);
  for (const auto& r : reports) {
    if (r.tick != tick) {
      throw Error("device manager: report for tick " + std::to_string(r.tick) +
                  " in batch for tick " + std::to_string(tick));
    }
    auto it = index.find(r.machine);
    if (it == index.end()) throw Error("device manager: unknown machine '" + r.machine + "'");
    if (r.status == WatchdogStatus::error) in_error[it->second] = 1;
  }

  std::vector<IssuedAction> issued;
  for (std::size_t m = 0; m < machines.size(); ++m) {
    auto& mc = machines[m];
    bool assign = false;
    if (mc.state == HealthState::healthy) {
      assign = in_error[m] != 0;
    } else if (tick - mc.action_tick >= config.latency.of(*mc.pending_action)) {
      if (in_error[m]) {
        assign = true;
      } else {
        mc.state = HealthState::healthy;
        mc.pending_action.reset();
      }
    }
    if (!assign) continue;
    const RepairAction a = config.policy.choose(mc.history, tick, true);
    mc.state = HealthState::failure;
    mc.pending_action = a;
    mc.action_tick = tick;
    mc.history.push_back({tick, a});
    issued.push_back({m, a});
  }
  return issued;
}

}  // namespace opstat
