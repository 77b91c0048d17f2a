#include <cmath>
#include <set>
#include <string>

#include "opstat/error.hpp"
#include "opstat/repair_sim.hpp"
#include "opstat/rng.hpp"
#include "opstat/trace_ingest.hpp"

namespace opstat {

double RepairEfficacy::of(RepairAction a) const {
  switch (a) {
    case RepairAction::reboot: return reboot;
    case RepairAction::reimage: return reimage;
    case RepairAction::replace: return replace;
    case RepairAction::do_nothing: return do_nothing;
  }
  return 0.0;
}

namespace {

bool probability(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

void validate(const SimConfig& config) {
  if (config.fleet == 0) throw Error("sim config: fleet must be at least 1");
  if (config.horizon < 1) throw Error("sim config: horizon must be at least 1");
  const auto& f = config.faults;
  if (!probability(f.transient_rate) || !probability(f.persistent_rate) ||
      f.transient_rate + f.persistent_rate > 1.0) {
    throw Error("sim config: fault rates must be probabilities summing to at most 1");
  }
  std::set<std::string> names;
  for (const auto& w : f.watchdogs) {
    if (!valid_token(w.name)) throw Error("sim config: invalid watchdog name '" + w.name + "'");
    if (!names.insert(w.name).second) throw Error("sim config: duplicate watchdog '" + w.name + "'");
    if (!(w.false_positive >= 0.0 && w.false_positive < 1.0) ||
        !(w.false_negative >= 0.0 && w.false_negative < 1.0)) {
      throw Error("sim config: watchdog '" + w.name + "' rates must lie in [0, 1)");
    }
    if (!probability(w.warning_rate)) {
      throw Error("sim config: watchdog '" + w.name + "' warning rate must lie in [0, 1]");
    }
  }
  for (auto a : {RepairAction::reboot, RepairAction::reimage, RepairAction::replace,
                 RepairAction::do_nothing}) {
    if (!probability(f.efficacy.of(a))) throw Error("sim config: efficacy must lie in [0, 1]");
    if (f.latency.of(a) < 1) throw Error("sim config: repair latencies must be at least 1");
  }
  if (config.policy.window < 1) throw Error("sim config: policy window must be at least 1");
}

std::string machine_id(std::size_t index) {
  std::string digits = std::to_string(index);
  if (digits.size() < 4) digits.insert(0, 4 - digits.size(), '0');
  return "m" + digits;
}

namespace {

// Everything random about one machine in one tick: repair outcome, fault
// evolution, then one status per watchdog, in that order.
void sample_machine(const SimConfig& config, std::size_t m, std::int64_t tick,
                    const MachineState& machine, TrueFault& fault,
                    std::span<WatchdogStatus> statuses) {
  const auto& fm = config.faults;
  StreamRng rng(derive_seed(config.seed, {m, static_cast<std::uint64_t>(tick)}));

  if (fault == TrueFault::transient) fault = TrueFault::none;
  if (machine.state == HealthState::failure && machine.pending_action &&
      tick - machine.action_tick == fm.latency.of(*machine.pending_action) &&
      fault == TrueFault::persistent) {
    if (rng.bernoulli(fm.efficacy.of(*machine.pending_action))) fault = TrueFault::none;
  }
  if (fault == TrueFault::none) {
    const double u = rng.uniform();
    if (u < fm.persistent_rate) {
      fault = TrueFault::persistent;
    } else if (u < fm.persistent_rate + fm.transient_rate) {
      fault = TrueFault::transient;
    }
  }
  for (std::size_t w = 0; w < fm.watchdogs.size(); ++w) {
    const auto& spec = fm.watchdogs[w];
    const double u = rng.uniform();
    if (fault != TrueFault::none) {
      statuses[w] = u < spec.false_negative ? WatchdogStatus::ok : WatchdogStatus::error;
    } else if (u < spec.false_positive) {
      statuses[w] = WatchdogStatus::error;
    } else if (u < spec.false_positive + (1.0 - spec.false_positive) * spec.warning_rate) {
      statuses[w] = WatchdogStatus::warning;
    } else {
      statuses[w] = WatchdogStatus::ok;
    }
  }
}

SimulationResult run(const SimConfig& config, bool parallel) {
  validate(config);
  const std::size_t n = config.fleet;
  const std::size_t k = config.faults.watchdogs.size();
  const auto fleet = static_cast<std::int64_t>(n);

  std::vector<MachineState> machines(n);
  for (std::size_t m = 0; m < n; ++m) machines[m].id = machine_id(m);
  std::vector<TrueFault> faults(n, TrueFault::none);
  std::vector<WatchdogStatus> statuses(n * k);
  const DeviceManagerConfig dm{config.policy, config.faults.latency};

  SimulationResult out;
  out.log.records.reserve(n * static_cast<std::size_t>(config.horizon));
  out.truth.records.reserve(out.log.records.capacity());
  std::vector<WatchdogReport> batch(n * k);
  for (std::size_t m = 0; m < n; ++m) {
    for (std::size_t w = 0; w < k; ++w) {
      batch[m * k + w].machine = machines[m].id;
      batch[m * k + w].watchdog = config.faults.watchdogs[w].name;
    }
  }

  for (std::int64_t tick = 0; tick < config.horizon; ++tick) {
#pragma omp parallel for schedule(static) if (parallel)
    for (std::int64_t m = 0; m < fleet; ++m) {
      const auto mi = static_cast<std::size_t>(m);
      sample_machine(config, mi, tick, machines[mi], faults[mi],
                     std::span<WatchdogStatus>(statuses.data() + mi * k, k));
    }

    for (std::size_t i = 0; i < batch.size(); ++i) {
      batch[i].tick = tick;
      batch[i].status = statuses[i];
    }
    std::vector<std::optional<RepairAction>> issued(n);
    for (const auto& a : device_manager_step(machines, tick, batch, dm)) issued[a.machine] = a.action;

    for (std::size_t m = 0; m < n; ++m) {
      LogRecord rec;
      rec.tick = tick;
      rec.machine = machines[m].id;
      rec.reports.reserve(k);
      for (std::size_t w = 0; w < k; ++w) {
        rec.reports.emplace_back(config.faults.watchdogs[w].name, statuses[m * k + w]);
      }
      rec.state = machines[m].state;
      rec.action = issued[m];
      out.log.records.push_back(std::move(rec));
      out.truth.records.push_back({tick, machines[m].id, faults[m]});
    }
  }
  return out;
}

}  // namespace

SimulationResult simulate(const SimConfig& config) { return run(config, true); }

namespace reference {
SimulationResult simulate(const SimConfig& config) { return run(config, false); }
}  // namespace reference

}  // namespace opstat
