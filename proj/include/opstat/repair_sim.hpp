#pragma once

// Discrete-tick model of a datacenter fault/recovery loop: watchdogs report
// on machines, a device manager assigns Healthy/Failure states and repair
// actions, and the resulting log is mined for watchdog reliability and
// policy effectiveness.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace opstat {

enum class WatchdogStatus { ok, warning, error };
enum class RepairAction { reboot, reimage, replace, do_nothing };
enum class HealthState { healthy, failure };
enum class TrueFault { none, transient, persistent };

std::string_view to_string(WatchdogStatus s);   // OK | Warning | Error
std::string_view to_string(RepairAction a);     // Reboot | ReImage | Replace | DoNothing
std::string_view to_string(HealthState s);      // Healthy | Failure
std::string_view to_string(TrueFault f);        // none | transient | persistent
WatchdogStatus parse_watchdog_status(std::string_view s);
RepairAction parse_repair_action(std::string_view s);
HealthState parse_health_state(std::string_view s);
TrueFault parse_true_fault(std::string_view s);

struct WatchdogReport {
  std::int64_t tick = 0;
  std::string watchdog;
  std::string machine;
  WatchdogStatus status = WatchdogStatus::ok;
};

/// In error iff any watchdog reports Error. Empty input is not in error.
bool error_predicate(std::span<const WatchdogStatus> statuses);

/// Same rule; throws when the reports do not share one machine and tick.
bool error_predicate(std::span<const WatchdogReport> reports);

struct RepairEvent {
  std::int64_t tick = 0;
  RepairAction action = RepairAction::do_nothing;

  bool operator==(const RepairEvent&) const = default;
};

/// Reboot -> ReImage -> Replace ladder keyed on the number of actions taken
/// within `window` ticks before `now`. Actions before the latest Replace do
/// not count: a replaced machine starts with a clean record.
RepairAction escalation_policy(std::span<const RepairEvent> history, std::int64_t now,
                               std::int64_t window, bool in_error);

enum class PolicyKind { escalation, do_nothing, always_reboot, always_replace };

std::string_view to_string(PolicyKind k);
PolicyKind parse_policy_kind(std::string_view s);

struct Policy {
  PolicyKind kind = PolicyKind::escalation;
  std::int64_t window = 100;

  RepairAction choose(std::span<const RepairEvent> history, std::int64_t now, bool in_error) const;
};

struct RepairLatency {
  std::int64_t reboot = 1;
  std::int64_t reimage = 3;
  std::int64_t replace = 5;
  std::int64_t do_nothing = 1;

  std::int64_t of(RepairAction a) const;
  std::int64_t max() const;
};

struct MachineState {
  std::string id;
  HealthState state = HealthState::healthy;
  std::optional<RepairAction> pending_action;  // present iff Failure
  std::int64_t action_tick = 0;
  std::vector<RepairEvent> history;
};

struct DeviceManagerConfig {
  Policy policy;
  RepairLatency latency;
};

struct IssuedAction {
  std::size_t machine = 0;  // index into the machine vector
  RepairAction action = RepairAction::do_nothing;
};

/// One device-manager tick. Healthy machines in error enter Failure with the
/// policy's action. A Failure machine whose repair latency has elapsed
/// returns to Healthy when clear, otherwise receives the next action.
/// Throws on reports naming an unknown machine or another tick.
std::vector<IssuedAction> device_manager_step(std::vector<MachineState>& machines,
                                              std::int64_t tick,
                                              std::span<const WatchdogReport> reports,
                                              const DeviceManagerConfig& config);

struct WatchdogSpec {
  std::string name;
  double false_positive = 0.0;  // P(Error | machine healthy)
  double false_negative = 0.0;  // P(not Error | machine faulty)
  double warning_rate = 0.0;    // P(Warning | healthy, no false alarm)
};

struct RepairEfficacy {
  double reboot = 0.0;
  double reimage = 0.5;
  double replace = 1.0;
  double do_nothing = 0.0;

  double of(RepairAction a) const;
};

struct FaultModel {
  double transient_rate = 0.0;   // per machine per tick; clears after one tick
  double persistent_rate = 0.0;  // per machine per tick; needs a repair
  std::vector<WatchdogSpec> watchdogs;
  RepairEfficacy efficacy;
  RepairLatency latency;
};

struct SimConfig {
  std::size_t fleet = 1;
  std::int64_t horizon = 1;
  std::uint64_t seed = 0;
  FaultModel faults;
  Policy policy;
};

void validate(const SimConfig& config);

struct LogRecord {
  std::int64_t tick = 0;
  std::string machine;
  std::vector<std::pair<std::string, WatchdogStatus>> reports;
  HealthState state = HealthState::healthy;
  std::optional<RepairAction> action;  // issued this tick

  bool operator==(const LogRecord&) const = default;
};

struct RepairLog {
  std::vector<LogRecord> records;  // ordered by (tick, machine)

  bool operator==(const RepairLog&) const = default;
};

struct TruthRecord {
  std::int64_t tick = 0;
  std::string machine;
  TrueFault fault = TrueFault::none;

  bool operator==(const TruthRecord&) const = default;
};

/// Simulator-only channel, never merged into the primary log.
struct GroundTruth {
  std::vector<TruthRecord> records;

  bool operator==(const GroundTruth&) const = default;
};

struct SimulationResult {
  RepairLog log;
  GroundTruth truth;
};

std::string machine_id(std::size_t index);

/// Machine sampling within a tick runs in parallel; each machine-tick draws
/// from a substream keyed by (seed, machine, tick).
SimulationResult simulate(const SimConfig& config);

namespace reference {
SimulationResult simulate(const SimConfig& config);
}  // namespace reference

/// `tick=<int> machine=<id> state=<Healthy|Failure> action=<action|-> reports=<wd:status;...>`
std::string serialize_repair_log(const RepairLog& log);
RepairLog parse_repair_log(std::istream& in);

/// `tick=<int> machine=<id> fault=<none|transient|persistent>`
std::string serialize_truth(const GroundTruth& truth);
GroundTruth parse_ground_truth(std::istream& in);

/// Simulation config: `key=value` lines plus `watchdog name= fp= fn= warn=`
/// records (see README).
SimConfig parse_sim_config(std::istream& in);
std::string serialize_sim_config(const SimConfig& config);

struct WatchdogEstimate {
  std::size_t reports = 0;
  std::size_t errors = 0;
  std::size_t suspected_false = 0;
  std::size_t clean_reports = 0;
  std::optional<double> rate;       // absent when the watchdog never reported Error
  std::optional<double> true_rate;  // only with ground truth
};

/// Log-only false-positive estimate per watchdog. A tick is "clean" when at
/// most one watchdog reports Error, the machine is in no episode that
/// escalated past Reboot, and within `lookahead` ticks no corroborated Error
/// or escalation follows while the machine does get back to Healthy. Errors
/// on clean ticks are suspected false; rate = suspected false / reports on
/// clean ticks.
std::map<std::string, WatchdogEstimate> estimate_watchdog_fpr(const RepairLog& log,
                                                              const GroundTruth* truth = nullptr,
                                                              std::int64_t lookahead = 20);

struct CostModel {
  double reboot = 1.0;
  double reimage = 5.0;
  double replace = 50.0;
  double do_nothing = 0.0;
  double downtime_per_tick = 1.0;

  double of(RepairAction a) const;
};

struct PolicyMetrics {
  double availability = 1.0;
  double total_cost = 0.0;
  double mean_time_to_healthy = 0.0;
  std::size_t machine_ticks = 0;
  std::size_t failure_ticks = 0;
  std::size_t episodes = 0;
  std::vector<std::size_t> episode_lengths;
  std::map<std::string, std::size_t> action_counts;
};

PolicyMetrics evaluate_policy(const RepairLog& log, const CostModel& costs);

}  // namespace opstat
