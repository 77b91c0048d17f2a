#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "opstat/error.hpp"
#include "opstat/repair_sim.hpp"

using namespace opstat;

namespace {

using S = WatchdogStatus;
using A = RepairAction;

LogRecord rec(std::int64_t tick, S a, S b, HealthState h = HealthState::healthy,
              std::optional<A> action = std::nullopt) {
  return {tick, "m0", {{"a", a}, {"b", b}}, h, action};
}

// 100 quiet ticks of one machine with two watchdogs.
RepairLog quiet_log() {
  RepairLog log;
  for (std::int64_t t = 0; t < 100; ++t) log.records.push_back(rec(t, S::ok, S::ok));
  return log;
}

SimConfig base_config(std::uint64_t seed) {
  SimConfig c;
  c.fleet = 20;
  c.horizon = 500;
  c.seed = seed;
  c.faults.transient_rate = 0.002;
  c.faults.persistent_rate = 0.002;
  c.faults.watchdogs = {{"ping", 0.001, 0.02, 0.0}, {"disk", 0.05, 0.02, 0.1}};
  return c;
}

}  // namespace

TEST_CASE("error predicate truth table") {
  const S all[] = {S::ok, S::warning, S::error};
  std::size_t rows = 0;
  for (S x : all) {
    for (S y : all) {
      for (S z : all) {
        const std::vector<S> v{x, y, z};
        const bool want = x == S::error || y == S::error || z == S::error;
        CHECK(error_predicate(v) == want);
        // Raising any single status to Error never clears the predicate.
        for (std::size_t i = 0; i < 3; ++i) {
          auto up = v;
          up[i] = S::error;
          CHECK(error_predicate(up));
        }
        ++rows;
      }
    }
  }
  CHECK(rows == 27);
  CHECK_FALSE(error_predicate(std::vector<S>{}));
  CHECK_FALSE(error_predicate(std::vector<S>{S::warning, S::warning}));

  const std::vector<WatchdogReport> ok{{3, "a", "m1", S::ok}, {3, "b", "m1", S::error}};
  CHECK(error_predicate(ok));
  const std::vector<WatchdogReport> mixed{{3, "a", "m1", S::ok}, {3, "b", "m2", S::error}};
  CHECK_THROWS_AS(error_predicate(mixed), Error);
  const std::vector<WatchdogReport> ticks{{3, "a", "m1", S::ok}, {4, "b", "m1", S::error}};
  CHECK_THROWS_AS(error_predicate(ticks), Error);
}

TEST_CASE("string forms") {
  for (S s : {S::ok, S::warning, S::error}) CHECK(parse_watchdog_status(to_string(s)) == s);
  for (A a : {A::reboot, A::reimage, A::replace, A::do_nothing}) CHECK(parse_repair_action(to_string(a)) == a);
  for (auto k : {PolicyKind::escalation, PolicyKind::do_nothing, PolicyKind::always_reboot,
                 PolicyKind::always_replace}) {
    CHECK(parse_policy_kind(to_string(k)) == k);
  }
  CHECK(to_string(A::reimage) == "ReImage");
  CHECK(to_string(S::warning) == "Warning");
  CHECK_THROWS_AS(parse_watchdog_status("error"), Error);
  CHECK_THROWS_AS(parse_repair_action("Reinstall"), Error);
}

TEST_CASE("escalation ladder") {
  const std::int64_t w = 100;
  CHECK(escalation_policy({}, 10, w, true) == A::reboot);
  CHECK(escalation_policy({}, 10, w, false) == A::do_nothing);
  const std::vector<RepairEvent> one{{5, A::reboot}};
  CHECK(escalation_policy(one, 10, w, true) == A::reimage);
  const std::vector<RepairEvent> two{{5, A::reboot}, {6, A::reimage}};
  CHECK(escalation_policy(two, 10, w, true) == A::replace);
  const std::vector<RepairEvent> three{{5, A::reboot}, {6, A::reimage}, {9, A::reimage}};
  CHECK(escalation_policy(three, 10, w, true) == A::replace);
  // Window boundary: an action exactly W ticks ago no longer counts.
  CHECK(escalation_policy(one, 5 + w, w, true) == A::reboot);
  CHECK(escalation_policy(one, 5 + w - 1, w, true) == A::reimage);
  // A replaced machine starts over.
  const std::vector<RepairEvent> replaced{{5, A::reboot}, {6, A::reimage}, {9, A::replace}};
  CHECK(escalation_policy(replaced, 20, w, true) == A::reboot);
  const std::vector<RepairEvent> after{{5, A::reboot}, {9, A::replace}, {15, A::reboot}};
  CHECK(escalation_policy(after, 20, w, true) == A::reimage);

  Policy p;
  p.kind = PolicyKind::always_replace;
  CHECK(p.choose({}, 0, true) == A::replace);
  CHECK(p.choose({}, 0, false) == A::do_nothing);
  p.kind = PolicyKind::do_nothing;
  CHECK(p.choose(two, 10, true) == A::do_nothing);
  p.kind = PolicyKind::always_reboot;
  CHECK(p.choose(two, 10, true) == A::reboot);
}

TEST_CASE("device manager step") {
  std::vector<MachineState> ms(2);
  ms[0].id = "m0";
  ms[1].id = "m1";
  const DeviceManagerConfig cfg;
  auto step = [&](std::int64_t t, S s0) {
    const std::vector<WatchdogReport> r{{t, "w", "m0", s0}, {t, "w", "m1", S::ok}};
    return device_manager_step(ms, t, r, cfg);
  };

  CHECK(step(0, S::ok).empty());
  CHECK(ms[0].state == HealthState::healthy);

  auto a = step(1, S::error);
  REQUIRE(a.size() == 1);
  CHECK(a[0].machine == 0);
  CHECK(a[0].action == A::reboot);
  CHECK(ms[0].state == HealthState::failure);
  CHECK(ms[1].state == HealthState::healthy);

  // Reboot takes one tick; still in error at t=2 so the ladder moves on.
  a = step(2, S::error);
  REQUIRE(a.size() == 1);
  CHECK(a[0].action == A::reimage);

  // ReImage takes three ticks: clear reports before then change nothing.
  CHECK(step(3, S::ok).empty());
  CHECK(step(4, S::ok).empty());
  CHECK(ms[0].state == HealthState::failure);
  CHECK(step(5, S::ok).empty());
  CHECK(ms[0].state == HealthState::healthy);
  CHECK_FALSE(ms[0].pending_action.has_value());
  CHECK(ms[0].history == std::vector<RepairEvent>{{1, A::reboot}, {2, A::reimage}});

  // Warnings alone never trigger an action.
  CHECK(step(6, S::warning).empty());

  const std::vector<WatchdogReport> unknown{{7, "w", "m9", S::ok}};
  CHECK_THROWS_AS(device_manager_step(ms, 7, unknown, cfg), Error);
  const std::vector<WatchdogReport> stale{{6, "w", "m0", S::ok}};
  CHECK_THROWS_AS(device_manager_step(ms, 7, stale, cfg), Error);
}

TEST_CASE("simulation") {
  SUBCASE("no faults and no false alarms keeps the fleet healthy") {
    SimConfig c;
    c.fleet = 10;
    c.horizon = 200;
    c.faults.watchdogs = {{"ping", 0.0, 0.0, 0.3}};
    const auto res = simulate(c);
    CHECK(res.log.records.size() == 2000);
    for (const auto& r : res.log.records) {
      CHECK(r.state == HealthState::healthy);
      CHECK_FALSE(r.action.has_value());
      CHECK(r.reports[0].second != S::error);
    }
    const auto pm = evaluate_policy(res.log, {});
    CHECK(pm.availability == 1.0);
    CHECK(pm.total_cost == 0.0);
  }

  SUBCASE("deterministic and equal to the serial reference") {
    const auto c = base_config(42);
    const auto a = simulate(c);
    const auto b = simulate(c);
    const auto r = reference::simulate(c);
    CHECK(a.log == b.log);
    CHECK(a.truth == b.truth);
    CHECK(a.log == r.log);
    CHECK(a.truth == r.truth);
    auto other = c;
    other.seed = 43;
    CHECK_FALSE(simulate(other).log == a.log);
  }

  SUBCASE("log is complete and ordered") {
    const auto c = base_config(5);
    const auto res = simulate(c);
    REQUIRE(res.log.records.size() == c.fleet * static_cast<std::size_t>(c.horizon));
    REQUIRE(res.truth.records.size() == res.log.records.size());
    for (std::size_t i = 0; i < res.log.records.size(); ++i) {
      const auto& r = res.log.records[i];
      CHECK(r.tick == static_cast<std::int64_t>(i / c.fleet));
      CHECK(r.machine == machine_id(i % c.fleet));
      CHECK(r.reports.size() == 2);
      if (r.action) CHECK(r.state == HealthState::failure);
      CHECK(res.truth.records[i].machine == r.machine);
      CHECK(res.truth.records[i].tick == r.tick);
    }
  }

  SUBCASE("persistent faults resolve within the ladder bound") {
    // fn = 0 and fp = 0: every fault is seen and nothing else triggers a repair.
    auto c = base_config(9);
    c.fleet = 30;
    c.horizon = 2000;
    c.faults.transient_rate = 0.0;
    c.faults.persistent_rate = 0.003;
    c.faults.watchdogs = {{"ping", 0.0, 0.0, 0.0}};
    const auto res = simulate(c);
    const auto pm = evaluate_policy(res.log, {});
    REQUIRE(pm.episodes > 50);
    const std::int64_t bound = 3 * (c.faults.latency.max() + 1) + c.policy.window;
    for (auto len : pm.episode_lengths) CHECK(static_cast<std::int64_t>(len) <= bound);
    // The three-step ladder alone: Reboot(1) + ReImage(3) + Replace(5).
    const auto typical = std::count_if(pm.episode_lengths.begin(), pm.episode_lengths.end(),
                                       [](std::size_t l) { return l <= 9; });
    CHECK(static_cast<double>(typical) / static_cast<double>(pm.episodes) >= 0.95);
  }

  SUBCASE("config validation") {
    auto c = base_config(1);
    c.fleet = 0;
    CHECK_THROWS_AS(simulate(c), Error);
    c = base_config(1);
    c.faults.transient_rate = 0.7;
    c.faults.persistent_rate = 0.7;
    CHECK_THROWS_AS(validate(c), Error);
    c = base_config(1);
    c.faults.watchdogs.push_back(c.faults.watchdogs[0]);
    CHECK_THROWS_AS(validate(c), Error);
    c = base_config(1);
    c.faults.latency.reboot = 0;
    CHECK_THROWS_AS(validate(c), Error);
  }
}

TEST_CASE("log, truth and config serialization") {
  const auto res = simulate(base_config(3));
  std::istringstream ls(serialize_repair_log(res.log));
  CHECK(parse_repair_log(ls) == res.log);
  std::istringstream ts(serialize_truth(res.truth));
  CHECK(parse_ground_truth(ts) == res.truth);

  const auto c = base_config(3);
  std::istringstream cs(serialize_sim_config(c));
  const auto back = parse_sim_config(cs);
  CHECK(serialize_sim_config(back) == serialize_sim_config(c));
  CHECK(simulate(back).log == res.log);

  std::ifstream f(std::string(OPSTAT_TEST_DATA) + "/reference_sim.conf");
  REQUIRE(f);
  const auto ref = parse_sim_config(f);
  CHECK(ref.fleet == 50);
  CHECK(ref.faults.watchdogs.size() == 3);

  std::istringstream bad_status("tick=0 machine=m0 state=Healthy action=- reports=a:Broken\n");
  CHECK_THROWS_AS(parse_repair_log(bad_status), ParseError);
  std::istringstream healthy_action("tick=0 machine=m0 state=Healthy action=Reboot reports=a:Error\n");
  CHECK_THROWS_AS(parse_repair_log(healthy_action), ParseError);
  std::istringstream bad_conf("fleet=10\nhorizon=-5\n");
  CHECK_THROWS_AS(parse_sim_config(bad_conf), Error);
}

TEST_CASE("watchdog false-positive estimate") {
  auto log = quiet_log();
  // A lone Error fixed by one Reboot.
  log.records[10] = rec(10, S::error, S::ok, HealthState::failure, A::reboot);

  auto est = estimate_watchdog_fpr(log);
  CHECK(est["a"].errors == 1);
  CHECK(est["a"].suspected_false == 1);
  CHECK(est["a"].clean_reports == 100);
  REQUIRE(est["a"].rate.has_value());
  CHECK(*est["a"].rate == doctest::Approx(0.01));
  CHECK_FALSE(est["b"].rate.has_value());  // never reported Error

  // A corroborated failure that escalates: ticks 50..53 are bad and the 20
  // ticks before them lose their clean status.
  log.records[50] = rec(50, S::error, S::error, HealthState::failure, A::reboot);
  log.records[51] = rec(51, S::error, S::ok, HealthState::failure, A::reimage);
  log.records[52] = rec(52, S::ok, S::ok, HealthState::failure);
  log.records[53] = rec(53, S::ok, S::ok, HealthState::failure);
  est = estimate_watchdog_fpr(log);
  CHECK(est["a"].clean_reports == 76);
  CHECK(est["a"].suspected_false == 1);
  CHECK(*est["a"].rate == doctest::Approx(1.0 / 76.0));
  REQUIRE(est["b"].rate.has_value());
  CHECK(*est["b"].rate == 0.0);

  GroundTruth truth;
  for (std::int64_t t = 0; t < 100; ++t) {
    truth.records.push_back({t, "m0", t >= 50 && t <= 52 ? TrueFault::persistent : TrueFault::none});
  }
  est = estimate_watchdog_fpr(log, &truth);
  CHECK(*est["a"].true_rate == doctest::Approx(1.0 / 97.0));
  CHECK(*est["b"].true_rate == 0.0);

  CHECK_THROWS_AS(estimate_watchdog_fpr(RepairLog{}), Error);
}

TEST_CASE("policy evaluation") {
  CHECK_THROWS_AS(evaluate_policy(RepairLog{}, {}), Error);
  auto pm = evaluate_policy(quiet_log(), {});
  CHECK(pm.availability == 1.0);
  CHECK(pm.total_cost == 0.0);
  CHECK(pm.episodes == 0);

  auto log = quiet_log();
  log.records[10] = rec(10, S::error, S::ok, HealthState::failure, A::reboot);
  log.records[11] = rec(11, S::error, S::ok, HealthState::failure, A::reimage);
  log.records[12] = rec(12, S::ok, S::ok, HealthState::failure);
  log.records[13] = rec(13, S::ok, S::ok, HealthState::failure);
  log.records[99] = rec(99, S::error, S::ok, HealthState::failure, A::reboot);  // open at the end
  pm = evaluate_policy(log, {});
  CHECK(pm.episodes == 2);
  CHECK(pm.episode_lengths == std::vector<std::size_t>{4, 1});
  CHECK(pm.availability == doctest::Approx(95.0 / 100.0));
  CHECK(pm.total_cost == doctest::Approx(1 + 5 + 1 + 5.0));
  CHECK(pm.mean_time_to_healthy == doctest::Approx(2.5));
  CHECK(pm.action_counts.at("Reboot") == 2);

  SUBCASE("conservation on a simulated log") {
    const auto res = simulate(base_config(11));
    CostModel costs;
    costs.downtime_per_tick = 2.0;
    const auto m = evaluate_policy(res.log, costs);
    std::size_t failure = 0, actions = 0;
    double cost = 0.0;
    for (const auto& r : res.log.records) {
      failure += r.state == HealthState::failure;
      if (r.action) {
        ++actions;
        cost += costs.of(*r.action);
      }
    }
    CHECK(m.failure_ticks == failure);
    CHECK(m.machine_ticks == res.log.records.size());
    CHECK(std::accumulate(m.episode_lengths.begin(), m.episode_lengths.end(), std::size_t{0}) == failure);
    std::size_t counted = 0;
    for (const auto& [k, n] : m.action_counts) counted += n;
    CHECK(counted == actions);
    CHECK(m.total_cost == doctest::Approx(cost + 2.0 * static_cast<double>(failure)));
  }
}
