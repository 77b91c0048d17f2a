#include <istream>
#include <sstream>
#include <string>

#include "../text_util.hpp"
#include "opstat/error.hpp"
#include "opstat/repair_sim.hpp"
#include "opstat/trace_ingest.hpp"

namespace opstat {

namespace {

using detail::KeyValue;

// Reads `key=value` tokens that must appear in exactly the given order.
std::vector<KeyValue> ordered_fields(std::string_view line, std::size_t line_no,
                                     std::initializer_list<std::string_view> keys) {
  const auto tokens = detail::split_ws(line);
  if (tokens.size() != keys.size()) {
    throw ParseError(line_no, "", "expected " + std::to_string(keys.size()) + " fields, got " +
                                      std::to_string(tokens.size()));
  }
  std::vector<KeyValue> out;
  std::size_t i = 0;
  for (auto key : keys) {
    auto kv = detail::split_kv(tokens[i++], line_no);
    if (kv.key != key) throw ParseError(line_no, std::string(kv.key), "expected field '" + std::string(key) + "'");
    out.push_back(kv);
  }
  return out;
}

std::int64_t require_tick(const KeyValue& kv, std::size_t line_no) {
  std::int64_t v = 0;
  if (!detail::parse_i64(kv.value, v) || v < 0) {
    throw ParseError(line_no, std::string(kv.key), "not a tick: '" + std::string(kv.value) + "'");
  }
  return v;
}

template <class F>
auto wrap(std::size_t line_no, const char* field, F&& f) {
  try {
    return f();
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(line_no, field, e.what());
  }
}

}  // namespace

std::string serialize_repair_log(const RepairLog& log) {
  std::string out;
  for (const auto& r : log.records) {
    out += "tick=" + std::to_string(r.tick) + " machine=" + r.machine +
           " state=" + std::string(to_string(r.state)) +
           " action=" + (r.action ? std::string(to_string(*r.action)) : "-") + " reports=";
    for (std::size_t i = 0; i < r.reports.size(); ++i) {
      if (i) out += ';';
      out += r.reports[i].first + ':' + std::string(to_string(r.reports[i].second));
    }
    out += '\n';
  }
  return out;
}

RepairLog parse_repair_log(std::istream& in) {
  RepairLog log;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::skippable(line)) continue;
    const auto f = ordered_fields(line, line_no, {"tick", "machine", "state", "action", "reports"});
    LogRecord rec;
    rec.tick = require_tick(f[0], line_no);
    if (!valid_token(f[1].value)) throw ParseError(line_no, "machine", "invalid machine id");
    rec.machine = std::string(f[1].value);
    rec.state = wrap(line_no, "state", [&] { return parse_health_state(f[2].value); });
    if (f[3].value != "-") {
      rec.action = wrap(line_no, "action", [&] { return parse_repair_action(f[3].value); });
    }
    if (!f[4].value.empty()) {
      for (auto item : detail::split(f[4].value, ';')) {
        const auto colon = item.find(':');
        if (colon == std::string_view::npos || !valid_token(item.substr(0, colon))) {
          throw ParseError(line_no, "reports", "expected watchdog:status, got '" + std::string(item) + "'");
        }
        rec.reports.emplace_back(std::string(item.substr(0, colon)),
                                 wrap(line_no, "reports", [&] {
                                   return parse_watchdog_status(item.substr(colon + 1));
                                 }));
      }
    }
    if (rec.state == HealthState::healthy && rec.action) {
      throw ParseError(line_no, "action", "action issued to a Healthy machine");
    }
    log.records.push_back(std::move(rec));
  }
  return log;
}

std::string serialize_truth(const GroundTruth& truth) {
  std::string out;
  for (const auto& r : truth.records) {
    out += "tick=" + std::to_string(r.tick) + " machine=" + r.machine +
           " fault=" + std::string(to_string(r.fault)) + '\n';
  }
  return out;
}

GroundTruth parse_ground_truth(std::istream& in) {
  GroundTruth truth;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::skippable(line)) continue;
    const auto f = ordered_fields(line, line_no, {"tick", "machine", "fault"});
    TruthRecord r;
    r.tick = require_tick(f[0], line_no);
    r.machine = std::string(f[1].value);
    r.fault = wrap(line_no, "fault", [&] { return parse_true_fault(f[2].value); });
    truth.records.push_back(std::move(r));
  }
  return truth;
}

SimConfig parse_sim_config(std::istream& in) {
  SimConfig c;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::skippable(line)) continue;
    auto tokens = detail::split_ws(line);
    std::string_view record;
    if (tokens.front().find('=') == std::string_view::npos) {
      record = tokens.front();
      tokens.erase(tokens.begin());
    }
    if (record.empty()) {
      for (auto tok : tokens) {
        const auto kv = detail::split_kv(tok, line_no);
        if (kv.key == "fleet") {
          c.fleet = detail::require_u64(kv, line_no);
        } else if (kv.key == "horizon") {
          c.horizon = static_cast<std::int64_t>(detail::require_u64(kv, line_no));
        } else if (kv.key == "seed") {
          c.seed = detail::require_u64(kv, line_no);
        } else if (kv.key == "transient_rate") {
          c.faults.transient_rate = detail::require_double(kv, line_no);
        } else if (kv.key == "persistent_rate") {
          c.faults.persistent_rate = detail::require_double(kv, line_no);
        } else if (kv.key == "policy") {
          c.policy.kind = wrap(line_no, "policy", [&] { return parse_policy_kind(kv.value); });
        } else if (kv.key == "window") {
          c.policy.window = static_cast<std::int64_t>(detail::require_u64(kv, line_no));
        } else {
          throw ParseError(line_no, std::string(kv.key), "unknown key");
        }
      }
    } else if (record == "watchdog") {
      WatchdogSpec w;
      for (auto tok : tokens) {
        const auto kv = detail::split_kv(tok, line_no);
        if (kv.key == "name") {
          w.name = std::string(kv.value);
        } else if (kv.key == "fp") {
          w.false_positive = detail::require_double(kv, line_no);
        } else if (kv.key == "fn") {
          w.false_negative = detail::require_double(kv, line_no);
        } else if (kv.key == "warn") {
          w.warning_rate = detail::require_double(kv, line_no);
        } else {
          throw ParseError(line_no, std::string(kv.key), "unknown watchdog key");
        }
      }
      if (w.name.empty()) throw ParseError(line_no, "name", "watchdog needs a name");
      c.faults.watchdogs.push_back(std::move(w));
    } else if (record == "efficacy" || record == "latency") {
      for (auto tok : tokens) {
        const auto kv = detail::split_kv(tok, line_no);
        const RepairAction a = wrap(line_no, "action", [&] {
          if (kv.key == "do_nothing") return RepairAction::do_nothing;
          if (kv.key == "reimage") return RepairAction::reimage;
          if (kv.key == "reboot") return RepairAction::reboot;
          if (kv.key == "replace") return RepairAction::replace;
          throw Error("unknown action key '" + std::string(kv.key) + "'");
        });
        if (record == "efficacy") {
          const double v = detail::require_double(kv, line_no);
          auto& e = c.faults.efficacy;
          (a == RepairAction::reboot ? e.reboot : a == RepairAction::reimage ? e.reimage
                                                : a == RepairAction::replace ? e.replace
                                                                             : e.do_nothing) = v;
        } else {
          const auto v = static_cast<std::int64_t>(detail::require_u64(kv, line_no));
          auto& l = c.faults.latency;
          (a == RepairAction::reboot ? l.reboot : a == RepairAction::reimage ? l.reimage
                                                : a == RepairAction::replace ? l.replace
                                                                             : l.do_nothing) = v;
        }
      }
    } else {
      throw ParseError(line_no, std::string(record), "unknown record type");
    }
  }
  validate(c);
  return c;
}

std::string serialize_sim_config(const SimConfig& c) {
  std::ostringstream os;
  const auto& f = c.faults;
  os << "fleet=" << c.fleet << " horizon=" << c.horizon << " seed=" << c.seed << '\n'
     << "transient_rate=" << format_double(f.transient_rate)
     << " persistent_rate=" << format_double(f.persistent_rate) << '\n'
     << "policy=" << to_string(c.policy.kind) << " window=" << c.policy.window << '\n'
     << "efficacy reboot=" << format_double(f.efficacy.reboot)
     << " reimage=" << format_double(f.efficacy.reimage)
     << " replace=" << format_double(f.efficacy.replace)
     << " do_nothing=" << format_double(f.efficacy.do_nothing) << '\n'
     << "latency reboot=" << f.latency.reboot << " reimage=" << f.latency.reimage
     << " replace=" << f.latency.replace << " do_nothing=" << f.latency.do_nothing << '\n';
  for (const auto& w : f.watchdogs) {
    os << "watchdog name=" << w.name << " fp=" << format_double(w.false_positive)
       << " fn=" << format_double(w.false_negative) << " warn=" << format_double(w.warning_rate)
       << '\n';
  }
  return os.str();
}

}  // namespace opstat
