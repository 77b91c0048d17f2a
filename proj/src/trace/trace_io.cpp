#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include "../text_util.hpp"
#include "opstat/error.hpp"
#include "opstat/trace_ingest.hpp"

namespace opstat {

std::string_view to_string(Direction d) { return d == Direction::in ? "in" : "out"; }

std::string format_channel(const ChannelId& id) {
  return std::string(to_string(id.direction)) + ":" + id.service + ":" + id.remote;
}

std::string format_double(double x) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (ec != std::errc{}) throw Error("format_double: conversion failed");
  return std::string(buf.data(), ptr);
}

bool valid_token(std::string_view s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
           c == '.' || c == '_' || c == '-';
  });
}

std::size_t HostTrace::event_count() const {
  std::size_t n = 0;
  for (const auto& [id, series] : channels) n += series.times.size();
  return n;
}

std::vector<const ChannelSeries*> HostTrace::inputs() const {
  std::vector<const ChannelSeries*> out;
  for (const auto& [id, series] : channels) {
    if (id.direction == Direction::in) out.push_back(&series);
  }
  return out;
}

std::vector<const ChannelSeries*> HostTrace::outputs() const {
  std::vector<const ChannelSeries*> out;
  for (const auto& [id, series] : channels) {
    if (id.direction == Direction::out) out.push_back(&series);
  }
  return out;
}

PacketRecord parse_record(std::string_view line, std::size_t line_no) {
  static constexpr std::array<std::string_view, 5> kFields{"ts", "host", "remote", "service",
                                                           "dir"};
  const auto tokens = detail::split_ws(line);
  if (tokens.size() != kFields.size()) {
    throw ParseError(line_no,
                     std::string(tokens.size() < kFields.size() ? kFields[tokens.size()] : "record"),
                     "expected 5 fields, got " + std::to_string(tokens.size()));
  }
  PacketRecord rec;
  for (std::size_t i = 0; i < kFields.size(); ++i) {
    const auto kv = detail::split_kv(tokens[i], line_no);
    if (kv.key != kFields[i]) {
      throw ParseError(line_no, std::string(kFields[i]),
                       "expected field '" + std::string(kFields[i]) + "', found '" +
                           std::string(kv.key) + "'");
    }
    const std::string field(kFields[i]);
    switch (i) {
      case 0: {
        double ts = 0.0;
        if (!detail::parse_double(kv.value, ts) || !std::isfinite(ts) || ts < 0.0) {
          throw ParseError(line_no, field, "timestamp must be a finite number >= 0");
        }
        rec.timestamp = ts;
        break;
      }
      case 4:
        if (kv.value == "in") {
          rec.direction = Direction::in;
        } else if (kv.value == "out") {
          rec.direction = Direction::out;
        } else {
          throw ParseError(line_no, field, "must be 'in' or 'out', got '" +
                                               std::string(kv.value) + "'");
        }
        break;
      default:
        if (!valid_token(kv.value)) {
          throw ParseError(line_no, field, "invalid identifier '" + std::string(kv.value) + "'");
        }
        (i == 1 ? rec.host : i == 2 ? rec.remote : rec.service) = std::string(kv.value);
    }
  }
  if (rec.host == rec.remote) throw ParseError(line_no, "remote", "remote equals host");
  return rec;
}

namespace {

class TraceBuilder {
 public:
  // Returns false when the record's host differs from the established one.
  bool add(const PacketRecord& rec) {
    if (empty_) {
      host_ = rec.host;
      empty_ = false;
    } else if (rec.host != host_) {
      return false;
    }
    ChannelId id{rec.direction, rec.service, rec.remote};
    buckets_[id].push_back(rec.timestamp);
    return true;
  }

  const std::string& host() const { return host_; }

  HostTrace finish() {
    HostTrace trace;
    trace.host = host_;
    double lo = 0.0, hi = 0.0;
    bool first = true;
    for (auto& [id, times] : buckets_) {
      std::sort(times.begin(), times.end());
      times.erase(std::unique(times.begin(), times.end()), times.end());
      if (first) {
        lo = times.front();
        hi = times.back();
        first = false;
      } else {
        lo = std::min(lo, times.front());
        hi = std::max(hi, times.back());
      }
      trace.channels.emplace(id, ChannelSeries{id, std::move(times)});
    }
    trace.start = lo;
    trace.duration = hi - lo;
    return trace;
  }

 private:
  bool empty_ = true;
  std::string host_;
  std::map<ChannelId, std::vector<double>> buckets_;
};

}  // namespace

HostTrace parse_trace(std::istream& in) {
  TraceBuilder builder;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::skippable(line)) continue;
    const auto rec = parse_record(line, line_no);
    if (!builder.add(rec)) {
      throw ParseError(line_no, "host",
                       "mixed host ids ('" + builder.host() + "' and '" + rec.host + "')");
    }
  }
  return builder.finish();
}

HostTrace parse_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open trace file '" + path + "'");
  return parse_trace(in);
}

HostTrace build_trace(std::span<const PacketRecord> records) {
  TraceBuilder builder;
  for (const auto& rec : records) {
    if (!builder.add(rec)) throw Error("mixed host ids in one trace");
  }
  return builder.finish();
}

std::string serialize_trace(const HostTrace& trace) {
  struct Event {
    double t;
    const ChannelId* id;
  };
  std::vector<Event> events;
  events.reserve(trace.event_count());
  for (const auto& [id, series] : trace.channels) {
    for (double t : series.times) events.push_back({t, &id});
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const Event& a, const Event& b) { return a.t < b.t; });
  std::string out;
  out.reserve(events.size() * 64);
  for (const auto& e : events) {
    out += "ts=";
    out += format_double(e.t);
    out += " host=";
    out += trace.host;
    out += " remote=";
    out += e.id->remote;
    out += " service=";
    out += e.id->service;
    out += " dir=";
    out += to_string(e.id->direction);
    out += '\n';
  }
  return out;
}

}  // namespace opstat
