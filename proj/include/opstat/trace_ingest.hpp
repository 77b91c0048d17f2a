#pragma once

// Packet-header traces: parsing, per-host channel grouping, delay pairing,
// the virtual random channel, and a Poisson trace generator with planted
// dependencies.

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace opstat {

enum class Direction { in, out };

std::string_view to_string(Direction d);

struct PacketRecord {
  double timestamp = 0.0;
  std::string host;
  std::string remote;
  std::string service;
  Direction direction = Direction::in;
};

/// Channel key: direction relative to the host, service label, remote id.
struct ChannelId {
  Direction direction = Direction::in;
  std::string service;
  std::string remote;

  auto operator<=>(const ChannelId&) const = default;
  bool operator==(const ChannelId&) const = default;
};

/// "in:http:client7"
std::string format_channel(const ChannelId& id);

struct ChannelSeries {
  ChannelId id;
  std::vector<double> times;  // strictly ascending

  bool operator==(const ChannelSeries&) const = default;
};

struct HostTrace {
  std::string host;
  std::map<ChannelId, ChannelSeries> channels;
  double start = 0.0;     // earliest timestamp, 0 for an empty trace
  double duration = 0.0;  // latest - earliest, 0 with fewer than two events

  std::size_t event_count() const;
  std::vector<const ChannelSeries*> inputs() const;
  std::vector<const ChannelSeries*> outputs() const;

  bool operator==(const HostTrace&) const = default;
};

/// true for [A-Za-z0-9._-]+
bool valid_token(std::string_view s);

/// Parses one record line. Throws ParseError naming the line and field.
PacketRecord parse_record(std::string_view line, std::size_t line_no);

/// Reads newline-delimited `ts=... host=... remote=... service=... dir=...`
/// records. Blank lines and lines starting with '#' are skipped.
HostTrace parse_trace(std::istream& in);
HostTrace parse_trace_file(const std::string& path);

/// Groups records into a HostTrace. All records must share one host.
HostTrace build_trace(std::span<const PacketRecord> records);

/// Writes one record per event ordered by (time, channel).
std::string serialize_trace(const HostTrace& trace);

/// For every output time, the gap back to the latest input at or before it,
/// kept when it does not exceed the horizon. Both inputs must be sorted.
std::vector<double> delay_samples(std::span<const double> input, std::span<const double> output,
                                  double horizon);

/// Draws n_out departures uniformly on [start, start + duration), sorts them
/// and pairs them against the input channel with delay_samples.
std::vector<double> virtual_random_delays(std::span<const double> input, std::size_t n_out,
                                          double start, double duration, double horizon,
                                          std::uint64_t seed);

struct SynthChannel {
  ChannelId id;
  double rate = 0.0;  // Poisson events per second
};

struct SynthDependency {
  ChannelId input;
  ChannelId output;
  double mean_delay = 0.05;
  double response_probability = 1.0;
};

struct SynthSpec {
  std::string host = "host0";
  double duration = 0.0;
  std::vector<SynthChannel> channels;
  std::vector<SynthDependency> dependencies;
  std::uint64_t seed = 0;
};

struct PlantedDependency {
  std::string host;
  ChannelId input;
  ChannelId output;

  auto operator<=>(const PlantedDependency&) const = default;
  bool operator==(const PlantedDependency&) const = default;
};

struct SynthTrace {
  HostTrace trace;
  std::vector<PlantedDependency> truth;
};

/// Throws opstat::Error when the spec breaks its invariants.
void validate(const SynthSpec& spec);

SynthTrace synth_trace(const SynthSpec& spec);

/// Spec file: `key=value` tokens per line. Header lines `host=`, `duration=`,
/// `seed=`; `channel dir= service= remote= rate=`;
/// `dependency in_service= in_remote= out_service= out_remote= mean= prob=`.
SynthSpec parse_synth_spec(std::istream& in);
std::string serialize_synth_spec(const SynthSpec& spec);

/// Ground-truth sidecar, one `host= in= out=` line per planted pair.
std::string serialize_truth(std::span<const PlantedDependency> truth);
std::vector<PlantedDependency> parse_truth(std::istream& in);

/// Shortest round-trip decimal form.
std::string format_double(double x);

}  // namespace opstat
