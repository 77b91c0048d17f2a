#include <algorithm>
#include <cmath>
#include <istream>
#include <set>
#include <sstream>

#include "../text_util.hpp"
#include "opstat/error.hpp"
#include "opstat/rng.hpp"
#include "opstat/trace_ingest.hpp"

namespace opstat {

void validate(const SynthSpec& spec) {
  if (!valid_token(spec.host)) throw Error("synth spec: invalid host id '" + spec.host + "'");
  if (!(spec.duration >= 0.0) || !std::isfinite(spec.duration)) {
    throw Error("synth spec: duration must be finite and >= 0");
  }
  std::set<ChannelId> declared;
  for (const auto& ch : spec.channels) {
    if (!valid_token(ch.id.service) || !valid_token(ch.id.remote)) {
      throw Error("synth spec: invalid channel " + format_channel(ch.id));
    }
    if (ch.id.remote == spec.host) throw Error("synth spec: channel remote equals host");
    if (!(ch.rate >= 0.0) || !std::isfinite(ch.rate)) {
      throw Error("synth spec: channel rate must be finite and >= 0");
    }
    if (!declared.insert(ch.id).second) {
      throw Error("synth spec: duplicate channel " + format_channel(ch.id));
    }
  }
  for (const auto& dep : spec.dependencies) {
    if (dep.input.direction != Direction::in || dep.output.direction != Direction::out) {
      throw Error("synth spec: dependencies run from an input channel to an output channel");
    }
    if (!declared.contains(dep.input) || !declared.contains(dep.output)) {
      throw Error("synth spec: dependency references an undeclared channel");
    }
    if (!(dep.mean_delay > 0.0)) throw Error("synth spec: mean delay must be positive");
    if (!(dep.response_probability > 0.0 && dep.response_probability <= 1.0)) {
      throw Error("synth spec: response probability must lie in (0, 1]");
    }
  }
}

namespace {

std::vector<double> poisson_times(double rate, double duration, Rng& rng) {
  std::vector<double> times;
  if (rate <= 0.0) return times;
  double t = rng.exponential(1.0 / rate);
  while (t < duration) {
    times.push_back(t);
    t += rng.exponential(1.0 / rate);
  }
  return times;
}

constexpr std::uint64_t kResponseStream = 0x5eed0001;

}  // namespace

SynthTrace synth_trace(const SynthSpec& spec) {
  validate(spec);
  SynthTrace out;
  out.trace.host = spec.host;
  if (spec.duration <= 0.0) return out;

  std::map<ChannelId, std::vector<double>> base;
  for (std::size_t c = 0; c < spec.channels.size(); ++c) {
    Rng rng(derive_seed(spec.seed, {c}));
    base[spec.channels[c].id] = poisson_times(spec.channels[c].rate, spec.duration, rng);
  }
  auto events = base;
  for (std::size_t d = 0; d < spec.dependencies.size(); ++d) {
    const auto& dep = spec.dependencies[d];
    Rng rng(derive_seed(spec.seed, {kResponseStream, d}));
    auto& sink = events[dep.output];
    for (double t_in : base[dep.input]) {
      if (!rng.bernoulli(dep.response_probability)) continue;
      const double t_out = t_in + rng.exponential(dep.mean_delay);
      if (t_out < spec.duration) sink.push_back(t_out);
    }
    out.truth.push_back({spec.host, dep.input, dep.output});
  }

  std::vector<PacketRecord> records;
  for (const auto& [id, times] : events) {
    for (double t : times) records.push_back({t, spec.host, id.remote, id.service, id.direction});
  }
  out.trace = build_trace(records);
  out.trace.host = spec.host;
  std::sort(out.truth.begin(), out.truth.end());
  out.truth.erase(std::unique(out.truth.begin(), out.truth.end()), out.truth.end());
  return out;
}

namespace {

ChannelId channel_from(Direction dir, std::string_view service, std::string_view remote,
                       std::size_t line_no) {
  if (!valid_token(service)) throw ParseError(line_no, "service", "invalid identifier");
  if (!valid_token(remote)) throw ParseError(line_no, "remote", "invalid identifier");
  return {dir, std::string(service), std::string(remote)};
}

ChannelId parse_channel_ref(std::string_view text, std::size_t line_no, std::string_view field) {
  const auto parts = detail::split(text, ':');
  if (parts.size() != 3 || (parts[0] != "in" && parts[0] != "out")) {
    throw ParseError(line_no, std::string(field), "expected dir:service:remote");
  }
  return channel_from(parts[0] == "in" ? Direction::in : Direction::out, parts[1], parts[2],
                      line_no);
}

}  // namespace

SynthSpec parse_synth_spec(std::istream& in) {
  SynthSpec spec;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::skippable(line)) continue;
    auto tokens = detail::split_ws(line);
    const std::string_view head = tokens.front();
    if (head == "channel") {
      std::string_view dir, service, remote;
      double rate = -1.0;
      for (std::size_t i = 1; i < tokens.size(); ++i) {
        const auto kv = detail::split_kv(tokens[i], line_no);
        if (kv.key == "dir") dir = kv.value;
        else if (kv.key == "service") service = kv.value;
        else if (kv.key == "remote") remote = kv.value;
        else if (kv.key == "rate") rate = detail::require_double(kv, line_no);
        else throw ParseError(line_no, std::string(kv.key), "unknown channel field");
      }
      if (dir != "in" && dir != "out") throw ParseError(line_no, "dir", "must be 'in' or 'out'");
      if (rate < 0.0) throw ParseError(line_no, "rate", "missing or negative");
      spec.channels.push_back(
          {channel_from(dir == "in" ? Direction::in : Direction::out, service, remote, line_no),
           rate});
    } else if (head == "dependency") {
      SynthDependency dep;
      std::string_view in_s, in_r, out_s, out_r;
      for (std::size_t i = 1; i < tokens.size(); ++i) {
        const auto kv = detail::split_kv(tokens[i], line_no);
        if (kv.key == "in_service") in_s = kv.value;
        else if (kv.key == "in_remote") in_r = kv.value;
        else if (kv.key == "out_service") out_s = kv.value;
        else if (kv.key == "out_remote") out_r = kv.value;
        else if (kv.key == "mean") dep.mean_delay = detail::require_double(kv, line_no);
        else if (kv.key == "prob") dep.response_probability = detail::require_double(kv, line_no);
        else throw ParseError(line_no, std::string(kv.key), "unknown dependency field");
      }
      dep.input = channel_from(Direction::in, in_s, in_r, line_no);
      dep.output = channel_from(Direction::out, out_s, out_r, line_no);
      spec.dependencies.push_back(std::move(dep));
    } else {
      for (const auto token : tokens) {
        const auto kv = detail::split_kv(token, line_no);
        if (kv.key == "host") spec.host = std::string(kv.value);
        else if (kv.key == "duration") spec.duration = detail::require_double(kv, line_no);
        else if (kv.key == "seed") spec.seed = detail::require_u64(kv, line_no);
        else throw ParseError(line_no, std::string(kv.key), "unknown spec field");
      }
    }
  }
  validate(spec);
  return spec;
}

std::string serialize_synth_spec(const SynthSpec& spec) {
  std::ostringstream os;
  os << "host=" << spec.host << " duration=" << format_double(spec.duration)
     << " seed=" << spec.seed << '\n';
  for (const auto& ch : spec.channels) {
    os << "channel dir=" << to_string(ch.id.direction) << " service=" << ch.id.service
       << " remote=" << ch.id.remote << " rate=" << format_double(ch.rate) << '\n';
  }
  for (const auto& dep : spec.dependencies) {
    os << "dependency in_service=" << dep.input.service << " in_remote=" << dep.input.remote
       << " out_service=" << dep.output.service << " out_remote=" << dep.output.remote
       << " mean=" << format_double(dep.mean_delay)
       << " prob=" << format_double(dep.response_probability) << '\n';
  }
  return os.str();
}

std::string serialize_truth(std::span<const PlantedDependency> truth) {
  std::string out;
  for (const auto& t : truth) {
    out += "host=" + t.host + " input=" + format_channel(t.input) +
           " output=" + format_channel(t.output) + "\n";
  }
  return out;
}

std::vector<PlantedDependency> parse_truth(std::istream& in) {
  std::vector<PlantedDependency> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::skippable(line)) continue;
    PlantedDependency dep;
    bool have_in = false, have_out = false;
    for (const auto token : detail::split_ws(line)) {
      const auto kv = detail::split_kv(token, line_no);
      if (kv.key == "host") {
        dep.host = std::string(kv.value);
      } else if (kv.key == "input") {
        dep.input = parse_channel_ref(kv.value, line_no, "input");
        have_in = true;
      } else if (kv.key == "output") {
        dep.output = parse_channel_ref(kv.value, line_no, "output");
        have_out = true;
      } else {
        throw ParseError(line_no, std::string(kv.key), "unknown field");
      }
    }
    if (dep.host.empty() || !have_in || !have_out) {
      throw ParseError(line_no, "record", "expected host=, input= and output=");
    }
    out.push_back(std::move(dep));
  }
  return out;
}

}  // namespace opstat
