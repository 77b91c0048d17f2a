#include <algorithm>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "opstat/error.hpp"
#include "opstat/rng.hpp"
#include "opstat/stat_engine.hpp"
#include "opstat/trace_ingest.hpp"

using namespace opstat;

namespace {

HostTrace parse(const std::string& text) {
  std::istringstream is(text);
  return parse_trace(is);
}

// Latest-preceding-input pairing by exhaustive scan.
std::vector<double> oracle_delays(const std::vector<double>& in, const std::vector<double>& out,
                                  double horizon) {
  std::vector<double> d;
  for (double t : out) {
    double best = -1.0;
    for (double s : in) {
      if (s <= t) best = std::max(best, s);
    }
    if (best >= 0.0 && t - best <= horizon) d.push_back(t - best);
  }
  return d;
}

ChannelId ch(Direction d, std::string svc, std::string remote) { return {d, std::move(svc), std::move(remote)}; }

}  // namespace

TEST_CASE("parse_trace") {
  CHECK(parse("").channels.empty());
  CHECK(parse("# comment only\n\n").event_count() == 0);

  const auto t = parse(
      "ts=1.0 host=h remote=x service=http dir=in\n"
      "ts=1.2 host=h remote=y service=dns dir=out\n");
  CHECK(t.host == "h");
  REQUIRE(t.channels.size() == 2);
  CHECK(t.channels.at(ch(Direction::in, "http", "x")).times == std::vector{1.0});
  CHECK(t.channels.at(ch(Direction::out, "dns", "y")).times == std::vector{1.2});
  CHECK(t.start == 1.0);
  CHECK(t.duration == doctest::Approx(0.2));
  CHECK(t.inputs().size() == 1);
  CHECK(t.outputs().size() == 1);

  SUBCASE("bad direction names its line") {
    try {
      parse("ts=1.0 host=h remote=x service=http dir=in\nts=2 host=h remote=x service=http dir=sideways\n");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
      CHECK(e.field() == "dir");
    }
  }
  CHECK_THROWS_AS(parse("ts=abc host=h remote=x service=http dir=in\n"), ParseError);
  CHECK_THROWS_AS(parse("host=h ts=1 remote=x service=http dir=in\n"), ParseError);
  CHECK_THROWS_AS(parse("ts=1 host=h remote=h service=http dir=in\n"), ParseError);
  CHECK_THROWS_AS(parse("ts=1 host=h remote=x service=http\n"), ParseError);
  CHECK_THROWS_AS(parse("ts=1 host=h remote=x service=http dir=in\nts=2 host=g remote=x service=http dir=in\n"),
                  Error);
}

TEST_CASE("trace serialization round-trips") {
  SynthSpec spec;
  spec.duration = 50;
  spec.seed = 4;
  spec.channels = {{ch(Direction::in, "http", "c1"), 2.0}, {ch(Direction::out, "sql", "db"), 1.0}};
  spec.dependencies = {{spec.channels[0].id, spec.channels[1].id, 0.05, 0.8}};
  const auto s = synth_trace(spec);
  const auto text = serialize_trace(s.trace);
  const auto back = parse(text);
  CHECK(back == s.trace);
  CHECK(serialize_trace(back) == text);
}

TEST_CASE("delay_samples") {
  CHECK(delay_samples(std::vector{1.0, 5.0}, std::vector{1.2, 1.4, 5.1}, 1.0) ==
        std::vector<double>{1.2 - 1.0, 1.4 - 1.0, 5.1 - 5.0});
  CHECK(delay_samples(std::vector{1.0}, std::vector{0.5}, 1.0).empty());
  CHECK(delay_samples(std::vector{1.0}, std::vector{3.0}, 1.0).empty());
  CHECK_THROWS_AS(delay_samples(std::vector{1.0}, std::vector{3.0}, 0.0), Error);

  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> in(rng.below(30)), out(rng.below(30));
    for (auto& x : in) x = std::round(rng.uniform(0, 10) * 4) / 4;  // ties with outputs on purpose
    for (auto& x : out) x = std::round(rng.uniform(0, 10) * 4) / 4;
    std::sort(in.begin(), in.end());
    std::sort(out.begin(), out.end());
    CHECK(delay_samples(in, out, 0.75) == oracle_delays(in, out, 0.75));
  }
}

TEST_CASE("virtual random delays") {
  const std::vector<double> in{1.0, 2.0};
  CHECK(virtual_random_delays(in, 0, 0, 10, 1, 1).empty());
  CHECK(virtual_random_delays(in, 50, 0, 10, 1, 7) == virtual_random_delays(in, 50, 0, 10, 1, 7));

  std::vector<double> dense;
  Rng rng(1);
  for (double t = rng.exponential(0.1); t < 100.0; t += rng.exponential(0.1)) dense.push_back(t);
  const auto d = virtual_random_delays(dense, 1000, 0, 100, 1.0, 2);
  CHECK(d.size() >= 990);
  for (double x : d) CHECK((x >= 0.0 && x <= 1.0));
}

TEST_CASE("synth_trace") {
  SynthSpec spec;
  CHECK(synth_trace(spec).trace.channels.empty());  // duration 0

  spec.duration = 500;
  spec.seed = 8;
  const auto a = ch(Direction::in, "http", "client");
  const auto b = ch(Direction::out, "sql", "db");
  spec.channels = {{a, 1.0}, {b, 0.0}};
  spec.dependencies = {{a, b, 0.05, 1.0}};
  const auto s = synth_trace(spec);
  REQUIRE(s.truth.size() == 1);
  CHECK(s.truth[0] == PlantedDependency{"host0", a, b});
  CHECK(synth_trace(spec).trace == s.trace);

  const auto& in = s.trace.channels.at(a).times;
  const auto& out = s.trace.channels.at(b).times;
  const auto d = delay_samples(in, out, 1.0);
  const auto fast = std::count_if(d.begin(), d.end(), [](double x) { return x < 0.2; });
  CHECK(static_cast<double>(fast) / static_cast<double>(d.size()) >= 0.9);

  SUBCASE("invalid specs") {
    auto bad = spec;
    bad.dependencies = {{b, a, 0.05, 1.0}};
    CHECK_THROWS_AS(synth_trace(bad), Error);
    bad = spec;
    bad.channels[0].rate = -1;
    CHECK_THROWS_AS(synth_trace(bad), Error);
    bad = spec;
    bad.dependencies[0].response_probability = 0.0;
    CHECK_THROWS_AS(synth_trace(bad), Error);
    bad = spec;
    bad.channels.push_back(bad.channels[0]);
    CHECK_THROWS_AS(synth_trace(bad), Error);
  }

  SUBCASE("independent channels give uniform KS p-values") {
    std::vector<double> p;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      SynthSpec null_spec;
      null_spec.duration = 300;
      null_spec.seed = seed;
      null_spec.channels = {{ch(Direction::in, "http", "c"), 1.0}, {ch(Direction::out, "sql", "d"), 1.0}};
      const auto t = synth_trace(null_spec).trace;
      const auto real = delay_samples(t.channels.begin()->second.times,
                                      t.channels.rbegin()->second.times, 1.0);
      const auto virt = virtual_random_delays(t.channels.begin()->second.times,
                                              t.channels.rbegin()->second.times.size(), t.start,
                                              t.duration, 1.0, derive_seed(seed, {99}));
      p.push_back(ks_test(real, virt, 0.05).p_value);
    }
    std::sort(p.begin(), p.end());
    double dist = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      dist = std::max({dist, std::abs(p[i] - static_cast<double>(i) / p.size()),
                       std::abs(p[i] - static_cast<double>(i + 1) / p.size())});
    }
    CHECK(dist < 0.25);  // one-sample KS critical value at n=40, alpha=0.01 is ~0.25
  }
}

TEST_CASE("synth spec and truth files round-trip") {
  SynthSpec spec;
  spec.host = "web";
  spec.duration = 12.5;
  spec.seed = 77;
  const auto a = ch(Direction::in, "http", "c1");
  const auto b = ch(Direction::out, "sql", "db");
  spec.channels = {{a, 1.5}, {b, 0.25}};
  spec.dependencies = {{a, b, 0.05, 0.9}};
  std::istringstream is(serialize_synth_spec(spec));
  const auto back = parse_synth_spec(is);
  CHECK(serialize_synth_spec(back) == serialize_synth_spec(spec));
  CHECK(back.seed == 77);

  const std::vector<PlantedDependency> truth{{"web", a, b}};
  std::istringstream ts(serialize_truth(truth));
  CHECK(parse_truth(ts) == truth);

  std::istringstream bad("host=web duration=x seed=1\n");
  CHECK_THROWS_AS(parse_synth_spec(bad), ParseError);
}
