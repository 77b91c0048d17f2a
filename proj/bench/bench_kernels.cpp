// Parallel kernels against their serial references.

#include <benchmark/benchmark.h>

#include "opstat/dep_discovery.hpp"
#include "opstat/repair_sim.hpp"
#include "opstat/rng.hpp"
#include "opstat/slo_diagnosis.hpp"
#include "opstat/stat_engine.hpp"
#include "opstat/trace_ingest.hpp"

using namespace opstat;

namespace {

std::pair<std::vector<double>, std::vector<double>> samples(std::size_t n) {
  Rng rng(1);
  std::vector<double> a(n), b(n);
  for (auto& x : a) x = rng.normal();
  for (auto& x : b) x = rng.normal(0.1, 1.0);
  return {a, b};
}

template <double (*Fn)(std::span<const double>, std::span<const double>, std::size_t, std::uint64_t)>
void BM_permutation(benchmark::State& state) {
  const auto [a, b] = samples(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(Fn(a, b, 2000, 7));
}

const HostTrace& busy_host() {
  static const HostTrace trace = [] {
    SynthSpec s;
    s.host = "web";
    s.duration = 1200;
    s.seed = 3;
    for (int i = 0; i < 10; ++i) s.channels.push_back({{Direction::in, "http", "client" + std::to_string(i)}, 1.0});
    for (int i = 0; i < 10; ++i) {
      s.channels.push_back({{Direction::out, "sql", "db" + std::to_string(i)}, 1.0});
      s.dependencies.push_back({s.channels[static_cast<std::size_t>(i)].id, s.channels.back().id, 0.05, 0.9});
    }
    return synth_trace(s).trace;
  }();
  return trace;
}

template <bool Parallel>
void BM_local_dependencies(benchmark::State& state) {
  DiscoveryConfig cfg;
  cfg.replications = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    if constexpr (Parallel) {
      benchmark::DoNotOptimize(local_dependencies(busy_host(), cfg));
    } else {
      benchmark::DoNotOptimize(reference::local_dependencies(busy_host(), cfg));
    }
  }
}

template <bool Cached>
void BM_select_features(benchmark::State& state) {
  MetricSynthSpec spec;
  spec.epochs = static_cast<std::size_t>(state.range(0));
  spec.metrics = 15;
  const auto synth = synth_metrics(spec);
  const auto labels = label_slo(synth.data, {spec.slo_threshold_ms});
  for (auto _ : state) {
    if constexpr (Cached) {
      benchmark::DoNotOptimize(select_features(synth.data, labels, {}));
    } else {
      benchmark::DoNotOptimize(reference::select_features(synth.data, labels, {}));
    }
  }
}

template <bool Parallel>
void BM_simulate(benchmark::State& state) {
  SimConfig c;
  c.fleet = static_cast<std::size_t>(state.range(0));
  c.horizon = 500;
  c.faults.transient_rate = 0.002;
  c.faults.persistent_rate = 0.001;
  c.faults.watchdogs = {{"ping", 0.001, 0.02, 0.0}, {"disk", 0.05, 0.02, 0.1}, {"svc", 0.01, 0.02, 0.0}};
  for (auto _ : state) {
    if constexpr (Parallel) {
      benchmark::DoNotOptimize(simulate(c));
    } else {
      benchmark::DoNotOptimize(reference::simulate(c));
    }
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c.fleet) * c.horizon);
}

}  // namespace

BENCHMARK_TEMPLATE(BM_permutation, permutation_p_value)->Name("permutation/parallel")->Arg(200)->Arg(2000);
BENCHMARK_TEMPLATE(BM_permutation, reference::permutation_p_value)->Name("permutation/serial")->Arg(200)->Arg(2000);
BENCHMARK_TEMPLATE(BM_local_dependencies, true)->Name("local_dependencies/parallel")->Arg(1)->Arg(4);
BENCHMARK_TEMPLATE(BM_local_dependencies, false)->Name("local_dependencies/serial")->Arg(1)->Arg(4);
BENCHMARK_TEMPLATE(BM_select_features, true)->Name("select_features/cached")->Arg(2000);
BENCHMARK_TEMPLATE(BM_select_features, false)->Name("select_features/refit")->Arg(2000);
BENCHMARK_TEMPLATE(BM_simulate, true)->Name("simulate/parallel")->Arg(100)->Arg(1000);
BENCHMARK_TEMPLATE(BM_simulate, false)->Name("simulate/serial")->Arg(100)->Arg(1000);

BENCHMARK_MAIN();
