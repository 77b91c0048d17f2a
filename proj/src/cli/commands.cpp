#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "opstat/cli.hpp"
#include "opstat/dep_discovery.hpp"
#include "opstat/error.hpp"
#include "opstat/repair_sim.hpp"
#include "opstat/slo_diagnosis.hpp"
#include "opstat/stat_engine.hpp"
#include "opstat/trace_ingest.hpp"

namespace opstat::cli {

namespace {

using nlohmann::json;

std::ifstream open_input(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open '" + path + "'");
  return f;
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write '" + path + "'");
  f << text;
  if (!f) throw Error("write failed for '" + path + "'");
}

json with_echo(const RunConfig& c, json body) {
  body["seed"] = c.seed;
  body["config"] = json::parse(echo_json(c));
  return body;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// --- gen-trace -------------------------------------------------------------

struct GenTraceOpts {
  std::string spec;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

int cmd_gen_trace(GenTraceOpts o, RunConfig c, std::ostream& out) {
  auto f = open_input(o.spec);
  SynthSpec spec = parse_synth_spec(f);
  if (o.seed_given) spec.seed = o.seed;
  c.seed = spec.seed;
  c.inputs = {o.spec};
  const auto synth = synth_trace(spec);
  emit(o.out, echo_comment(c) + serialize_trace(synth.trace), out);
  emit(o.out + ".truth", echo_comment(c) + serialize_truth(synth.truth), out);
  return kOk;
}

// --- gen-metrics -----------------------------------------------------------

int cmd_gen_metrics(const MetricSynthSpec& spec, RunConfig c, std::ostream& out) {
  c.seed = spec.seed;
  const auto synth = synth_metrics(spec);
  emit(c.out, echo_comment(c) + serialize_metrics(synth.data), out);
  std::string truth = echo_comment(c) + "ts,cause\n";
  for (std::size_t i = 0; i < synth.data.size(); ++i) {
    truth += format_double(synth.data.timestamp(i)) + "," + std::to_string(synth.cause[i]) + "\n";
  }
  if (!c.out.empty() && c.out != "-") emit(c.out + ".truth", truth, out);
  return kOk;
}

// --- discover --------------------------------------------------------------

struct DiscoverOpts {
  std::vector<std::string> traces;
  std::string table;
  std::size_t min_samples = 10;
  std::size_t replications = 1;
};

std::string results_csv(std::span<const HostResults> hosts) {
  std::string s =
      "host,input,output,n_delays,n_virtual,ks_statistic,p_value,q_value,log_odds,dependent,"
      "insufficient\n";
  for (const auto& h : hosts) {
    for (const auto& r : h.results) {
      s += h.host + "," + format_channel(r.input) + "," + format_channel(r.output) + "," +
           std::to_string(r.n_delays) + "," + std::to_string(r.n_virtual) + "," +
           format_double(r.ks.statistic) + "," + format_double(r.ks.p_value) + "," +
           format_double(r.q_value) + "," + format_double(r.log_odds) + "," +
           (r.dependent ? "1" : "0") + "," + (r.insufficient ? "1" : "0") + "\n";
    }
  }
  return s;
}

int cmd_discover(const DiscoverOpts& o, RunConfig c, std::ostream& out, std::ostream& err) {
  DiscoveryConfig dc;
  dc.alpha = c.alpha;
  dc.horizon = c.horizon;
  dc.seed = c.seed;
  dc.method = parse_method(c.method);
  dc.min_samples = o.min_samples;
  dc.replications = o.replications;
  validate(dc);
  c.inputs = o.traces;
  c.extra["min_samples"] = std::to_string(o.min_samples);
  c.extra["replications"] = std::to_string(o.replications);

  std::vector<HostResults> hosts;
  std::set<std::string> seen;
  int code = kOk;
  for (const auto& path : o.traces) {
    HostTrace trace = parse_trace_file(path);
    if (trace.host.empty()) trace.host = path;  // empty trace: name it by file
    if (!seen.insert(trace.host).second) {
      throw Error("host '" + trace.host + "' appears in more than one trace");
    }
    HostResults hr{trace.host, local_dependencies(trace, dc)};
    const bool testable = std::any_of(hr.results.begin(), hr.results.end(),
                                      [](const ChannelPairResult& r) { return !r.insufficient; });
    if (!testable) {
      err << "warning: " << path << ": no channel pair with at least " << dc.min_samples
          << " delays\n";
      code = kWarnings;
    }
    hosts.push_back(std::move(hr));
  }
  std::sort(hosts.begin(), hosts.end(),
            [](const HostResults& a, const HostResults& b) { return a.host < b.host; });
  // Hosts named after their file carry no real node.
  std::vector<HostResults> graph_hosts;
  for (const auto& h : hosts) {
    if (valid_token(h.host)) graph_hosts.push_back(h);
  }
  const DependencyGraph g = build_graph(graph_hosts);

  if (!o.table.empty()) emit(o.table, echo_comment(c) + results_csv(hosts), out);
  if (c.format == "csv") {
    emit(c.out, echo_comment(c) + results_csv(hosts), out);
  } else if (c.format == "dot") {
    emit(c.out, echo_comment(c, '/') + export_graph(g, GraphFormat::dot), out);
  } else {
    emit(c.out, dump(with_echo(c, json::parse(export_graph(g, GraphFormat::json)))), out);
  }
  return code;
}

// --- diagnose --------------------------------------------------------------

struct DiagnoseOpts {
  std::string metrics;
  double slo = 0.0;
  std::string action = "train";
  std::size_t k = 3;
  std::string catalog;
  std::size_t top_k = 3;
  std::string selection = "screen";
};

json gaussian_json(const Gaussian& g) { return {{"mean", g.mean}, {"variance", g.variance}}; }

double balanced_accuracy(std::span<const SloState> pred, std::span<const SloState> truth) {
  std::size_t tp = 0, pos = 0, tn = 0, neg = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == SloState::violation) {
      ++pos;
      tp += pred[i] == SloState::violation;
    } else {
      ++neg;
      tn += pred[i] == SloState::compliant;
    }
  }
  return 0.5 * (static_cast<double>(tp) / static_cast<double>(pos) +
                static_cast<double>(tn) / static_cast<double>(neg));
}

int cmd_diagnose(const DiagnoseOpts& o, RunConfig c, std::ostream& out, std::ostream& err) {
  c.inputs = {o.metrics};
  c.extra["action"] = o.action;
  c.extra["slo_ms"] = format_double(o.slo);
  c.extra["selection"] = o.selection;
  c.extra["k"] = std::to_string(o.k);
  c.extra["top_k"] = std::to_string(o.top_k);
  if (!o.catalog.empty()) c.extra["catalog"] = o.catalog;

  const MetricDataset data = parse_metrics_file(o.metrics);
  const auto labels = label_slo(data, SloConfig{o.slo});
  const auto violations =
      static_cast<std::size_t>(std::count(labels.begin(), labels.end(), SloState::violation));
  if (violations == 0 || violations == labels.size()) {
    throw Error("SLO threshold leaves a single class (" + std::to_string(violations) + " of " +
                std::to_string(labels.size()) + " epochs in violation)");
  }

  int code = kOk;
  FeatureScreen screen = screen_features(data, labels, ScreenConfig{c.alpha});
  std::vector<std::size_t> features;
  if (o.selection == "greedy") {
    SelectionConfig sc;
    sc.alpha = c.alpha;
    features = select_features(data, labels, sc);
  } else {
    features = screen.selected;
  }
  if (features.empty()) {
    err << "warning: no metric separates the classes; using all metrics\n";
    features.resize(data.metric_count());
    for (std::size_t j = 0; j < features.size(); ++j) features[j] = j;
    code = kWarnings;
  }
  const DiagnosisModel model = fit_classifier(data, labels, features);

  std::vector<std::size_t> viol_rows;
  std::vector<Signature> sigs;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (labels[i] != SloState::violation) continue;
    viol_rows.push_back(i);
    sigs.push_back(signature(model, data.row(i), data.timestamp(i)));
  }
  auto clusters = [&]() -> std::optional<Clustering> {
    std::size_t k = o.k;
    if (k == 0) return std::nullopt;
    if (k > sigs.size()) {
      err << "warning: only " << sigs.size() << " violations; k lowered from " << k << "\n";
      k = sigs.size();
      code = kWarnings;
    }
    return cluster_signatures(sigs, k, c.seed);
  };

  if (o.action == "train") {
    std::vector<SloState> pred(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) pred[i] = classify(model, data.row(i)).state;
    json j;
    j["epochs"] = data.size();
    j["violations"] = violations;
    j["metric_names"] = data.metric_names();
    json scr = json::array();
    for (std::size_t m = 0; m < data.metric_count(); ++m) {
      scr.push_back({{"metric", data.metric_names()[m]},
                     {"ks_statistic", screen.statistics[m]},
                     {"p_value", screen.p_values[m]},
                     {"q_value", screen.q_values[m]},
                     {"selected", std::binary_search(screen.selected.begin(),
                                                     screen.selected.end(), m)}});
    }
    j["screen"] = scr;
    json feats = json::array();
    for (std::size_t f = 0; f < features.size(); ++f) {
      feats.push_back({{"metric", data.metric_names()[features[f]]},
                       {"violation", gaussian_json(model.violation[f])},
                       {"compliant", gaussian_json(model.compliant[f])}});
    }
    j["features"] = feats;
    j["prior_violation"] = model.prior_violation;
    j["training_accuracy"] = [&] {
      std::size_t hit = 0;
      for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == labels[i];
      return static_cast<double>(hit) / static_cast<double>(pred.size());
    }();
    j["training_balanced_accuracy"] = balanced_accuracy(pred, labels);
    emit(c.out, dump(with_echo(c, j)), out);
  } else if (o.action == "signatures") {
    const auto cl = clusters();
    SignatureCatalog catalog;
    for (std::size_t s = 0; s < sigs.size(); ++s) {
      catalog.push_back({sigs[s], cl ? "cluster-" + std::to_string(cl->assignment[s]) : ""});
    }
    emit(c.out, echo_comment(c) + serialize_catalog(catalog), out);
  } else if (o.action == "cluster") {
    const auto cl = clusters();
    std::string s = echo_comment(c) + "ts,art_ms,slo_state,cluster_id\n";
    std::size_t next = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      long id = -1;
      if (next < viol_rows.size() && viol_rows[next] == i) {
        if (cl) id = static_cast<long>(cl->assignment[next]);
        ++next;
      }
      s += format_double(data.timestamp(i)) + "," + format_double(data.art_ms(i)) + "," +
           std::string(to_string(labels[i])) + "," + std::to_string(id) + "\n";
    }
    emit(c.out, s, out);
  } else {  // retrieve
    if (o.catalog.empty()) throw Error("retrieve needs --catalog");
    auto f = open_input(o.catalog);
    const SignatureCatalog catalog = parse_catalog(f);
    if (catalog.empty()) throw Error("catalog '" + o.catalog + "' is empty");
    if (catalog.front().signature.attributions.size() != data.metric_count()) {
      throw Error("catalog signatures have " +
                  std::to_string(catalog.front().signature.attributions.size()) +
                  " metrics, data has " + std::to_string(data.metric_count()));
    }
    json queries = json::array();
    for (const auto& sig : sigs) {
      json hits = json::array();
      for (const auto& h : retrieve(sig, catalog, o.top_k)) {
        hits.push_back({{"index", h.index},
                        {"distance", h.distance},
                        {"ts", catalog[h.index].signature.ts},
                        {"annotation", catalog[h.index].annotation}});
      }
      queries.push_back({{"ts", sig.ts}, {"hits", hits}});
    }
    emit(c.out, dump(with_echo(c, {{"queries", queries}})), out);
  }
  return code;
}

// --- repair-sim / repair-mine ----------------------------------------------

struct RepairSimOpts {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::int64_t horizon = 0;
  bool horizon_given = false;
};

std::string comment_block(const std::string& text) {
  std::string s;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) s += "# " + line + "\n";
  return s;
}

int cmd_repair_sim(const RepairSimOpts& o, RunConfig c, std::ostream& out) {
  if (c.out.empty() || c.out == "-") throw Error("repair-sim needs --out for the log");
  auto f = open_input(o.config);
  SimConfig sc = parse_sim_config(f);
  if (o.seed_given) sc.seed = o.seed;
  if (o.horizon_given) sc.horizon = o.horizon;
  validate(sc);
  c.seed = sc.seed;
  c.horizon = static_cast<double>(sc.horizon);
  c.inputs = {o.config};

  const auto result = simulate(sc);
  const std::string header = echo_comment(c) + comment_block(serialize_sim_config(sc));
  emit(c.out, header + serialize_repair_log(result.log), out);
  emit(c.out + ".truth", header + serialize_truth(result.truth), out);

  const auto pm = evaluate_policy(result.log, CostModel{});
  json j{{"records", result.log.records.size()},
         {"fleet", sc.fleet},
         {"policy", std::string(to_string(sc.policy.kind))},
         {"availability", pm.availability},
         {"total_cost", pm.total_cost},
         {"log", c.out},
         {"truth", c.out + ".truth"}};
  out << dump(with_echo(c, j));
  return kOk;
}

struct RepairMineOpts {
  std::string log;
  std::string truth;
  std::int64_t lookahead = 20;
  CostModel costs;
};

int cmd_repair_mine(const RepairMineOpts& o, RunConfig c, std::ostream& out) {
  c.inputs = {o.log};
  if (!o.truth.empty()) c.inputs.push_back(o.truth);
  c.extra["lookahead"] = std::to_string(o.lookahead);
  c.extra["cost_reboot"] = format_double(o.costs.reboot);
  c.extra["cost_reimage"] = format_double(o.costs.reimage);
  c.extra["cost_replace"] = format_double(o.costs.replace);
  c.extra["cost_do_nothing"] = format_double(o.costs.do_nothing);
  c.extra["downtime"] = format_double(o.costs.downtime_per_tick);

  auto lf = open_input(o.log);
  const RepairLog log = parse_repair_log(lf);
  if (log.records.empty()) throw Error("log '" + o.log + "' has no records");
  std::optional<GroundTruth> truth;
  if (!o.truth.empty()) {
    auto tf = open_input(o.truth);
    truth = parse_ground_truth(tf);
  }
  const auto est = estimate_watchdog_fpr(log, truth ? &*truth : nullptr, o.lookahead);
  const auto pm = evaluate_policy(log, o.costs);

  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  if (c.format == "csv") {
    std::string s = echo_comment(c) +
                    "watchdog,reports,errors,suspected_false,clean_reports,rate,true_rate\n";
    auto cell = [](const std::optional<double>& v) { return v ? format_double(*v) : ""; };
    for (const auto& [w, e] : est) {
      s += w + "," + std::to_string(e.reports) + "," + std::to_string(e.errors) + "," +
           std::to_string(e.suspected_false) + "," + std::to_string(e.clean_reports) + "," +
           cell(e.rate) + "," + cell(e.true_rate) + "\n";
    }
    emit(c.out, s, out);
    return kOk;
  }
  json wds = json::array();
  for (const auto& [w, e] : est) {
    wds.push_back({{"watchdog", w},
                   {"reports", e.reports},
                   {"errors", e.errors},
                   {"suspected_false", e.suspected_false},
                   {"clean_reports", e.clean_reports},
                   {"rate", opt(e.rate)},
                   {"true_rate", opt(e.true_rate)}});
  }
  json policy{{"availability", pm.availability},
              {"total_cost", pm.total_cost},
              {"mean_time_to_healthy", pm.mean_time_to_healthy},
              {"machine_ticks", pm.machine_ticks},
              {"failure_ticks", pm.failure_ticks},
              {"episodes", pm.episodes},
              {"action_counts", pm.action_counts}};
  emit(c.out, dump(with_echo(c, {{"watchdogs", wds}, {"policy", policy}})), out);
  return kOk;
}

// --- stats -----------------------------------------------------------------

std::vector<double> parse_numbers(const std::string& text, const char* what) {
  std::string norm = text;
  std::replace(norm.begin(), norm.end(), ',', ' ');
  std::istringstream is(norm);
  std::vector<double> v;
  std::string tok;
  while (is >> tok) {
    double x = 0.0;
    const auto* end = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(tok.data(), end, x);
    if (ec != std::errc{} || ptr != end) {
      throw Error(std::string(what) + ": not a number: '" + tok + "'");
    }
    v.push_back(x);
  }
  return v;
}

int cmd_stats(const std::string& mode, RunConfig c, std::istream& in, std::ostream& out) {
  c.extra["mode"] = mode;
  if (mode == "fdr-example") {
    const std::size_t m = 10000, rejections = 1000;
    const double p = 0.05;
    json j{{"m", m},
           {"p_threshold", p},
           {"expected_false_positives", expected_false_positives(m, p)},
           {"rejections", rejections},
           {"expected_false_proportion", expected_false_proportion(m, p, rejections)}};
    emit(c.out, dump(with_echo(c, j)), out);
    return kOk;
  }
  if (mode == "bh") {
    std::ostringstream buf;
    buf << in.rdbuf();
    const auto p = parse_numbers(buf.str(), "p-values");
    if (p.empty()) throw Error("bh: no p-values on stdin");
    const auto rs = bh_select(p, c.alpha);
    if (c.format == "csv") {
      std::string s = echo_comment(c) + "index,p_value,q_value,rejected\n";
      for (std::size_t i = 0; i < p.size(); ++i) {
        s += std::to_string(i) + "," + format_double(p[i]) + "," + format_double(rs.q_values[i]) +
             "," + (rs.rejected(i) ? "1" : "0") + "\n";
      }
      emit(c.out, s, out);
      return kOk;
    }
    json j{{"m", rs.m},
           {"alpha", rs.alpha},
           {"threshold", rs.threshold},
           {"rejected", rs.rejected_indices},
           {"q_values", rs.q_values}};
    emit(c.out, dump(with_echo(c, j)), out);
    return kOk;
  }
  // ks: first non-empty line is sample a, second is sample b
  std::vector<std::vector<double>> samples;
  std::string line;
  while (samples.size() < 2 && std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r,") == std::string::npos) continue;
    samples.push_back(parse_numbers(line, "ks sample"));
  }
  if (samples.size() < 2) throw Error("ks: expected two sample lines on stdin");
  const auto t = ks_test(samples[0], samples[1], c.alpha);
  json j{{"statistic", t.statistic},
         {"p_value", t.p_value},
         {"n_a", t.n_a},
         {"n_b", t.n_b},
         {"significant", t.significant}};
  emit(c.out, dump(with_echo(c, j)), out);
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"opstat: statistical management toolkit for IT systems", "opstat"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI file with flag defaults; flags on the command line win");

  RunConfig c;
  const std::set<std::string> methods{"ks", "log-odds", "log_odds", "both"};

  auto add_seed = [&](CLI::App* sub) { return sub->add_option("--seed", c.seed, "Random seed"); };
  auto add_out = [&](CLI::App* sub) {
    return sub->add_option("--out", c.out, "Output path ('-' or omitted: stdout)");
  };

  GenTraceOpts gt;
  auto* gen_trace = app.add_subcommand("gen-trace", "Synthesize a packet trace with planted dependencies");
  gen_trace->add_option("spec", gt.spec, "Synthesis spec file")->required();
  add_out(gen_trace)->required();
  auto* gt_seed = add_seed(gen_trace);

  MetricSynthSpec ms;
  auto* gen_metrics = app.add_subcommand("gen-metrics", "Synthesize a metric log with planted violation causes");
  gen_metrics->add_option("--epochs", ms.epochs)->capture_default_str();
  gen_metrics->add_option("--metrics", ms.metrics)->capture_default_str();
  gen_metrics->add_option("--causes", ms.causes)->capture_default_str();
  gen_metrics->add_option("--drivers", ms.drivers_per_cause, "Driver metrics per cause")->capture_default_str();
  gen_metrics->add_option("--violation-fraction", ms.violation_fraction)->capture_default_str();
  gen_metrics->add_option("--shift", ms.shift, "Driver shift in standard deviations")->capture_default_str();
  gen_metrics->add_option("--slo", ms.slo_threshold_ms, "SLO threshold on ART (ms)")->capture_default_str();
  gen_metrics->add_option("--seed", ms.seed, "Random seed");
  add_out(gen_metrics);

  DiscoverOpts dopt;
  auto* discover = app.add_subcommand("discover", "Discover service dependencies from traces");
  discover->add_option("traces", dopt.traces, "Trace files, one host each")->required();
  discover->add_option("--alpha", c.alpha, "FDR level")->capture_default_str();
  discover->add_option("--horizon", c.horizon, "Dependence horizon (s)")->capture_default_str();
  add_seed(discover);
  discover->add_option("--method", c.method)->check(CLI::IsMember(methods))->capture_default_str();
  discover->add_option("--format", c.format)->check(CLI::IsMember({"json", "dot", "csv"}))->capture_default_str();
  discover->add_option("--table", dopt.table, "Also write the per-pair CSV table here");
  discover->add_option("--min-samples", dopt.min_samples)->capture_default_str();
  discover->add_option("--replications", dopt.replications)->capture_default_str();
  add_out(discover);

  DiagnoseOpts dg;
  auto* diagnose = app.add_subcommand("diagnose", "Diagnose SLO violations from a metric log");
  diagnose->add_option("metrics", dg.metrics, "Metric CSV")->required();
  diagnose->add_option("--slo", dg.slo, "SLO threshold on ART (ms)")->required();
  diagnose->add_option("--action", dg.action)
      ->check(CLI::IsMember({"train", "signatures", "cluster", "retrieve"}))->capture_default_str();
  diagnose->add_option("--k", dg.k, "Signature clusters (0: none)")->capture_default_str();
  diagnose->add_option("--catalog", dg.catalog, "Signature catalog (JSONL) for retrieve");
  diagnose->add_option("--top-k", dg.top_k)->capture_default_str();
  diagnose->add_option("--selection", dg.selection)->check(CLI::IsMember({"screen", "greedy"}))->capture_default_str();
  double screen_alpha = 0.01;
  diagnose->add_option("--alpha", screen_alpha, "Feature screen FDR level")->capture_default_str();
  add_seed(diagnose);
  diagnose->add_option("--format", c.format)->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  add_out(diagnose);

  RepairSimOpts rs;
  auto* repair_sim = app.add_subcommand("repair-sim", "Simulate the fault/repair loop");
  repair_sim->add_option("config", rs.config, "Simulation config file")->required();
  auto* rs_seed = repair_sim->add_option("--seed", rs.seed, "Random seed (overrides the config)");
  auto* rs_horizon = repair_sim->add_option("--horizon", rs.horizon, "Ticks (overrides the config)");
  add_out(repair_sim)->required();

  RepairMineOpts rm;
  auto* repair_mine = app.add_subcommand("repair-mine", "Mine a repair log for watchdog and policy metrics");
  repair_mine->add_option("log", rm.log, "Repair log")->required();
  repair_mine->add_option("--truth", rm.truth, "Ground-truth sidecar");
  repair_mine->add_option("--lookahead", rm.lookahead)->capture_default_str();
  repair_mine->add_option("--cost-reboot", rm.costs.reboot)->capture_default_str();
  repair_mine->add_option("--cost-reimage", rm.costs.reimage)->capture_default_str();
  repair_mine->add_option("--cost-replace", rm.costs.replace)->capture_default_str();
  repair_mine->add_option("--cost-do-nothing", rm.costs.do_nothing)->capture_default_str();
  repair_mine->add_option("--downtime", rm.costs.downtime_per_tick, "Cost per Failure tick")->capture_default_str();
  add_seed(repair_mine);
  repair_mine->add_option("--format", c.format)->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  add_out(repair_mine);

  std::string mode;
  auto* stats = app.add_subcommand("stats", "Statistics helpers over stdin");
  stats->add_option("mode", mode, "bh | ks | fdr-example")
      ->check(CLI::IsMember({"bh", "ks", "fdr-example"}))->required();
  stats->add_option("--alpha", c.alpha)->capture_default_str();
  stats->add_option("--format", c.format)->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  add_seed(stats);
  add_out(stats);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      for (auto* sub : app.get_subcommands()) out << sub->help();
      return kOk;
    }
    err << "error: " << e.what() << "\n";
    return kInputError;
  }

  try {
    if (*gen_trace) {
      c.subcommand = "gen-trace";
      gt.out = c.out;
      gt.seed = c.seed;
      gt.seed_given = gt_seed->count() > 0;
      return cmd_gen_trace(gt, c, out);
    }
    if (*gen_metrics) {
      c.subcommand = "gen-metrics";
      c.extra = {{"epochs", std::to_string(ms.epochs)},
                 {"metrics", std::to_string(ms.metrics)},
                 {"causes", std::to_string(ms.causes)},
                 {"drivers", std::to_string(ms.drivers_per_cause)},
                 {"violation_fraction", format_double(ms.violation_fraction)},
                 {"shift", format_double(ms.shift)},
                 {"slo_ms", format_double(ms.slo_threshold_ms)}};
      return cmd_gen_metrics(ms, c, out);
    }
    if (*discover) {
      c.subcommand = "discover";
      return cmd_discover(dopt, c, out, err);
    }
    if (*diagnose) {
      c.subcommand = "diagnose";
      c.alpha = screen_alpha;
      return cmd_diagnose(dg, c, out, err);
    }
    if (*repair_sim) {
      c.subcommand = "repair-sim";
      rs.seed_given = rs_seed->count() > 0;
      rs.horizon_given = rs_horizon->count() > 0;
      return cmd_repair_sim(rs, c, out);
    }
    if (*repair_mine) {
      c.subcommand = "repair-mine";
      return cmd_repair_mine(rm, c, out);
    }
    c.subcommand = "stats";
    return cmd_stats(mode, c, in, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
}

}  // namespace opstat::cli
