#include <chrono>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "opstat/cli.hpp"
#include "opstat/trace_ingest.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run invoke(std::vector<std::string> args, const std::string& stdin_text = "") {
  std::istringstream in(stdin_text);
  std::ostringstream out, err;
  Run r;
  r.code = opstat::cli::run(args, in, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "opstat-cli-tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string write(const std::string& name, const std::string& text) {
  const auto p = scratch() / name;
  std::ofstream(p, std::ios::binary) << text;
  return p.string();
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

// Drops '#' lines so JSON-lines / CSV bodies can be inspected.
std::vector<std::string> body_lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  for (std::string line; std::getline(is, line);) {
    if (!line.empty() && line[0] != '#') out.push_back(line);
  }
  return out;
}

const char* kSpec =
    "host=web duration=400 seed=4\n"
    "channel dir=in service=http remote=client rate=1\n"
    "channel dir=out service=sql remote=db rate=0\n"
    "channel dir=out service=dns remote=resolver rate=0.5\n"
    "dependency in_service=http in_remote=client out_service=sql out_remote=db mean=0.05 prob=1\n";

}  // namespace

TEST_CASE("cli: argument handling") {
  CHECK(invoke({"--help"}).code == 0);
  CHECK(invoke({}).code == 2);
  CHECK(invoke({"frobnicate"}).code == 2);
  CHECK(invoke({"stats", "fdr-example", "--bogus"}).code == 2);
  CHECK(invoke({"discover", "x.trace", "--method", "bayes"}).code == 2);
  CHECK(invoke({"discover", "x.trace", "--format", "xml"}).code == 2);
  const auto missing = invoke({"discover", (scratch() / "nope.trace").string()});
  CHECK(missing.code == 2);
  CHECK(missing.err.find("error:") != std::string::npos);
}

TEST_CASE("cli: gen-trace") {
  const auto spec = write("a.spec", kSpec);
  const auto t1 = (scratch() / "a1.trace").string();
  const auto t2 = (scratch() / "a2.trace").string();
  REQUIRE(invoke({"gen-trace", spec, "--out", t1}).code == 0);
  REQUIRE(invoke({"gen-trace", spec, "--out", t2}).code == 0);
  CHECK(slurp(t1) == slurp(t2));
  CHECK(slurp(t1).rfind("# opstat gen-trace seed=4", 0) == 0);

  std::ifstream tf(t1 + ".truth");
  const auto truth = opstat::parse_truth(tf);
  REQUIRE(truth.size() == 1);
  CHECK(truth[0].output.remote == "db");

  const auto t3 = (scratch() / "a3.trace").string();
  REQUIRE(invoke({"gen-trace", spec, "--out", t3, "--seed", "5"}).code == 0);
  CHECK(slurp(t3) != slurp(t1));

  CHECK(invoke({"gen-trace", (scratch() / "missing.spec").string(), "--out", t3}).code == 2);
  CHECK(invoke({"gen-trace", write("bad.spec", "host=web duration=abc\n"), "--out", t3}).code == 2);
}

TEST_CASE("cli: discover") {
  const auto spec = write("d.spec", kSpec);
  const auto trace = (scratch() / "d.trace").string();
  REQUIRE(invoke({"gen-trace", spec, "--out", trace}).code == 0);

  const auto r = invoke({"discover", trace, "--seed", "3"});
  REQUIRE(r.code == 0);
  const auto j = json::parse(r.out);
  CHECK(j.at("seed") == 3);
  CHECK(j.at("config").at("subcommand") == "discover");
  REQUIRE(j.at("edges").size() == 2);  // client -> web, web -> db
  std::set<std::string> ends;
  for (const auto& e : j.at("edges")) ends.insert(e.at("from").get<std::string>() + ">" + e.at("to").get<std::string>());
  CHECK(ends == std::set<std::string>{"client>web", "web>db"});
  CHECK(invoke({"discover", trace, "--seed", "3"}).out == r.out);

  const auto dot = invoke({"discover", trace, "--format", "dot"});
  CHECK(dot.code == 0);
  CHECK(dot.out.rfind("// opstat discover", 0) == 0);
  CHECK(dot.out.find("digraph") != std::string::npos);

  const auto csv = invoke({"discover", trace, "--format", "csv", "--method", "both"});
  CHECK(csv.code == 0);
  CHECK(body_lines(csv.out).size() == 3);  // header + two pairs

  const auto empty = write("empty.trace", "# nothing captured\n");
  const auto e = invoke({"discover", empty});
  CHECK(e.code == 1);
  CHECK(e.err.find("warning") != std::string::npos);
  CHECK(json::parse(e.out).at("edges").empty());

  const auto bad = write("bad.trace", "ts=1 host=h remote=x service=http dir=sideways\n");
  CHECK(invoke({"discover", bad}).code == 2);
  CHECK(invoke({"discover", trace, trace}).code == 2);
  CHECK(invoke({"discover", trace, "--alpha", "0"}).code == 2);
}

TEST_CASE("cli: diagnose") {
  const auto metrics = (scratch() / "m.csv").string();
  REQUIRE(invoke({"gen-metrics", "--epochs", "2000", "--seed", "3", "--out", metrics}).code == 0);

  const auto start = std::chrono::steady_clock::now();
  const auto train = invoke({"diagnose", metrics, "--slo", "200"});
  REQUIRE(train.code == 0);
  CHECK(json::parse(train.out).at("training_balanced_accuracy").get<double>() >= 0.9);

  const auto cl = invoke({"diagnose", metrics, "--slo", "200", "--action", "cluster", "--k", "3"});
  REQUIRE(cl.code == 0);
  const auto rows = body_lines(cl.out);
  REQUIRE(rows.size() == 2001);
  CHECK(rows[0] == "ts,art_ms,slo_state,cluster_id");
  std::set<std::string> ids;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto id = rows[i].substr(rows[i].rfind(',') + 1);
    const bool violation = rows[i].find(",violation,") != std::string::npos;
    CHECK((id == "-1") != violation);
    if (violation) ids.insert(id);
  }
  CHECK(ids.size() == 3);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(secs < 30.0);

  const auto catalog = (scratch() / "cat.jsonl").string();
  REQUIRE(invoke({"diagnose", metrics, "--slo", "200", "--action", "signatures", "--out", catalog}).code == 0);
  const auto ret = invoke({"diagnose", metrics, "--slo", "200", "--action", "retrieve", "--catalog", catalog});
  REQUIRE(ret.code == 0);
  const auto q = json::parse(ret.out).at("queries");
  REQUIRE_FALSE(q.empty());
  CHECK(q[0].at("hits")[0].at("distance") == 0.0);  // every query is in the catalog
  CHECK(q[0].at("hits").size() == 3);

  CHECK(invoke({"diagnose", metrics, "--slo", "200", "--action", "retrieve", "--catalog",
                write("empty.jsonl", "")}).code == 2);
  CHECK(invoke({"diagnose", metrics, "--slo", "1e9"}).code == 2);  // no violations
  CHECK(invoke({"diagnose", metrics}).code == 2);                  // --slo is required
}

TEST_CASE("cli: repair-sim and repair-mine") {
  const auto quiet = write("quiet.conf",
                           "fleet=5 horizon=100 seed=1\n"
                           "transient_rate=0 persistent_rate=0\n"
                           "watchdog name=ping fp=0 fn=0\n");
  const auto log = (scratch() / "quiet.log").string();
  const auto sim = invoke({"repair-sim", quiet, "--out", log});
  REQUIRE(sim.code == 0);
  CHECK(json::parse(sim.out).at("availability") == 1.0);
  const auto mined = invoke({"repair-mine", log});
  REQUIRE(mined.code == 0);
  CHECK(json::parse(mined.out).at("policy").at("availability") == 1.0);
  CHECK(json::parse(mined.out).at("watchdogs")[0].at("rate").is_null());

  const auto noisy = write("noisy.conf",
                           "fleet=20 horizon=1000 seed=2\n"
                           "transient_rate=0.002 persistent_rate=0\n"
                           "policy=always-reboot\n"
                           "watchdog name=flaky fp=0.1 fn=0.02\n"
                           "watchdog name=solid fp=0 fn=0.02\n");
  const auto nlog = (scratch() / "noisy.log").string();
  REQUIRE(invoke({"repair-sim", noisy, "--out", nlog}).code == 0);
  const auto first = slurp(nlog);
  REQUIRE(invoke({"repair-sim", noisy, "--out", nlog}).code == 0);
  CHECK(slurp(nlog) == first);

  const auto m = invoke({"repair-mine", nlog, "--truth", nlog + ".truth"});
  REQUIRE(m.code == 0);
  for (const auto& w : json::parse(m.out).at("watchdogs")) {
    if (w.at("watchdog") == "flaky") {
      CHECK(std::abs(w.at("rate").get<double>() - 0.1) <= 0.02);
      CHECK(std::abs(w.at("true_rate").get<double>() - 0.1) <= 0.02);
    }
  }
  const auto csv = invoke({"repair-mine", nlog, "--format", "csv"});
  CHECK(body_lines(csv.out).size() == 3);

  CHECK(invoke({"repair-sim", quiet}).code == 2);  // no --out
  CHECK(invoke({"repair-sim", (scratch() / "none.conf").string(), "--out", log}).code == 2);
  CHECK(invoke({"repair-mine", (scratch() / "none.log").string()}).code == 2);
  CHECK(invoke({"repair-sim", write("badrate.conf", "fleet=5 horizon=10\ntransient_rate=2\n"), "--out", log}).code == 2);
}

TEST_CASE("cli: stats") {
  const auto fdr = json::parse(invoke({"stats", "fdr-example"}).out);
  CHECK(fdr.at("expected_false_positives") == 500.0);
  CHECK(fdr.at("expected_false_proportion") == 0.5);
  CHECK(fdr.contains("seed"));

  const auto bh = invoke({"stats", "bh", "--alpha", "0.05"}, "0.001 0.5\n");
  REQUIRE(bh.code == 0);
  CHECK(json::parse(bh.out).at("rejected") == json::array({0}));
  CHECK(invoke({"stats", "bh"}, "0.1 x\n").code == 2);
  CHECK(invoke({"stats", "bh"}, "").code == 2);

  const auto ks = json::parse(invoke({"stats", "ks"}, "1 2 3 4\n1 2 3 4\n").out);
  CHECK(ks.at("statistic") == 0.0);
  CHECK(ks.at("p_value") == 1.0);
}
