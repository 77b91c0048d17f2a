#include "json.hpp"
#include "opstat/cli.hpp"
#include "opstat/trace_ingest.hpp"

namespace opstat::cli {

std::string echo_comment(const RunConfig& c, char comment) {
  std::string s(1, comment);
  if (comment == '/') s += '/';
  s += " opstat " + c.subcommand + " seed=" + std::to_string(c.seed) +
       " alpha=" + format_double(c.alpha) + " horizon=" + format_double(c.horizon) +
       " method=" + c.method + " format=" + c.format;
  for (const auto& in : c.inputs) s += " input=" + in;
  for (const auto& [k, v] : c.extra) s += " " + k + "=" + v;
  return s + "\n";
}

std::string echo_json(const RunConfig& c) {
  nlohmann::json j;
  j["subcommand"] = c.subcommand;
  j["inputs"] = c.inputs;
  j["alpha"] = c.alpha;
  j["horizon"] = c.horizon;
  j["seed"] = c.seed;
  j["method"] = c.method;
  j["format"] = c.format;
  j["extra"] = c.extra;
  return j.dump();
}

}  // namespace opstat::cli
