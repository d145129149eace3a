#include "fracheat_cli/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace fracheat::cli {

namespace {

[[noreturn]] void fail(const std::string& what) { throw ConfigError(what); }

double number(const json& j, const char* key) {
  if (!j.is_number()) fail(std::string(key) + " must be a number");
  return j.get<double>();
}

std::vector<double> numbers(const json& j, const char* key) {
  if (!j.is_array()) fail(std::string(key) + " must be an array of numbers");
  std::vector<double> v;
  for (const auto& e : j) v.push_back(number(e, key));
  return v;
}

void only_keys(const json& obj, std::initializer_list<const char*> allowed, const char* where) {
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, _] : obj.items())
    if (!ok.count(k)) fail(std::string("unknown key '") + k + "' in " + where);
}

void expect_length(const std::vector<double>& v, int dim, const char* key) {
  if (v.size() != static_cast<std::size_t>(dim))
    fail(std::string(key) + " must have dim entries");
}

json normalise_initial_data(const json& in, int dim) {
  if (!in.is_object()) fail("initial_data must be an object");
  if (!in.contains("kind") || !in["kind"].is_string()) fail("initial_data.kind must be a string");
  const std::string kind = in["kind"];
  json out = {{"kind", kind}};
  if (kind == "constant") {
    only_keys(in, {"kind", "value"}, "initial_data");
    out["value"] = in.contains("value") ? number(in["value"], "initial_data.value") : 1.0;
  } else if (kind == "gaussian_bump") {
    only_keys(in, {"kind", "amplitude", "center", "width"}, "initial_data");
    out["amplitude"] = in.contains("amplitude") ? number(in["amplitude"], "initial_data.amplitude") : 1.0;
    auto c = in.contains("center") ? numbers(in["center"], "initial_data.center")
                                   : std::vector<double>(dim, 0.0);
    expect_length(c, dim, "initial_data.center");
    out["center"] = c;
    const double w = in.contains("width") ? number(in["width"], "initial_data.width") : 1.0;
    if (!(w > 0.0)) fail("initial_data.width must be positive");
    out["width"] = w;
  } else if (kind == "indicator_box") {
    only_keys(in, {"kind", "lower", "upper", "value"}, "initial_data");
    if (!in.contains("lower") || !in.contains("upper"))
      fail("indicator_box needs lower and upper");
    auto lo = numbers(in["lower"], "initial_data.lower");
    auto hi = numbers(in["upper"], "initial_data.upper");
    expect_length(lo, dim, "initial_data.lower");
    expect_length(hi, dim, "initial_data.upper");
    for (int i = 0; i < dim; ++i)
      if (!(lo[i] < hi[i])) fail("indicator_box needs lower < upper on every axis");
    out["lower"] = lo;
    out["upper"] = hi;
    out["value"] = in.contains("value") ? number(in["value"], "initial_data.value") : 1.0;
  } else {
    fail("initial_data.kind must be constant, gaussian_bump or indicator_box");
  }
  return out;
}

}  // namespace

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) fail("override must look like key=value: " + assignment);
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = &doc;
  std::size_t start = 0;
  for (;;) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot - start);
    if (key.empty()) fail("empty key in override: " + assignment);
    if (!node->is_object()) fail("override descends into a non-object: " + assignment);
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

RunConfig parse_config(const json& doc) {
  if (!doc.is_object()) fail("config must be a JSON object");
  only_keys(doc, {"alpha", "hurst", "dim", "horizon", "base_point", "grid", "initial_data", "workers"},
            "config");
  if (!doc.contains("alpha")) fail("missing key 'alpha'");
  if (!doc.contains("hurst")) fail("missing key 'hurst'");

  RunConfig rc;
  ModelParams& p = rc.params;
  p.alpha = number(doc["alpha"], "alpha");
  p.hurst = numbers(doc["hurst"], "hurst");
  if (p.hurst.size() < 2) fail("hurst needs H0 and at least one spatial index");
  if (doc.contains("dim")) {
    if (!doc["dim"].is_number_integer()) fail("dim must be an integer");
    p.dim = doc["dim"].get<int>();
  } else {
    p.dim = static_cast<int>(p.hurst.size()) - 1;
  }
  if (p.dim < 1) fail("dim must be a positive integer");
  p.horizon = doc.contains("horizon") ? number(doc["horizon"], "horizon") : 1.0;
  p.base_point = doc.contains("base_point") ? numbers(doc["base_point"], "base_point")
                                            : std::vector<double>(p.dim, 0.0);

  if (doc.contains("grid")) {
    const json& g = doc["grid"];
    if (!g.is_object()) fail("grid must be an object");
    only_keys(g, {"n_steps"}, "grid");
    if (g.contains("n_steps")) {
      if (!g["n_steps"].is_number_integer() || g["n_steps"].get<long long>() < 1)
        fail("grid.n_steps must be a positive integer");
      rc.n_steps = g["n_steps"].get<std::size_t>();
    }
  }
  if (doc.contains("workers")) {
    if (!doc["workers"].is_number_integer() || doc["workers"].get<long long>() < 1)
      fail("workers must be a positive integer");
    rc.workers = doc["workers"].get<unsigned>();
  }

  rc.initial_data = normalise_initial_data(
      doc.contains("initial_data") ? doc["initial_data"] : json{{"kind", "constant"}}, p.dim);

  rc.resolved = {{"alpha", p.alpha},
                 {"hurst", p.hurst},
                 {"dim", p.dim},
                 {"horizon", p.horizon},
                 {"base_point", p.base_point},
                 {"grid", {{"n_steps", rc.n_steps}}},
                 {"initial_data", rc.initial_data}};
  return rc;
}

RunConfig load_config(const std::filesystem::path& file, const std::vector<std::string>& overrides) {
  std::ifstream in(file);
  if (!in) fail("cannot read config file " + file.string());
  json doc = json::parse(in, nullptr, false, /*ignore_comments=*/true);
  if (doc.is_discarded()) fail("config file " + file.string() + " is not valid JSON");
  for (const auto& o : overrides) apply_override(doc, o);
  return parse_config(doc);
}

InitialData make_initial_data(const json& spec) {
  const std::string kind = spec.at("kind");
  if (kind == "constant") return InitialData::constant(spec.at("value"));
  if (kind == "gaussian_bump")
    return InitialData::gaussian_bump(spec.at("amplitude"), spec.at("center").get<std::vector<double>>(),
                                      spec.at("width"));
  if (kind == "indicator_box")
    return InitialData::indicator_box(spec.at("lower").get<std::vector<double>>(),
                                      spec.at("upper").get<std::vector<double>>(), spec.at("value"));
  fail("unknown initial data kind " + kind);
}

std::uint64_t config_hash(const json& doc) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : doc.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace fracheat::cli
