#include "fracheat_cli/record.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <stdexcept>

#ifndef FRACHEAT_VERSION
#define FRACHEAT_VERSION "unknown"
#endif

namespace fracheat::cli {

std::string artifact_version() { return FRACHEAT_VERSION; }

json to_json(const MCEstimate& e) {
  return {{"mean", e.mean},
          {"stderr", e.std_error},
          {"n_samples", e.n_samples},
          {"seed", e.seed},
          {"config_hash", hash_hex(e.config_hash)},
          {"rejected_count", e.rejected}};
}

json to_json(const SlopeFit& f) {
  return {{"abscissae", f.abscissae}, {"ordinates", f.ordinates},   {"slope", f.slope},
          {"intercept", f.intercept}, {"r_squared", f.r_squared},   {"stderr_slope", f.stderr_slope}};
}

json to_json(const BoundCheck& b) {
  return {{"name", b.name},           {"points", b.points},
          {"ratios", b.ratios},       {"max_ratio", b.max_ratio},
          {"refined_max_ratio", b.refined_max_ratio}, {"pass", b.pass}};
}

json to_json(const KsResult& k) {
  return {{"statistic", k.statistic}, {"p_value", k.p_value}, {"n1", k.n1}, {"n2", k.n2}};
}

json to_json(const CheckResult& c) {
  return {{"name", c.name},           {"target", c.target}, {"estimate", c.estimate},
          {"tolerance", c.tolerance}, {"pass", c.pass},     {"detail", c.detail}};
}

std::string utc_stamp(std::chrono::system_clock::time_point t, bool compact) {
  using namespace std::chrono;
  const auto ms = duration_cast<milliseconds>(t.time_since_epoch()).count() % 1000;
  const std::time_t secs = system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[64];
  if (compact)
    std::snprintf(buf, sizeof buf, "%04d%02d%02dT%02d%02d%02d%03dZ", tm.tm_year + 1900, tm.tm_mon + 1,
                  tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  else
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

std::filesystem::path default_results_root() {
  if (const char* env = std::getenv("FRACHEAT_RESULTS"); env && *env) return env;
  return "runs";
}

std::filesystem::path write_record(const std::filesystem::path& root, const std::string& command,
                                   const std::string& stamp, const std::string& hash,
                                   const json& record) {
  const auto dir = root / command;
  std::filesystem::create_directories(dir);
  const std::string text = record.dump(2) + "\n";
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::string name = stamp + "-" + hash;
    if (attempt > 0) name += "-" + std::to_string(attempt);
    const auto path = dir / (name + ".json");
    // "x": fail rather than truncate an existing record
    std::FILE* f = std::fopen(path.c_str(), "wx");
    if (!f) {
      if (errno == EEXIST) continue;
      throw std::runtime_error("cannot create record " + path.string());
    }
    const bool ok = std::fwrite(text.data(), 1, text.size(), f) == text.size();
    if (std::fclose(f) != 0 || !ok) throw std::runtime_error("short write to " + path.string());
    return path;
  }
  throw std::runtime_error("too many records with stamp " + stamp);
}

std::filesystem::path write_csv(const std::filesystem::path& record_path,
                                const std::vector<std::string>& header,
                                const std::vector<std::vector<std::string>>& rows) {
  auto path = record_path;
  path.replace_extension(".csv");
  std::ofstream out(path);
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return path;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace fracheat::cli
