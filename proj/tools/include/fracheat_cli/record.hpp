#pragma once

// Run records: JSON serialisation of estimator results and the
// append-only results directory.

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include "fracheat/analysis.hpp"
#include "fracheat/mc.hpp"
#include "fracheat/stats.hpp"
#include "fracheat_cli/config.hpp"

namespace fracheat::cli {

inline constexpr int kSchemaVersion = 1;

/// Library version baked in at build time.
std::string artifact_version();

json to_json(const MCEstimate& e);
json to_json(const SlopeFit& f);
json to_json(const BoundCheck& b);
json to_json(const KsResult& k);
json to_json(const CheckResult& c);

/// 2026-10-15T12:00:00.123Z, or 20261015T120000123Z when compact.
std::string utc_stamp(std::chrono::system_clock::time_point t, bool compact);

/// $FRACHEAT_RESULTS, else ./runs.
std::filesystem::path default_results_root();

/// Writes root/command/<stamp>-<hash>.json. An existing file is never
/// replaced; a numeric suffix is added instead.
std::filesystem::path write_record(const std::filesystem::path& root, const std::string& command,
                                   const std::string& stamp, const std::string& hash,
                                   const json& record);

/// CSV next to a record: same stem, .csv extension.
std::filesystem::path write_csv(const std::filesystem::path& record_path,
                                const std::vector<std::string>& header,
                                const std::vector<std::vector<std::string>>& rows);

/// 17 significant digits, enough to round-trip.
std::string fmt(double v);

}  // namespace fracheat::cli
