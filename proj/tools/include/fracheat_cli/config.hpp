#pragma once

// Run configuration: a JSON document with model fields, grid and initial
// data, plus dotted-key overrides from the command line.
//
//   {
//     "alpha": 2.0,
//     "hurst": [0.75, 0.75],        // H0, H1..Hd (required)
//     "dim": 1,                     // defaults to len(hurst) - 1
//     "horizon": 1.0,
//     "base_point": [0.0],
//     "grid": {"n_steps": 256},
//     "initial_data": {"kind": "constant", "value": 1.0},
//     "workers": 1                  // execution only, not hashed
//   }

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "fracheat/fk_engine.hpp"
#include "fracheat/params.hpp"

namespace fracheat::cli {

using nlohmann::json;

struct RunConfig {
  ModelParams params;
  json initial_data;        // normalised, every field present
  std::size_t n_steps = 256;
  unsigned workers = 1;
  json resolved;            // canonical form of everything above except workers
};

/// Applies "a.b.c=value"; value is parsed as JSON, else taken as a string.
void apply_override(json& doc, const std::string& assignment);

/// Fills defaults and checks types and shapes. Throws ConfigError. Does not
/// check admissibility.
RunConfig parse_config(const json& doc);

/// Reads a file (JSON with comments allowed) and applies the overrides.
RunConfig load_config(const std::filesystem::path& file, const std::vector<std::string>& overrides);

InitialData make_initial_data(const json& spec);

/// 64-bit FNV-1a of the compact dump (keys sorted).
std::uint64_t config_hash(const json& doc);
std::string hash_hex(std::uint64_t h);

}  // namespace fracheat::cli
