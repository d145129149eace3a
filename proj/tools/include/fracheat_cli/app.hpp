#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace fracheat::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,         // bad flags or config
  kExitInadmissible = 2,  // kappa <= 0
  kExitCheckFailed = 3,
  kExitRuntime = 4,       // estimator raised
};

struct CliContext {
  std::ostream& out;
  std::ostream& err;
  std::filesystem::path results_root;
  std::vector<std::filesystem::path> written;  // files created by the last run
};

/// args excludes the program name.
int run_cli(const std::vector<std::string>& args, CliContext& ctx);

}  // namespace fracheat::cli
