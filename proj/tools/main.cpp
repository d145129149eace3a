#include <iostream>

#include "fracheat_cli/app.hpp"
#include "fracheat_cli/record.hpp"

int main(int argc, char** argv) {
  fracheat::cli::CliContext ctx{std::cout, std::cerr, fracheat::cli::default_results_root(), {}};
  return fracheat::cli::run_cli({argv + 1, argv + argc}, ctx);
}
