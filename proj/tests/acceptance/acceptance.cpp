// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <unistd.h>

#include "fracheat/analysis.hpp"
#include "fracheat/energy.hpp"
#include "fracheat/fk_engine.hpp"
#include "fracheat/noise_field.hpp"
#include "fracheat/stable.hpp"
#include "fracheat_cli/app.hpp"
#include "fracheat_cli/config.hpp"

using namespace fracheat;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string num(double v, int digits = 6) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

Model make_model(double alpha, std::vector<double> hurst) {
  ModelParams p;
  p.alpha = alpha;
  p.hurst = std::move(hurst);
  p.dim = static_cast<int>(p.hurst.size()) - 1;
  p.base_point.assign(p.dim, 0.0);
  return Model(p);
}

McOptions options(std::uint64_t seed) {
  McOptions o;
  o.seed = seed;
  o.workers = std::max(1u, std::thread::hardware_concurrency());
  return o;
}

const std::vector<double> kOrigin{0.0};

Verdict expected_energy() {
  const Model m = make_model(2.0, {0.75, 0.8});
  const std::size_t n = 256;
  const EnergyGrid grid(m, n, 1.0 / n);
  const auto opt = options(101);
  const auto res = run_ensemble(10000, 1, opt.seed, 71, opt.workers,
                                [&](RandomStream& rng, std::size_t, std::span<double> out) {
                                  out[0] = grid.self(sample_path(m, n, rng), n);
                                  return true;
                                });
  const double mean = res.stats[0].mean, se = res.stats[0].standard_error();
  const double oracle = 2.0 * negative_moment(2.0, 0.4) / (m.kappa() * (m.kappa() + 1.0));
  return {std::abs(mean - oracle) <= 3.0 * se,
          "mean=" + num(mean) + " se=" + num(se, 3) + " oracle=" + num(oracle) + " z=" + num((mean - oracle) / se, 3)};
}

Verdict deterministic_scaling() {
  double worst = 0.0;
  const std::vector<Model> models{make_model(2.0, {0.75, 0.75}), make_model(2.0, {0.75, 0.8}),
                                  make_model(1.5, {0.8, 0.9}), make_model(1.0, {0.9, 0.9}),
                                  make_model(1.8, {0.9, 0.85, 0.9})};
  for (const auto& m : models) {
    RandomStream rng = derive_stream(102, 0);
    const LevyPath path = sample_path(m, 128, rng);
    for (double lambda : {2.0, 4.0}) {
      const auto [base, image] = path_scaling_check(path, m, lambda);
      worst = std::max(worst, std::abs(image.value / base.value / std::pow(lambda, m.gamma()) - 1.0));
    }
  }
  return {worst <= 1e-10, "max relative error " + num(worst, 3) + " over 5 configs, lambda in {2,4}"};
}

Verdict distributional_scaling() {
  const Model m = make_model(2.0, {0.75, 0.75});
  const auto ks = scaling_ks_check(m, 4.0, 10000, options(103));
  const auto control = scaling_ks_check(m, 4.0, 10000, options(103), 0.2);
  return {ks.pass && !control.pass,
          "p=" + num(ks.ks.p_value, 3) + " D=" + num(ks.ks.statistic, 3) + "; control(+0.2) p=" +
              num(control.ks.p_value, 3) + " D=" + num(control.ks.statistic, 3)};
}

Verdict mollifier_convergence() {
  const Model m = make_model(2.0, {0.75, 0.75});
  // quadrature ladder on a frozen path
  RandomStream rng = derive_stream(104, 0, 61);
  const LevyPath path = sample_path(m, 256, rng);
  const double target = m.alpha_H() * self_energy(path, m).value;
  std::vector<double> v;
  std::string ladder;
  for (int k = 0; k < 4; ++k) {
    const double eta = 1e-8 / std::ldexp(1.0, k);
    v.push_back(conditional_variance_V(path, Mollifier(eta, eta), m));
    ladder += (k ? "," : "") + num(v.back() / target, 5);
  }
  const double finest = std::abs(v.back() / target - 1.0);
  const double d1 = std::abs(v[2] - v[1]), d2 = std::abs(v[3] - v[2]);

  // sheet route against the quadrature route at a level the sheet grid resolves
  const Mollifier coarse(0.25, 0.25);
  RandomStream prng = derive_stream(104, 1, 61);
  const LevyPath p2 = sample_path(m, 256, prng);
  const SheetGrid grid = make_sheet_grid(m, 1.0, 32, 120);
  const SheetSampler sampler(grid, std::vector<double>(m.hurst().begin(), m.hurst().end()));
  const TabulatedFunction a = anchored_A(grid, p2, coarse, 1.0, kOrigin);
  const double quad = conditional_variance_V(p2, coarse, m);
  RunningStats sq;
  for (std::size_t i = 0; i < 2000; ++i) {
    RandomStream r = derive_stream(104, i, 62);
    const double val = riemann_pairing(sampler.sample(r), a);
    sq.push(val * val);
  }
  const bool routes = std::abs(sq.mean - quad) <= 3.0 * sq.standard_error();
  return {finest < 0.05 && routes,
          "V/target ladder(1e-8 halving)=" + ladder + " finest error=" + num(finest, 3) +
              (d2 < d1 ? " deltas shrinking" : " deltas not shrinking (flagged)") + "; sheet var=" + num(sq.mean, 4) +
              " se=" + num(sq.standard_error(), 3) + " quadrature=" + num(quad, 4)};
}

Verdict skorohod_identity() {
  const Model m = make_model(2.0, {0.75, 0.75});
  const auto one = InitialData::constant(1.0);
  const MCEstimate e = moment_skorohod(1, 1.0, kOrigin, one, m, 2000, options(105));
  std::size_t mismatches = 0, checked = 0;
  for (int p : {1, 2}) {
    const auto reps = moment_bridge(p, 1.0, kOrigin, one, m, 1000, options(105));
    for (const auto& r : reps) {
      if (r.rejected) continue;
      ++checked;
      if (r.stratonovich != r.skorohod * std::exp(0.5 * m.alpha_H() * r.self_sum)) ++mismatches;
    }
  }
  return {e.mean == 1.0 && e.std_error == 0.0 && mismatches == 0 && checked > 0,
          "skorohod mean=" + num(e.mean, 17) + " se=" + num(e.std_error) + "; bridge mismatches " +
              std::to_string(mismatches) + "/" + std::to_string(checked)};
}

Verdict jensen() {
  const Model m = make_model(2.0, {0.75, 0.75});
  const auto one = InitialData::constant(1.0);
  const MCEstimate m1 = moment_stratonovich(1, 1.0, kOrigin, one, m, 10000, options(106));
  const MCEstimate m2 = moment_stratonovich(2, 1.0, kOrigin, one, m, 10000, options(106));
  const double pooled = std::hypot(m2.std_error, 2.0 * m1.mean * m1.std_error);
  return {m2.mean >= m1.mean * m1.mean - 3.0 * pooled,
          "m1=" + num(m1.mean) + " m2=" + num(m2.mean) + " m1^2=" + num(m1.mean * m1.mean) + " pooled se=" +
              num(pooled, 3) + " rejected(p=2)=" + std::to_string(m2.rejected)};
}

Verdict holder_exponents() {
  const Model m = make_model(2.0, {0.75, 0.75});
  const auto offsets = geometric_grid(std::pow(10.0, -2.5), std::pow(10.0, -0.5), 9);
  const HolderFit sp = spatial_holder_slope(m, 1.0, 0, offsets, 1000, options(107));
  const std::vector<long> lags{1, 2, 4, 8, 16, 32, 64, 128};
  const HolderFit tm = temporal_holder_slope(m, 1.0, lags, 2000, options(107));
  return {sp.pass && tm.pass && !sp.control_pass && !tm.control_pass,
          "space slope=" + num(sp.fit.slope, 4) + " (target " + num(sp.target, 3) + ", r2=" + num(sp.fit.r_squared, 4) +
              ", control " + num(sp.control.slope, 3) + (sp.control_pass ? " passes" : " fails") + "); time slope=" +
              num(tm.fit.slope, 4) + " (target " + num(tm.target, 3) + ", r2=" + num(tm.fit.r_squared, 4) +
              ", control " + num(tm.control.slope, 3) + (tm.control_pass ? " passes" : " fails") + ")"};
}

Verdict chaos_consistency() {
  const Model m = make_model(2.0, {0.75, 0.75});
  const auto one = InitialData::constant(1.0);
  const std::vector<double> s{0.5}, y{0.0};
  const double f1 = chaos_kernel_f_n(1, s, y, 1.0, kOrigin, one, m);
  const double eps = 0.01;
  const double smoothed = chaos_kernel_h_n_smoothed(1, s, y, 1.0, kOrigin, one, m, eps);
  const double bias = smoothed - f1;
  const MCEstimate h = chaos_kernel_h_n_mc(1, s, y, 1.0, kOrigin, one, m, eps, 1000000, options(108));
  return {std::abs(h.mean - f1) <= 3.0 * h.std_error + std::abs(bias),
          "f1=" + num(f1, 8) + " h1=" + num(h.mean, 6) + " se=" + num(h.std_error, 3) + " bias(eps=0.01)=" + num(bias, 3)};
}

struct CliRun {
  int code = -1;
  std::string out, err;
  std::vector<fs::path> files;
};

CliRun run_cli(const fs::path& root, const std::vector<std::string>& args) {
  std::ostringstream out, err;
  cli::CliContext ctx{out, err, root, {}};
  CliRun r;
  r.code = cli::run_cli(args, ctx);
  r.out = out.str();
  r.err = err.str();
  r.files = ctx.written;
  return r;
}

std::string result_payload(const CliRun& r) {
  for (const auto& p : r.files)
    if (p.extension() == ".json") return cli::json::parse(std::ifstream(p))["result"].dump();
  return {};
}

fs::path scratch_dir() {
  const auto dir = fs::temp_directory_path() / ("fracheat_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

const char* kConfig = R"({"alpha": 2.0, "hurst": [0.75, 0.75], "dim": 1, "horizon": 1.0, "base_point": [0.0],
  "grid": {"n_steps": 256}, "initial_data": {"kind": "constant", "value": 1.0}})";

Verdict lemma_suite(const fs::path& dir) {
  const auto cfg = (dir / "default.json").string();
  const auto t0 = std::chrono::steady_clock::now();
  const CliRun r = run_cli(dir / "runs", {"verify", cfg, "--quick", "--seed", "109"});
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::string failed = r.err;
  for (auto& c : failed)
    if (c == '\n') c = ' ';
  return {r.code == 0 && secs < 300.0,
          "verify --quick exit " + std::to_string(r.code) + " in " + num(secs, 3) + " s" +
              (failed.empty() ? "" : "; " + failed)};
}

Verdict reproducibility(const fs::path& dir) {
  const auto cfg = (dir / "default.json").string();
  const std::vector<std::vector<std::string>> commands{
      {"moments", cfg, "--p", "2", "--n-paths", "600", "--seed", "110"},
      {"energy", cfg, "--n-paths", "600", "--seed", "110", "--set", "grid.n_steps=64"},
      {"holder", cfg, "--axis", "time", "--n-paths", "300", "--time-steps", "256", "--seed", "110"},
      {"chaos", cfg, "--n", "2", "--n-paths", "20000", "--seed", "110"},
      {"sample", cfg, "--what", "z", "--count", "600", "--seed", "110"},
      {"converge", cfg, "--ladder-levels", "3", "--n-sheets", "8", "--n-inner", "8", "--reference-paths", "600",
       "--seed", "110", "--set", "grid.n_steps=64"},
  };
  std::size_t identical = 0;
  std::string bad;
  for (const auto& base : commands) {
    std::vector<std::string> payloads;
    for (const char* workers : {"1", "1", "3"}) {
      auto args = base;
      args.insert(args.end(), {"--workers", workers});
      const CliRun r = run_cli(dir / "runs", args);
      payloads.push_back(r.code == 0 || r.code == 3 ? result_payload(r) : "exit " + std::to_string(r.code));
    }
    if (!payloads[0].empty() && payloads[0] == payloads[1] && payloads[1] == payloads[2])
      ++identical;
    else
      bad += " " + base[0];
  }
  return {identical == commands.size(),
          std::to_string(identical) + "/" + std::to_string(commands.size()) +
              " commands byte-identical across reruns and worker counts 1/1/3" + (bad.empty() ? "" : "; differ:" + bad)};
}

}  // namespace

int main() {
  const fs::path dir = scratch_dir();
  std::ofstream(dir / "default.json") << kConfig;

  struct Criterion {
    int id;
    const char* name;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "expected-energy identity", expected_energy},
      {2, "deterministic path scaling", deterministic_scaling},
      {3, "distributional scaling (KS) with control", distributional_scaling},
      {4, "mollifier convergence and sheet/quadrature agreement", mollifier_convergence},
      {5, "Skorohod identity and bridge", skorohod_identity},
      {6, "Jensen ordering", jensen},
      {7, "Hoelder exponents with controls", holder_exponents},
      {8, "chaos kernel consistency", chaos_consistency},
      {9, "lemma suite via verify --quick", [&] { return lemma_suite(dir); }},
      {10, "reproducibility", [&] { return reproducibility(dir); }},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %2d %s  %s  [%s; %.1f s]\n", c.id, v.pass ? "PASS" : "FAIL", c.name, v.detail.c_str(), secs);
    std::fflush(stdout);
    if (!v.pass) ++failures;
  }
  fs::remove_all(dir);
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
