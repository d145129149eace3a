#include "fracheat_cli/app.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "fracheat/analysis.hpp"
#include "fracheat/energy.hpp"
#include "fracheat/fk_engine.hpp"
#include "fracheat/noise_field.hpp"
#include "fracheat/stable.hpp"
#include "fracheat_cli/config.hpp"
#include "fracheat_cli/record.hpp"

namespace fracheat::cli {

namespace {

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Stream domains of the command layer; estimator domains live below 60.
constexpr std::uint64_t kFrozenPathDomain = 61;
constexpr std::uint64_t kSamplePathDomain = 62;
constexpr std::uint64_t kSampleSheetDomain = 63;
constexpr std::uint64_t kSampleZDomain = 64;
constexpr std::uint64_t kEnergyDomain = 71;

std::string trimmed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s = buf;
  if (s.find('.') != std::string::npos) {
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
  }
  if (s == "-0") s = "0";
  return s;
}

struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
  unsigned workers = 0;  // 0: take the config value
};

void add_common(CLI::App* sub, Common& c, bool stochastic) {
  sub->add_option("config", c.config, "JSON config file")->required()->check(CLI::ExistingFile);
  sub->add_option("--set", c.sets, "Override a config key, e.g. --set grid.n_steps=512");
  sub->add_option("--workers", c.workers, "Worker threads (results do not depend on it)")
      ->check(CLI::PositiveNumber);
  if (stochastic)
    c.seed_opt = sub->add_option("--seed", c.seed, "Master seed")->required();
}

/// What a command hands back for the record.
struct Outcome {
  json result;
  std::vector<std::string> failures;  // names of failed checks
  std::vector<std::string> lines;     // printed on success or failure
  std::vector<std::string> csv_header;
  std::vector<std::vector<std::string>> csv_rows;
  std::function<void(const std::filesystem::path&, CliContext&)> after_write;
};

struct Setup {
  const RunConfig& rc;
  const Model& model;
  const McOptions& opt;
  InitialData f;
};

using Body = std::function<Outcome(const Setup&)>;

int run_recorded(CliContext& ctx, const std::string& command, const Common& c, json options,
                 const Body& body) {
  const RunConfig rc = load_config(c.config, c.sets);
  const Model model(rc.params);
  json resolved = rc.resolved;
  resolved["run"] = {{"command", command}, {"options", std::move(options)}};
  const std::uint64_t hash = config_hash(resolved);

  McOptions opt;
  opt.seed = c.seed;
  opt.workers = c.workers ? c.workers : rc.workers;
  opt.config_hash = hash;

  const auto start = std::chrono::system_clock::now();
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o = body(Setup{rc, model, opt, make_initial_data(rc.initial_data)});
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto finish = std::chrono::system_clock::now();

  json record = {{"schema_version", kSchemaVersion},
                 {"artifact_version", artifact_version()},
                 {"command", command},
                 {"config", resolved},
                 {"config_hash", hash_hex(hash)},
                 {"derived",
                  {{"kappa", model.kappa()}, {"gamma", model.gamma()}, {"alpha_H", model.alpha_H()}}},
                 {"seed", c.seed_opt ? json(c.seed) : json(nullptr)},
                 {"workers", opt.workers},
                 {"started_at", utc_stamp(start, false)},
                 {"finished_at", utc_stamp(finish, false)},
                 {"failed_checks", o.failures},
                 {"result", o.result},
                 {"timing", {{"wall_time_s", wall}}}};
  const auto path = write_record(ctx.results_root, command, utc_stamp(start, true), hash_hex(hash), record);
  ctx.written.push_back(path);
  if (!o.csv_header.empty()) ctx.written.push_back(write_csv(path, o.csv_header, o.csv_rows));
  if (o.after_write) o.after_write(path, ctx);

  for (const auto& l : o.lines) ctx.out << l << '\n';
  ctx.out << "record " << path.string() << '\n';
  if (!o.failures.empty()) {
    for (const auto& f : o.failures) ctx.err << "FAILED " << f << '\n';
    return kExitCheckFailed;
  }
  return kExitOk;
}

std::string pm(const MCEstimate& e) { return fmt(e.mean) + " +- " + fmt(e.std_error); }

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(std::string(what) + ": not a number list: " + text);
    }
  }
  return v;
}

// ---------------------------------------------------------------- validate

int cmd_validate(CliContext& ctx, const Common& c) {
  const RunConfig rc = load_config(c.config, c.sets);
  try {
    const DerivedConstants d = validate(rc.params);
    ctx.out << "ADMISSIBLE kappa=" << trimmed(d.kappa, 4) << " gamma=" << trimmed(d.gamma, 4)
            << " alpha_H=" << trimmed(d.alpha_H, 6) << '\n';
    return kExitOk;
  } catch (const InadmissibleParameters& e) {
    ctx.out << "INADMISSIBLE kappa=" << trimmed(e.kappa(), 4) << '\n';
    return kExitInadmissible;
  }
}

// ---------------------------------------------------------------- moments

struct MomentsArgs {
  int p = 1;
  std::string mode = "stratonovich";
  std::size_t n_paths = 10000;
  double t = 0.0;  // 0: horizon
};

Outcome body_moments(const Setup& s, const MomentsArgs& a) {
  const double t = a.t > 0.0 ? a.t : s.model.horizon();
  const auto x = s.model.base_point();
  const MCEstimate e = a.mode == "skorohod"
                           ? moment_skorohod(a.p, t, x, s.f, s.model, a.n_paths, s.opt, s.rc.n_steps)
                           : moment_stratonovich(a.p, t, x, s.f, s.model, a.n_paths, s.opt, s.rc.n_steps);
  Outcome o;
  o.result = {{"operation", "moment_" + a.mode},
              {"p", a.p},
              {"t", t},
              {"x", std::vector<double>(x.begin(), x.end())},
              {"estimate", to_json(e)},
              {"grid", {{"n_steps", s.rc.n_steps}, {"diagonal_rule", std::string(kDiagonalRule)}}}};
  o.lines.push_back(pm(e));
  return o;
}

// ---------------------------------------------------------------- converge

struct ConvergeArgs {
  int levels = 4;
  double eta0 = 1e-8;
  double sheet_eta0 = 0.5;
  std::size_t n_sheets = 64;
  std::size_t n_inner = 32;
  std::size_t n_time = 32;
  std::size_t n_space = 120;
  std::size_t path_steps = 64;
  std::size_t reference_paths = 10000;
};

/// |v_k - v_{k-1}| for k >= 1.
std::vector<double> cauchy_deltas(const std::vector<double>& v) {
  std::vector<double> d;
  for (std::size_t k = 1; k < v.size(); ++k) d.push_back(std::abs(v[k] - v[k - 1]));
  return d;
}

bool last_delta_shrinks(const std::vector<double>& d) {
  return d.size() >= 2 && d[d.size() - 1] < d[d.size() - 2];
}

Outcome body_converge(const Setup& s, const ConvergeArgs& a) {
  const double t = s.model.horizon();
  const auto x = s.model.base_point();
  Outcome o;

  // Quadrature route on one frozen path.
  RandomStream rng = derive_stream(s.opt.seed, 0, kFrozenPathDomain);
  const LevyPath path = sample_path(s.model, s.rc.n_steps, rng);
  const double target = s.model.alpha_H() * self_energy(path, s.model).value;
  std::vector<double> etas, variances, rel_errors;
  for (int k = 0; k < a.levels; ++k) {
    const double eta = a.eta0 / std::ldexp(1.0, k);
    const double v = conditional_variance_V(path, Mollifier(eta, eta), s.model);
    etas.push_back(eta);
    variances.push_back(v);
    rel_errors.push_back(std::abs(v / target - 1.0));
  }
  const auto v_deltas = cauchy_deltas(variances);

  // Sheet route: outer means of the smoothed solution, sheets shared across levels.
  SmoothedGrid grid{a.n_time, a.n_space, a.path_steps};
  std::vector<double> sheet_etas, means;
  json sheet_levels = json::array();
  for (int k = 0; k < a.levels; ++k) {
    const double eta = a.sheet_eta0 / std::ldexp(1.0, k);
    const MCEstimate e = smoothed_solution_mean(Mollifier(eta, eta), t, x, s.f, s.model, a.n_sheets,
                                                a.n_inner, s.opt, grid);
    sheet_etas.push_back(eta);
    means.push_back(e.mean);
    sheet_levels.push_back({{"epsilon", eta}, {"delta", eta}, {"estimate", to_json(e)},
                            {"coverage_drops", e.rejected}});
  }
  const auto u_deltas = cauchy_deltas(means);
  const MCEstimate reference =
      moment_stratonovich(1, t, x, s.f, s.model, a.reference_paths, s.opt, s.rc.n_steps);

  std::vector<std::string> flags;
  if (!last_delta_shrinks(v_deltas)) flags.push_back("variance_deltas_not_decreasing");
  if (!last_delta_shrinks(u_deltas)) flags.push_back("sheet_deltas_not_decreasing");
  if (rel_errors.back() >= 0.05) flags.push_back("variance_finest_error_above_5pct");

  o.result = {{"operation", "converge"},
              {"levels", a.levels},
              {"variance_ladder",
               {{"route", "quadrature"},
                {"path_steps", s.rc.n_steps},
                {"alpha_H_self_energy", target},
                {"epsilon", etas},
                {"delta", etas},
                {"variance", variances},
                {"relative_error", rel_errors},
                {"cauchy_deltas", v_deltas}}},
              {"sheet_ladder",
               {{"route", "sheet"},
                {"grid", {{"n_time", a.n_time}, {"n_space", a.n_space}, {"path_steps", a.path_steps}}},
                {"n_sheets", a.n_sheets},
                {"n_inner", a.n_inner},
                {"levels", sheet_levels},
                {"cauchy_deltas", u_deltas},
                {"stratonovich_reference", to_json(reference)}}},
              {"flags", flags}};
  for (int k = 0; k < a.levels; ++k)
    o.lines.push_back("level " + std::to_string(k) + " V/target=" + fmt(variances[k] / target) +
                      " u=" + fmt(means[k]));
  o.lines.push_back("reference u=" + pm(reference));
  for (const auto& f : flags) o.lines.push_back("flag " + f);
  return o;
}

// ---------------------------------------------------------------- holder

struct HolderArgs {
  std::string axis;
  int axis_index = 0;
  std::size_t n_paths = 1000;
  double t = 0.0;
  double offset_lo = std::pow(10.0, -2.5);
  double offset_hi = std::pow(10.0, -0.5);
  std::size_t offset_count = 9;
  std::string lags = "1,2,4,8,16,32,64,128";
  std::size_t time_steps = 1024;
};

Outcome body_holder(const Setup& s, const HolderArgs& a) {
  const double t = a.t > 0.0 ? a.t : s.model.horizon();
  HolderFit h;
  if (a.axis == "space") {
    const auto offsets = geometric_grid(a.offset_lo, a.offset_hi, a.offset_count);
    h = spatial_holder_slope(s.model, t, a.axis_index, offsets, a.n_paths, s.opt, s.rc.n_steps);
  } else {
    std::vector<long> lags;
    for (double v : parse_list(a.lags, "--lags")) lags.push_back(std::lround(v));
    h = temporal_holder_slope(s.model, t, lags, a.n_paths, s.opt, a.time_steps);
  }
  Outcome o;
  json est = json::array();
  for (const auto& e : h.estimates) est.push_back(to_json(e));
  o.result = {{"operation", a.axis == "space" ? "spatial_holder_slope" : "temporal_holder_slope"},
              {"t", t},
              {"fit", to_json(h.fit)},
              {"target", h.target},
              {"tolerance", h.tolerance},
              {"min_r_squared", kMinRSquared},
              {"pass", h.pass},
              {"control", to_json(h.control)},
              {"control_pass", h.control_pass},
              {"abscissae", h.abscissae},
              {"estimates", est}};
  o.csv_header = {"abscissa", "mean", "stderr"};
  for (std::size_t i = 0; i < h.abscissae.size(); ++i)
    o.csv_rows.push_back({fmt(h.abscissae[i]), fmt(h.estimates[i].mean), fmt(h.estimates[i].std_error)});
  o.lines.push_back("slope=" + fmt(h.fit.slope) + " target=" + fmt(h.target) +
                    " r2=" + fmt(h.fit.r_squared) + " control_slope=" + fmt(h.control.slope));
  const std::string name = "holder_" + a.axis;
  if (!h.pass) o.failures.push_back(name);
  if (h.control_pass) o.failures.push_back(name + "_control");
  return o;
}

// ---------------------------------------------------------------- chaos

struct ChaosArgs {
  int n = 1;
  std::string times;
  std::string points;
  double eps = 0.01;
  std::size_t n_paths = 100000;
  int gh_nodes = 24;
};

Outcome body_chaos(const Setup& s, const ChaosArgs& a) {
  const double t = s.model.horizon();
  const auto x = s.model.base_point();
  const int d = s.model.dim();
  std::vector<double> times = a.times.empty() ? std::vector<double>{} : parse_list(a.times, "--times");
  std::vector<double> points = a.points.empty() ? std::vector<double>{} : parse_list(a.points, "--points");
  if (times.empty())
    for (int i = 1; i <= a.n; ++i) times.push_back(t * 0.5 * i / a.n);
  if (points.empty()) points.assign(static_cast<std::size_t>(a.n * d), 0.0);
  if (times.size() != static_cast<std::size_t>(a.n))
    throw UsageError("--times needs n entries");
  if (points.size() != static_cast<std::size_t>(a.n * d))
    throw UsageError("--points needs n * dim entries");

  const double factorial = a.n == 1 ? 1.0 : 2.0;
  const double f_n = chaos_kernel_f_n(a.n, times, points, t, x, s.f, s.model);
  const MCEstimate h = chaos_kernel_h_n_mc(a.n, times, points, t, x, s.f, s.model, a.eps, a.n_paths, s.opt);
  const double target = factorial * f_n;
  Outcome o;
  o.result = {{"operation", "chaos_kernel"},
              {"n", a.n},
              {"times", times},
              {"points", points},
              {"epsilon", a.eps},
              {"f_n", f_n},
              {"n_factorial_f_n", target},
              {"h_n", to_json(h)},
              {"ratio", h.mean / target}};
  double bias = 0.0;
  if (a.n * d <= 3) {
    const double smoothed = chaos_kernel_h_n_smoothed(a.n, times, points, t, x, s.f, s.model, a.eps, a.gh_nodes);
    bias = smoothed - target;
    o.result["h_n_smoothed"] = smoothed;
    o.result["smoothing_bias"] = bias;
  }
  const bool pass = std::abs(h.mean - target) <= 3.0 * h.std_error + std::abs(bias);
  o.result["pass"] = pass;
  o.lines.push_back("f_n=" + fmt(f_n) + " h_n=" + pm(h) + " ratio=" + fmt(h.mean / target));
  if (!pass) o.failures.push_back("chaos_h" + std::to_string(a.n));
  return o;
}

// ---------------------------------------------------------------- sample

struct SampleArgs {
  std::string what;
  std::size_t count = 0;  // 0: 1 path or 1000 Z draws
  std::size_t n_time = 32;
  std::size_t n_space = 120;
};

Outcome body_sample(const Setup& s, const SampleArgs& a) {
  Outcome o;
  const double t = s.model.horizon();
  if (a.what == "path") {
    const std::size_t count = a.count ? a.count : 1;
    o.csv_header = {"path", "t"};
    for (int i = 0; i < s.model.dim(); ++i) o.csv_header.push_back("x" + std::to_string(i + 1));
    for (std::size_t p = 0; p < count; ++p) {
      RandomStream rng = derive_stream(s.opt.seed, p, kSamplePathDomain);
      const LevyPath path = sample_path(s.model, s.rc.n_steps, rng);
      for (std::size_t k = 0; k < path.n_nodes(); ++k) {
        std::vector<std::string> row{std::to_string(p), fmt(path.times()[k])};
        for (int i = 0; i < path.dim(); ++i) row.push_back(fmt(path.position(i, k)));
        o.csv_rows.push_back(std::move(row));
      }
    }
    o.result = {{"operation", "sample_path"}, {"count", count}, {"n_steps", s.rc.n_steps}};
    o.lines.push_back(std::to_string(count) + " path(s) of " + std::to_string(s.rc.n_steps) + " steps");
  } else if (a.what == "z") {
    const std::size_t count = a.count ? a.count : 1000;
    const auto z = sample_Z(s.model, t, count, s.opt.seed, kSampleZDomain, s.opt.workers, s.rc.n_steps);
    RunningStats st;
    for (double v : z) st.push(v);
    o.csv_header = {"index", "z"};
    for (std::size_t i = 0; i < z.size(); ++i) o.csv_rows.push_back({std::to_string(i), fmt(z[i])});
    o.result = {{"operation", "sample_Z"}, {"count", count}, {"t", t}, {"mean", st.mean},
                {"variance", st.variance()}, {"n_steps", s.rc.n_steps}};
    o.lines.push_back("Z mean=" + fmt(st.mean) + " sd=" + fmt(std::sqrt(st.variance())));
  } else {
    const SheetGrid grid = make_sheet_grid(s.model, t, a.n_time, a.n_space);
    RandomStream rng = derive_stream(s.opt.seed, 0, kSampleSheetDomain);
    auto sheet = std::make_shared<NoiseSheet>(sample_sheet(grid, s.model.hurst(), rng));
    json axes = json::array();
    for (const auto& ax : grid.axes) axes.push_back({{"count", ax.size()}, {"first", ax.front()}, {"last", ax.back()}});
    // sum of squared values: a cheap fingerprint of the payload
    double sq = 0.0;
    for (double v : sheet->values()) sq += v * v;
    o.result = {{"operation", "sample_sheet"}, {"axes", axes}, {"node_count", grid.node_count()},
                {"sum_of_squares", sq}, {"format", "FHSHEET1"}};
    o.after_write = [sheet](const std::filesystem::path& record, CliContext& ctx) {
      auto file = record;
      file.replace_extension(".sheet");
      std::ofstream out(file, std::ios::binary);
      sheet->save(out);
      if (!out) throw std::runtime_error("cannot write " + file.string());
      ctx.written.push_back(file);
      ctx.out << "sheet " << file.string() << '\n';
    };
    o.lines.push_back("sheet with " + std::to_string(grid.node_count()) + " nodes");
  }
  return o;
}

// ---------------------------------------------------------------- energy

struct EnergyArgs {
  std::size_t n_paths = 10000;
  std::string lambdas = "2,4";
};

Outcome body_energy(const Setup& s, const EnergyArgs& a) {
  const Model& m = s.model;
  const double t = m.horizon();
  const std::size_t n = s.rc.n_steps;
  const EnergyGrid grid(m, n, t / static_cast<double>(n));
  const auto res = run_ensemble(a.n_paths, 1, s.opt.seed, kEnergyDomain, s.opt.workers,
                                [&](RandomStream& rng, std::size_t, std::span<double> out) {
                                  const LevyPath path = sample_path(m, n, rng);
                                  out[0] = grid.self(path, n);
                                  return true;
                                });
  const MCEstimate e = make_estimate(res.stats[0], s.opt, res.rejected);
  double moments = 1.0;
  for (double b : m.space_exponents()) moments *= negative_moment(m.alpha(), -b);
  const double oracle = 2.0 * moments * std::pow(t, m.gamma()) / (m.kappa() * m.gamma());

  RandomStream rng = derive_stream(s.opt.seed, 0, kEnergyDomain);
  const LevyPath path = sample_path(m, n, rng);
  json scaling = json::array();
  double worst = 0.0;
  for (double lambda : parse_list(a.lambdas, "--lambdas")) {
    const auto [base, image] = path_scaling_check(path, m, lambda);
    const double err = std::abs(image.value / base.value / std::pow(lambda, m.gamma()) - 1.0);
    worst = std::max(worst, err);
    scaling.push_back({{"lambda", lambda}, {"ratio", image.value / base.value},
                       {"expected", std::pow(lambda, m.gamma())}, {"relative_error", err}});
  }
  const bool mean_ok = std::abs(e.mean - oracle) <= 3.0 * e.std_error;
  const bool scaling_ok = worst <= 1e-10;
  Outcome o;
  o.result = {{"operation", "self_energy"},
              {"t", t},
              {"estimate", to_json(e)},
              {"oracle", oracle},
              {"z_score", e.std_error > 0 ? (e.mean - oracle) / e.std_error : 0.0},
              {"scaling", scaling},
              {"grid", {{"n_steps", n}, {"diagonal_rule", std::string(kDiagonalRule)}}}};
  o.lines.push_back("self energy " + pm(e) + " oracle=" + fmt(oracle));
  o.lines.push_back("scaling max relative error " + fmt(worst));
  if (!mean_ok) o.failures.push_back("expected_energy");
  if (!scaling_ok) o.failures.push_back("path_scaling");
  return o;
}

// ---------------------------------------------------------------- verify

struct VerifyArgs {
  bool quick = false;
};

CheckResult bound_row(const BoundCheck& b) {
  return {b.name, b.max_ratio, b.refined_max_ratio, kRefinementTolerance, b.pass,
          "refined max ratio within 20% of coarse"};
}

Outcome body_verify(const Setup& s, const VerifyArgs& a) {
  const Model& m = s.model;
  const std::size_t grid_n = a.quick ? 5 : 9;
  const auto g = geometric_grid(1e-2, 1e2, grid_n);
  const double beta = 0.4;
  std::vector<CheckResult> rows;
  json detail;

  const std::vector<double> betas{0.3, 0.5, 0.7};
  const BoundCheck l72 = lemma_72_check(betas, g, g);
  rows.push_back(bound_row(l72));
  detail["lemma_72"] = to_json(l72);

  try {
    const Lemma73Result l73 = lemma_73_check(m.alpha(), beta, g, g);
    rows.push_back(bound_row(l73.bound));
    rows.push_back({"lemma_73_routes", 0.0, l73.max_route_gap, kRouteTolerance,
                    l73.max_route_gap <= kRouteTolerance, "Fourier vs density route"});
    rows.push_back(bound_row(l73.pair_bound));
    detail["lemma_73"] = {{"bound", to_json(l73.bound)}, {"max_route_gap", l73.max_route_gap},
                          {"pair_bound", to_json(l73.pair_bound)}};
  } catch (const RouteDisagreementError& e) {
    rows.push_back({"lemma_73_routes", 0.0, 1.0, kRouteTolerance, false, e.what()});
  }

  const Lemma75Result l75 = lemma_75_check(m, a.quick ? 500 : 1000, a.quick ? 5000 : 10000, s.opt, s.rc.n_steps);
  rows.push_back({"lemma_75", l75.large.mean, l75.small.mean, 0.2, l75.pass,
                  l75.cells_decrease ? "split-sample gap" : "split-sample gap; cells not decreasing"});
  detail["lemma_75"] = {{"small", to_json(l75.small)}, {"large", to_json(l75.large)},
                        {"relative_gap", l75.relative_gap}, {"cells_decrease", l75.cells_decrease}};

  const Lemma76Result l76 = lemma_76_check(m.alpha(), beta, g);
  rows.push_back(bound_row(l76.bound));
  rows.push_back({"lemma_76_limit", l76.limit, l76.small_y_ratio, 0.01, l76.limit_error <= 0.01,
                  "small-y ratio vs limit integral"});
  detail["lemma_76"] = {{"bound", to_json(l76.bound)}, {"limit", l76.limit},
                        {"small_y_ratio", l76.small_y_ratio}, {"limit_error", l76.limit_error}};

  const std::vector<double> lags{0.1, 0.2, 0.4, 0.8};
  const FactorizationCheck fc = kernel_factorization_check(m.hurst()[0], lags);
  rows.push_back({"kernel_factorization_spread", 0.0, fc.spread, 0.01, fc.spread <= 0.01, "ratio constancy"});
  rows.push_back({"kernel_factorization_homogeneity", 0.0, fc.homogeneity_error, 0.01,
                  fc.homogeneity_error <= 0.01, "I(2h)/I(h) against 2^(2H0-2)"});
  detail["kernel_factorization"] = {{"lags", fc.lags}, {"integrals", fc.integrals}, {"ratios", fc.ratios},
                                    {"c0", fc.c0}};

  const std::size_t n_ks = a.quick ? 2000 : 10000;
  const ScalingCheck ks = scaling_ks_check(m, 4.0, n_ks, s.opt, 0.0, s.rc.n_steps);
  const ScalingCheck ksc = scaling_ks_check(m, 4.0, n_ks, s.opt, 0.2, s.rc.n_steps);
  rows.push_back({"scaling_ks", 0.01, ks.ks.p_value, 0.0, ks.pass, "p-value must exceed 0.01"});
  rows.push_back({"scaling_ks_control", 0.01, ksc.ks.p_value, 0.0, !ksc.pass,
                  "misscaled exponent +0.2 must be rejected"});
  detail["scaling_ks"] = {{"ks", to_json(ks.ks)}, {"exponent", ks.exponent}};
  detail["scaling_ks_control"] = {{"ks", to_json(ksc.ks)}, {"exponent", ksc.exponent}};

  const SubadditivityCheck sub = subadditivity_check(m, 0.5, 0.5, a.quick ? 1000 : 4000, s.opt, s.rc.n_steps);
  rows.push_back({"subadditivity", sub.z1.mean + sub.z2.mean, sub.z12.mean,
                  3.0 * pooled_se(pooled_se(sub.z1.std_error, sub.z2.std_error), sub.z12.std_error),
                  sub.pass, "E Z(t1+t2) <= E Z(t1) + E Z(t2) + 3 SE"});
  detail["subadditivity"] = {{"z1", to_json(sub.z1)}, {"z2", to_json(sub.z2)}, {"z12", to_json(sub.z12)},
                             {"unit", to_json(sub.unit)}, {"scaling_gap", sub.scaling_gap}};

  if (!a.quick) {
    const std::vector<double> lambdas{0.01, 0.05, 0.1};
    const TailReport tr = tail_diagnostic(m, 10000, s.opt, lambdas, s.rc.n_steps);
    detail["tail"] = {{"exponent", tr.exponent}, {"z", tr.z}, {"log_survival", tr.log_survival},
                      {"fitted_c", tr.fitted_c}, {"fit_r_squared", tr.fit_r_squared},
                      {"decreasing", tr.decreasing}, {"lambdas", tr.lambdas}, {"mgf", tr.mgf},
                      {"mgf_subsample", tr.mgf_subsample}, {"mgf_delta", tr.mgf_delta},
                      {"n_paths", tr.n_paths}};
  }

  Outcome o;
  json checks = json::array();
  o.csv_header = {"check", "target", "estimate", "tolerance", "pass"};
  for (const auto& r : rows) {
    checks.push_back(to_json(r));
    o.csv_rows.push_back({r.name, fmt(r.target), fmt(r.estimate), fmt(r.tolerance), r.pass ? "1" : "0"});
    o.lines.push_back((r.pass ? "PASS " : "FAIL ") + r.name + " estimate=" + fmt(r.estimate));
    if (!r.pass) o.failures.push_back(r.name);
  }
  o.result = {{"operation", "verify"}, {"quick", a.quick}, {"checks", checks}, {"detail", detail}};
  return o;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, CliContext& ctx) {
  ctx.written.clear();
  CLI::App app{"Feynman-Kac Monte Carlo for the fractional stochastic heat equation", "fracheat"};
  app.require_subcommand(1);
  app.set_version_flag("--version", artifact_version());

  Common c_validate, c_moments, c_converge, c_holder, c_chaos, c_sample, c_energy, c_verify;

  auto* validate_cmd = app.add_subcommand("validate", "Check a config and print derived constants");
  add_common(validate_cmd, c_validate, false);

  MomentsArgs ma;
  auto* moments = app.add_subcommand("moments", "Moment of the solution at (t, x)");
  add_common(moments, c_moments, true);
  moments->add_option("--p", ma.p, "Moment order")->check(CLI::Range(1, 4));
  moments->add_option("--mode", ma.mode)->check(CLI::IsMember({"stratonovich", "skorohod"}));
  moments->add_option("--n-paths", ma.n_paths)->check(CLI::PositiveNumber);
  moments->add_option("--t", ma.t, "Time (default: horizon)");

  ConvergeArgs ca;
  auto* converge = app.add_subcommand("converge", "Mollifier ladder for V and the smoothed solution");
  add_common(converge, c_converge, true);
  converge->add_option("--ladder-levels", ca.levels);
  converge->add_option("--eta0", ca.eta0, "First (eps, delta) of the variance ladder")->check(CLI::PositiveNumber);
  converge->add_option("--sheet-eta0", ca.sheet_eta0, "First (eps, delta) of the sheet ladder")
      ->check(CLI::PositiveNumber);
  converge->add_option("--n-sheets", ca.n_sheets)->check(CLI::PositiveNumber);
  converge->add_option("--n-inner", ca.n_inner)->check(CLI::PositiveNumber);
  converge->add_option("--sheet-n-time", ca.n_time)->check(CLI::PositiveNumber);
  converge->add_option("--sheet-n-space", ca.n_space)->check(CLI::PositiveNumber);
  converge->add_option("--reference-paths", ca.reference_paths)->check(CLI::PositiveNumber);

  HolderArgs ha;
  auto* holder = app.add_subcommand("holder", "Hoelder exponent fit of the second-moment increment");
  add_common(holder, c_holder, true);
  holder->add_option("--axis", ha.axis)->required()->check(CLI::IsMember({"space", "time"}));
  holder->add_option("--axis-index", ha.axis_index, "Spatial axis (0-based)");
  holder->add_option("--n-paths", ha.n_paths)->check(CLI::PositiveNumber);
  holder->add_option("--t", ha.t);
  holder->add_option("--offset-lo", ha.offset_lo)->check(CLI::PositiveNumber);
  holder->add_option("--offset-hi", ha.offset_hi)->check(CLI::PositiveNumber);
  holder->add_option("--offset-count", ha.offset_count);
  holder->add_option("--lags", ha.lags, "Comma-separated lags in cells");
  holder->add_option("--time-steps", ha.time_steps, "Cells for the temporal fit")->check(CLI::PositiveNumber);

  ChaosArgs cha;
  auto* chaos = app.add_subcommand("chaos", "Chaos kernel f_n against the mollified estimate h_n");
  add_common(chaos, c_chaos, true);
  chaos->add_option("--n", cha.n)->check(CLI::Range(1, 2));
  chaos->add_option("--times", cha.times, "Comma-separated s_1..s_n");
  chaos->add_option("--points", cha.points, "Comma-separated y_1..y_n (n * dim numbers)");
  chaos->add_option("--eps", cha.eps)->check(CLI::PositiveNumber);
  chaos->add_option("--n-paths", cha.n_paths)->check(CLI::PositiveNumber);
  chaos->add_option("--gh-nodes", cha.gh_nodes)->check(CLI::Range(4, 64));

  SampleArgs sa;
  auto* sample = app.add_subcommand("sample", "Draw paths, noise sheets or Z samples");
  add_common(sample, c_sample, true);
  sample->add_option("--what", sa.what)->required()->check(CLI::IsMember({"path", "sheet", "z"}));
  sample->add_option("--count", sa.count);
  sample->add_option("--n-time", sa.n_time)->check(CLI::PositiveNumber);
  sample->add_option("--n-space", sa.n_space)->check(CLI::PositiveNumber);

  EnergyArgs ea;
  auto* energy = app.add_subcommand("energy", "Self energy Monte Carlo and path scaling");
  add_common(energy, c_energy, true);
  energy->add_option("--n-paths", ea.n_paths)->check(CLI::PositiveNumber);
  energy->add_option("--lambdas", ea.lambdas);

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "Lemma, scaling and sub-additivity suite");
  add_common(verify, c_verify, true);
  verify->add_flag("--quick", va.quick, "Reduced grids and sample sizes");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, ctx.out, ctx.err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*validate_cmd) return cmd_validate(ctx, c_validate);
    if (*moments)
      return run_recorded(ctx, "moments", c_moments,
                          {{"p", ma.p}, {"mode", ma.mode}, {"n_paths", ma.n_paths}, {"t", ma.t}},
                          [&](const Setup& s) { return body_moments(s, ma); });
    if (*converge) {
      if (ca.levels < 3) throw UsageError("--ladder-levels must be at least 3");
      return run_recorded(ctx, "converge", c_converge,
                          {{"levels", ca.levels}, {"eta0", ca.eta0}, {"sheet_eta0", ca.sheet_eta0},
                           {"n_sheets", ca.n_sheets}, {"n_inner", ca.n_inner}, {"n_time", ca.n_time},
                           {"n_space", ca.n_space}, {"path_steps", ca.path_steps},
                           {"reference_paths", ca.reference_paths}},
                          [&](const Setup& s) { return body_converge(s, ca); });
    }
    if (*holder)
      return run_recorded(ctx, "holder", c_holder,
                          {{"axis", ha.axis}, {"axis_index", ha.axis_index}, {"n_paths", ha.n_paths},
                           {"t", ha.t}, {"offset_lo", ha.offset_lo}, {"offset_hi", ha.offset_hi},
                           {"offset_count", ha.offset_count}, {"lags", ha.lags},
                           {"time_steps", ha.time_steps}},
                          [&](const Setup& s) { return body_holder(s, ha); });
    if (*chaos)
      return run_recorded(ctx, "chaos", c_chaos,
                          {{"n", cha.n}, {"times", cha.times}, {"points", cha.points}, {"eps", cha.eps},
                           {"n_paths", cha.n_paths}, {"gh_nodes", cha.gh_nodes}},
                          [&](const Setup& s) { return body_chaos(s, cha); });
    if (*sample)
      return run_recorded(ctx, "sample", c_sample,
                          {{"what", sa.what}, {"count", sa.count}, {"n_time", sa.n_time}, {"n_space", sa.n_space}},
                          [&](const Setup& s) { return body_sample(s, sa); });
    if (*energy)
      return run_recorded(ctx, "energy", c_energy, {{"n_paths", ea.n_paths}, {"lambdas", ea.lambdas}},
                          [&](const Setup& s) { return body_energy(s, ea); });
    if (*verify)
      return run_recorded(ctx, "verify", c_verify, {{"quick", va.quick}},
                          [&](const Setup& s) { return body_verify(s, va); });
  } catch (const UsageError& e) {
    ctx.err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    ctx.err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InadmissibleParameters& e) {
    ctx.err << e.what() << '\n';
    return kExitInadmissible;
  } catch (const std::exception& e) {
    ctx.err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace fracheat::cli
