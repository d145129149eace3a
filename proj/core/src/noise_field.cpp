#include "fracheat/noise_field.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <numbers>
#include <ostream>
#include <string>

#include "fracheat/energy.hpp"
#include "fracheat/quadrature.hpp"

namespace fracheat {

double covariance_R(double H, double s, double t) {
  const double e = 2.0 * H;
  return 0.5 * (std::pow(std::abs(t), e) + std::pow(std::abs(s), e) - std::pow(std::abs(t - s), e));
}

std::size_t SheetGrid::node_count() const noexcept {
  std::size_t n = axes.empty() ? 0 : 1;
  for (const auto& a : axes) n *= a.size();
  return n;
}

std::size_t SheetGrid::cell_count() const noexcept {
  std::size_t n = axes.empty() ? 0 : 1;
  for (const auto& a : axes) n *= a.empty() ? 0 : a.size() - 1;
  return n;
}

namespace {

std::vector<double> linspace(double lo, double hi, std::size_t cells) {
  std::vector<double> v(cells + 1);
  for (std::size_t k = 0; k <= cells; ++k)
    v[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(cells);
  v[cells] = hi;
  return v;
}

void check_grid(const SheetGrid& grid, std::size_t n_hurst) {
  if (grid.axes.size() < 2) throw std::invalid_argument("sheet grid needs time and space axes");
  if (n_hurst != grid.axes.size())
    throw std::invalid_argument("sheet grid and Hurst vector differ in dimension");
  for (const auto& a : grid.axes) {
    if (a.size() < 2) throw std::invalid_argument("sheet axis needs at least two nodes");
    for (std::size_t k = 1; k < a.size(); ++k)
      if (!(a[k] > a[k - 1])) throw NonPositiveDefiniteError("duplicate or unsorted grid node");
  }
  if (grid.node_count() > kMaxSheetNodes)
    throw std::invalid_argument("sheet grid has " + std::to_string(grid.node_count()) +
                                " nodes, limit " + std::to_string(kMaxSheetNodes));
}

std::vector<std::size_t> axis_sizes(const std::vector<std::vector<double>>& axes, bool cells) {
  std::vector<std::size_t> n;
  for (const auto& a : axes) n.push_back(cells ? a.size() - 1 : a.size());
  return n;
}

// Applies the square matrix m (row-major, size n x n) along `axis` of a
// row-major tensor with the given shape.
void mode_product(std::vector<double>& data, const std::vector<std::size_t>& shape,
                  std::size_t axis, const std::vector<double>& m) {
  const std::size_t n = shape[axis];
  std::size_t pre = 1, post = 1;
  for (std::size_t a = 0; a < axis; ++a) pre *= shape[a];
  for (std::size_t a = axis + 1; a < shape.size(); ++a) post *= shape[a];
  std::vector<double> col(n), out(n);
  for (std::size_t p = 0; p < pre; ++p) {
    for (std::size_t q = 0; q < post; ++q) {
      double* base = data.data() + p * n * post + q;
      for (std::size_t i = 0; i < n; ++i) col[i] = base[i * post];
      for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        const double* row = m.data() + i * n;
        for (std::size_t k = 0; k < n; ++k) s += row[k] * col[k];
        out[i] = s;
      }
      for (std::size_t i = 0; i < n; ++i) base[i * post] = out[i];
    }
  }
}

std::vector<double> cholesky_factor(const std::vector<double>& nodes, double H) {
  const std::size_t n = nodes.size();
  std::vector<std::size_t> live;
  for (std::size_t i = 0; i < n; ++i)
    if (nodes[i] != 0.0) live.push_back(i);
  const auto m = static_cast<Eigen::Index>(live.size());
  Eigen::MatrixXd cov(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) cov(i, j) = covariance_R(H, nodes[live[i]], nodes[live[j]]);
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    const double jitter = 1e-12 * cov.diagonal().maxCoeff();
    cov.diagonal().array() += jitter;
    llt.compute(cov);
    if (llt.info() != Eigen::Success)
      throw NonPositiveDefiniteError("covariance factorization failed (H = " + std::to_string(H) + ")");
  }
  const Eigen::MatrixXd l = llt.matrixL();
  std::vector<double> out(n * n, 0.0);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) out[live[i] * n + live[j]] = l(i, j);
  return out;
}

std::vector<double> rectangle_increments(const SheetGrid& grid, std::span<const double> values) {
  const auto nodes = axis_sizes(grid.axes, false);
  const auto cells = axis_sizes(grid.axes, true);
  const std::size_t rank = nodes.size();
  std::vector<std::size_t> stride(rank, 1);
  for (std::size_t a = rank - 1; a > 0; --a) stride[a - 1] = stride[a] * nodes[a];
  const std::size_t total = grid.cell_count();
  std::vector<double> out(total);
  std::vector<std::size_t> idx(rank, 0);
  for (std::size_t c = 0; c < total; ++c) {
    std::size_t base = 0;
    for (std::size_t a = 0; a < rank; ++a) base += idx[a] * stride[a];
    double sum = 0.0;
    for (std::size_t corner = 0; corner < (std::size_t{1} << rank); ++corner) {
      std::size_t off = base;
      int lower = 0;
      for (std::size_t a = 0; a < rank; ++a) {
        if (corner >> a & 1U)
          off += stride[a];
        else
          ++lower;
      }
      sum += (lower % 2 == 0 ? 1.0 : -1.0) * values[off];
    }
    out[c] = sum;
    for (std::size_t a = rank; a-- > 0;) {
      if (++idx[a] < cells[a]) break;
      idx[a] = 0;
    }
  }
  return out;
}

constexpr char kMagic[8] = {'F', 'H', 'S', 'H', 'E', 'E', 'T', '1'};
constexpr std::uint32_t kFormatVersion = 1;

template <class T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("truncated sheet file");
  return v;
}

}  // namespace

SheetGrid make_sheet_grid(const Model& model, double t, std::size_t n_time, std::size_t n_space) {
  if (!(t > 0.0) || n_time == 0 || n_space == 0)
    throw std::invalid_argument("sheet grid needs t > 0 and positive cell counts");
  SheetGrid g;
  g.axes.push_back(linspace(0.0, t, n_time));
  const double half = std::max(6.0 * std::pow(t, 1.0 / model.alpha()), 6.0);
  for (int i = 0; i < model.dim(); ++i) {
    const double x0 = model.base_point()[static_cast<std::size_t>(i)];
    g.axes.push_back(linspace(x0 - half, x0 + half, n_space));
  }
  return g;
}

NoiseSheet::NoiseSheet(SheetGrid grid, std::vector<double> hurst, std::vector<double> values,
                       std::uint64_t seed)
    : grid_(std::move(grid)), hurst_(std::move(hurst)), values_(std::move(values)), seed_(seed) {
  check_grid(grid_, hurst_.size());
  if (values_.size() != grid_.node_count())
    throw std::invalid_argument("sheet values do not match the grid");
  increments_ = rectangle_increments(grid_, values_);
}

void NoiseSheet::save(std::ostream& out) const {
  out.write(kMagic, sizeof kMagic);
  put(out, kFormatVersion);
  put(out, static_cast<std::uint32_t>(grid_.dim()));
  put(out, seed_);
  for (double h : hurst_) put(out, h);
  for (const auto& a : grid_.axes) {
    put(out, static_cast<std::uint64_t>(a.size()));
    out.write(reinterpret_cast<const char*>(a.data()), static_cast<std::streamsize>(a.size() * sizeof(double)));
  }
  out.write(reinterpret_cast<const char*>(values_.data()),
            static_cast<std::streamsize>(values_.size() * sizeof(double)));
  if (!out) throw std::runtime_error("failed to write sheet");
}

NoiseSheet NoiseSheet::load(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw std::runtime_error("not a sheet file");
  if (get<std::uint32_t>(in) != kFormatVersion) throw std::runtime_error("unsupported sheet version");
  const auto dim = get<std::uint32_t>(in);
  if (dim == 0 || dim > 8) throw std::runtime_error("bad sheet dimension");
  const auto seed = get<std::uint64_t>(in);
  std::vector<double> hurst(dim + 1);
  for (auto& h : hurst) h = get<double>(in);
  SheetGrid grid;
  std::size_t total = 1;
  for (std::uint32_t a = 0; a <= dim; ++a) {
    const auto n = get<std::uint64_t>(in);
    if (n < 2 || n > kMaxSheetNodes) throw std::runtime_error("bad sheet axis length");
    std::vector<double> nodes(n);
    for (auto& v : nodes) v = get<double>(in);
    total *= n;
    if (total > kMaxSheetNodes) throw std::runtime_error("sheet too large");
    grid.axes.push_back(std::move(nodes));
  }
  std::vector<double> values(total);
  for (auto& v : values) v = get<double>(in);
  return NoiseSheet(std::move(grid), std::move(hurst), std::move(values), seed);
}

SheetSampler::SheetSampler(SheetGrid grid, std::vector<double> hurst)
    : grid_(std::move(grid)), hurst_(std::move(hurst)) {
  check_grid(grid_, hurst_.size());
  for (std::size_t a = 0; a < grid_.axes.size(); ++a)
    factors_.push_back(cholesky_factor(grid_.axes[a], hurst_[a]));
}

NoiseSheet SheetSampler::sample(RandomStream& rng, std::uint64_t seed_tag) const {
  const auto shape = axis_sizes(grid_.axes, false);
  std::vector<double> values(grid_.node_count());
  for (auto& v : values) v = rng.normal();
  for (std::size_t a = 0; a < shape.size(); ++a) mode_product(values, shape, a, factors_[a]);
  return NoiseSheet(grid_, hurst_, std::move(values), seed_tag);
}

NoiseSheet sample_sheet(const SheetGrid& grid, std::span<const double> hurst, RandomStream& rng) {
  return SheetSampler(grid, {hurst.begin(), hurst.end()}).sample(rng);
}

std::size_t TabulatedFunction::cell_count() const noexcept {
  std::size_t n = edges.empty() ? 0 : 1;
  for (const auto& e : edges) n *= e.empty() ? 0 : e.size() - 1;
  return n;
}

TabulatedFunction TabulatedFunction::zeros(std::vector<std::vector<double>> edges) {
  TabulatedFunction f{std::move(edges), {}};
  f.values.assign(f.cell_count(), 0.0);
  return f;
}

double inner_product_H(const TabulatedFunction& phi, const TabulatedFunction& psi,
                       std::span<const double> hurst) {
  if (phi.edges != psi.edges) throw std::invalid_argument("inner_product_H: grids differ");
  if (hurst.size() != phi.edges.size())
    throw std::invalid_argument("inner_product_H: Hurst vector does not match the grid");
  if (phi.values.size() != phi.cell_count() || psi.values.size() != psi.cell_count())
    throw std::invalid_argument("inner_product_H: value count does not match the grid");
  const auto shape = axis_sizes(phi.edges, true);
  double alpha_h = 1.0;
  std::vector<std::vector<double>> kernels;
  for (std::size_t a = 0; a < shape.size(); ++a) {
    const double H = hurst[a];
    alpha_h *= H * (2.0 * H - 1.0);
    const auto& e = phi.edges[a];
    const std::size_t n = shape[a];
    std::vector<double> k(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j <= i; ++j)
        k[i * n + j] = k[j * n + i] = power_pair_integral(e[i], e[i + 1], e[j], e[j + 1], 2.0 * H - 2.0);
    kernels.push_back(std::move(k));
  }
  auto apply = [&](std::vector<double> v) {
    for (std::size_t a = 0; a < shape.size(); ++a) mode_product(v, shape, a, kernels[a]);
    return v;
  };
  const auto kpsi = apply(psi.values);
  const auto kphi = apply(phi.values);
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t c = 0; c < kpsi.size(); ++c) {
    s1 += phi.values[c] * kpsi[c];
    s2 += psi.values[c] * kphi[c];
  }
  return alpha_h * 0.5 * (s1 + s2);
}

Mollifier::Mollifier(double eps, double del) : epsilon(eps), delta(del) {
  if (!(eps > 0.0) || !(del > 0.0) || !std::isfinite(eps) || !std::isfinite(del))
    throw std::invalid_argument("mollifier needs epsilon > 0 and delta > 0");
}

double mollified_pair_product(const Mollifier& m1, const Mollifier& m2, double s, double r,
                              std::span<const double> x, std::span<const double> y,
                              std::span<const double> hurst) {
  if (x.size() != y.size() || hurst.size() != x.size() + 1)
    throw std::invalid_argument("mollified_pair_product: dimension mismatch");
  const double H0 = hurst[0];
  double value = H0 * (2.0 * H0 - 1.0) *
                 power_pair_integral(s - m1.delta, s, r - m2.delta, r, 2.0 * H0 - 2.0) /
                 (m1.delta * m2.delta);
  const double sd = std::sqrt(m1.epsilon + m2.epsilon);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double H = hurst[i + 1];
    value *= H * (2.0 * H - 1.0) * abs_moment_table(2.0 * H - 2.0)(x[i] - y[i], sd);
  }
  return value;
}

namespace {

TabulatedFunction build_A(const SheetGrid& grid, const LevyPath& path, const Mollifier& m,
                          double t, std::span<const double> offset) {
  const int d = path.dim();
  if (grid.dim() != d) throw std::invalid_argument("approx_functional_A: dimension mismatch");
  if (path.horizon() < t * (1.0 - 1e-12))
    throw std::invalid_argument("approx_functional_A: path shorter than t");
  const auto times = path.times();
  // path cells inside [0, t]
  std::vector<double> lo, hi;
  std::vector<std::vector<double>> mid(static_cast<std::size_t>(d));
  for (std::size_t j = 0; j + 1 < times.size() && times[j] < t; ++j) {
    lo.push_back(times[j]);
    hi.push_back(std::min(times[j + 1], t));
    for (int i = 0; i < d; ++i)
      mid[static_cast<std::size_t>(i)].push_back(
          0.5 * (path.position(i, j) + path.position(i, j + 1)) + offset[static_cast<std::size_t>(i)]);
  }
  const auto np = static_cast<Eigen::Index>(lo.size());

  const auto& rt = grid.axes[0];
  const auto nr = static_cast<Eigen::Index>(rt.size() - 1);
  Eigen::MatrixXd wt = Eigen::MatrixXd::Zero(nr, np);
  for (Eigen::Index c = 0; c < nr; ++c) {
    const double r = 0.5 * (rt[c] + rt[c + 1]);
    if (r > t) continue;
    const double a = t - r - m.delta, b = t - r;
    for (Eigen::Index j = 0; j < np; ++j) {
      const double ov = std::min(b, hi[j]) - std::max(a, lo[j]);
      if (ov > 0.0) wt(c, j) = ov / m.delta;
    }
  }

  // spatial factor: rows = path cells, columns = space cells (row-major)
  std::size_t ny = 1;
  for (int i = 0; i < d; ++i) ny *= grid.axes[static_cast<std::size_t>(i) + 1].size() - 1;
  Eigen::MatrixXd sp = Eigen::MatrixXd::Ones(np, static_cast<Eigen::Index>(ny));
  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi * m.epsilon);
  std::size_t inner = ny;
  for (int i = 0; i < d; ++i) {
    const auto& e = grid.axes[static_cast<std::size_t>(i) + 1];
    const std::size_t n = e.size() - 1;
    inner /= n;
    for (Eigen::Index j = 0; j < np; ++j) {
      const double xj = mid[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      for (std::size_t col = 0; col < ny; ++col) {
        const std::size_t k = (col / inner) % n;
        const double dy = xj - 0.5 * (e[k] + e[k + 1]);
        sp(j, static_cast<Eigen::Index>(col)) *= norm * std::exp(-dy * dy / (2.0 * m.epsilon));
      }
    }
  }
  const Eigen::MatrixXd a = wt * sp;
  TabulatedFunction out = TabulatedFunction::zeros(grid.axes);
  for (Eigen::Index c = 0; c < nr; ++c)
    for (std::size_t col = 0; col < ny; ++col)
      out.values[static_cast<std::size_t>(c) * ny + col] = a(c, static_cast<Eigen::Index>(col));
  return out;
}

}  // namespace

TabulatedFunction approx_functional_A(const LevyPath& path, const Mollifier& m, double t,
                                      const SheetGrid& grid) {
  const std::vector<double> zero(static_cast<std::size_t>(path.dim()), 0.0);
  return build_A(grid, path, m, t, zero);
}

TabulatedFunction anchored_A(const SheetGrid& grid, const LevyPath& path, const Mollifier& m,
                             double t, std::span<const double> x) {
  const int d = path.dim();
  if (x.size() != static_cast<std::size_t>(d))
    throw std::invalid_argument("anchored_A: base point dimension mismatch");
  std::vector<double> offset(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    offset[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)] - path.position(i, 0);
    const auto& ax = grid.axes[static_cast<std::size_t>(i) + 1];
    for (std::size_t k = 0; k < path.n_nodes() && path.times()[k] <= t; ++k) {
      const double v = path.position(i, k) + offset[static_cast<std::size_t>(i)];
      if (v < ax.front() || v > ax.back())
        throw CoverageError("path leaves the sheet window on axis " + std::to_string(i));
    }
  }
  return build_A(grid, path, m, t, offset);
}

double riemann_pairing(const NoiseSheet& sheet, const TabulatedFunction& a) {
  if (a.edges != sheet.grid().axes) throw std::invalid_argument("riemann_pairing: grids differ");
  const auto inc = sheet.increments();
  double s = 0.0;
  for (std::size_t c = 0; c < inc.size(); ++c) s += a.values[c] * inc[c];
  return s;
}

double sample_V_smoothed(const NoiseSheet& sheet, const LevyPath& path, const Mollifier& m,
                         double t, std::span<const double> x) {
  return riemann_pairing(sheet, anchored_A(sheet.grid(), path, m, t, x));
}

double conditional_variance_V(const LevyPath& path, const Mollifier& m, const Model& model) {
  if (!path.uniform() || path.n_steps() == 0)
    throw DegeneratePathError("conditional_variance_V needs a uniform grid");
  const int d = model.dim();
  if (path.dim() != d) throw std::invalid_argument("conditional_variance_V: dimension mismatch");
  const auto n = static_cast<long>(path.n_steps());
  const double t = path.horizon();
  const double h = t / static_cast<double>(n);
  const double alpha = model.alpha();
  const double a0 = model.time_exponent();
  const auto b = model.space_exponents();
  const double sb = model.space_scaling();
  const double del = m.delta;
  const double q = a0 + 2.0;
  const double sd = std::sqrt(2.0 * m.epsilon);
  std::vector<const AbsMomentTable*> tables;
  for (int i = 0; i < d; ++i) tables.push_back(&abs_moment_table(b[static_cast<std::size_t>(i)]));

  auto kernel = [&](double tau) {
    return std::pow(del, a0) * power_second_difference(tau / del, q) / ((a0 + 1.0) * (a0 + 2.0));
  };
  auto spatial = [&](const double* sep) {
    double v = 1.0;
    for (int i = 0; i < d; ++i) v *= (*tables[static_cast<std::size_t>(i)])(sep[i], sd);
    return v;
  };
  auto band = [&](long mm, std::vector<double>& breaks, std::vector<double>& singular) {
    const double centre = static_cast<double>(mm) * h;
    breaks = {centre};
    singular.clear();
    for (double p : {0.0, del, -del}) {
      if (centre - h < p && p < centre + h) {
        breaks.push_back(p);
        singular.push_back(p);
      }
    }
    if (mm == 0) {
      breaks.push_back(0.0);
      singular.push_back(0.0);
    }
  };

  // far-pair weights
  std::vector<double> far(static_cast<std::size_t>(n), 0.0);
  for (long mm = kNearLag + 1; mm < n; ++mm) {
    const double mu = static_cast<double>(mm) * h, centre = mu;
    std::vector<double> breaks, singular;
    band(mm, breaks, singular);
    auto f = [&](double tau) {
      const double tri = h - std::abs(tau - centre);
      if (tri <= 0.0) return 0.0;
      return tri * kernel(tau) * std::pow(std::abs(tau) / mu, sb);
    };
    far[static_cast<std::size_t>(mm)] = integrate_pieces(f, centre - h, centre + h, breaks, singular);
  }

  auto near = [&](long mm, const double* sigma) {
    const long am = std::abs(mm);
    const double mu = static_cast<double>(std::max(am, 1L)) * h;
    const double centre = static_cast<double>(am) * h;
    std::vector<double> breaks, singular;
    band(am, breaks, singular);
    std::vector<double> sep(static_cast<std::size_t>(d));
    auto f = [&](double tau) {
      const double tri = h - std::abs(tau - centre);
      if (tri <= 0.0) return 0.0;
      const double rho = std::pow(std::abs(tau) / mu, 1.0 / alpha);
      for (int i = 0; i < d; ++i) sep[static_cast<std::size_t>(i)] = sigma[i] * rho;
      return tri * kernel(tau) * spatial(sep.data());
    };
    return integrate_pieces(f, centre - h, centre + h, breaks, singular);
  };

  // With delta >= h the box phi_delta(t - s - .) is cut at 0 on a visible
  // band of cells; those pairs use the clipped kernel at cell midpoints.
  const bool clip = del >= h;
  auto clipped_cell = [&](long j) { return clip && static_cast<double>(j + 1) * h > t - del; };
  auto clipped_kernel = [&](double s, double r) {
    return power_pair_integral(std::max(0.0, t - s - del), t - s, std::max(0.0, t - r - del), t - r, a0) /
           (del * del);
  };

  std::vector<double> sep(static_cast<std::size_t>(d));
  double total = 0.0;
  for (long j = 0; j < n; ++j) {
    double row = 0.0;
    for (long k = 0; k < n; ++k) {
      const long mm = k - j;
      if (clipped_cell(j) || clipped_cell(k)) {
        for (int i = 0; i < d; ++i)
          sep[static_cast<std::size_t>(i)] =
              0.5 * (path.position(i, static_cast<std::size_t>(j)) + path.position(i, static_cast<std::size_t>(j + 1))) -
              0.5 * (path.position(i, static_cast<std::size_t>(k)) + path.position(i, static_cast<std::size_t>(k + 1)));
        row += h * h * clipped_kernel((static_cast<double>(j) + 0.5) * h, (static_cast<double>(k) + 0.5) * h) *
               spatial(sep.data());
        continue;
      }
      for (int i = 0; i < d; ++i) {
        const auto js = static_cast<std::size_t>(j), ks = static_cast<std::size_t>(k);
        sep[static_cast<std::size_t>(i)] =
            mm == 0 ? path.position(i, js + 1) - path.position(i, js)
                    : path.position(i, js) - path.position(i, ks);
      }
      if (std::abs(mm) <= kNearLag)
        row += near(mm, sep.data());
      else
        row += far[static_cast<std::size_t>(std::abs(mm))] * spatial(sep.data());
    }
    total += row;
  }
  return model.alpha_H() * total;
}

}  // namespace fracheat
