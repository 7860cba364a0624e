#include "heraldsim/temporal_modes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "heraldsim/errors.hpp"
#include "heraldsim/util.hpp"

namespace heraldsim::modes {

namespace {

// MHz -> rad/ns
double angular_rate(double hwhm_mhz) { return 2.0 * std::numbers::pi * hwhm_mhz * 1e-3; }

void require_positive_hwhm(double hwhm_mhz) {
  if (!std::isfinite(hwhm_mhz) || hwhm_mhz <= 0.0) {
    throw PreconditionError("HWHM must be positive and finite");
  }
}

void check_boundary_decay(const ModeFunction& m, const char* what) {
  const double peak = m.peak_abs();
  const double edge = std::max(std::abs(m.values[0]), std::abs(m.values[m.values.size() - 1]));
  if (edge > 1e-4 * peak) {
    throw GridError(std::string(what) + ": grid too narrow, boundary value is " +
                    format_double(edge / peak) + " of peak");
  }
}

void require_same_grid(const TimeGrid& a, const TimeGrid& b) {
  if (!(a == b)) {
    throw GridError("mode functions live on different grids");
  }
}

// Fractional overlap of bin k with [lo, hi].
double bin_overlap(const TimeGrid& grid, std::size_t k, double lo, double hi) {
  const double a = grid.time(k) - 0.5 * grid.dt;
  const double b = grid.time(k) + 0.5 * grid.dt;
  return std::max(0.0, std::min(b, hi) - std::max(a, lo));
}

void require_support_inside(const TimeGrid& grid, double lo, double hi) {
  const double grid_lo = grid.t0 - 0.5 * grid.dt;
  const double grid_hi = grid.t_end() + 0.5 * grid.dt;
  if (lo < grid_lo - 1e-12 || hi > grid_hi + 1e-12) {
    throw GridError("jitter support [" + format_double(lo) + ", " + format_double(hi) +
                    "] ns exceeds the grid");
  }
}

JitterDistribution finish_jitter(const TimeGrid& grid, Eigen::VectorXd density, JitterShape shape) {
  const double total = density.sum() * grid.dt;
  if (!(total > 0.0)) {
    throw PreconditionError("jitter distribution has no weight on the grid");
  }
  density /= total;
  return JitterDistribution{grid, std::move(density), shape};
}

// Integral of the unit-height trapezoid from -inf to u, centred at zero.
double trapezoid_cdf(double u, double plateau_half, double rise) {
  const double outer = plateau_half + rise;
  if (u <= -outer) return 0.0;
  if (rise > 0.0 && u <= -plateau_half) return (u + outer) * (u + outer) / (2.0 * rise);
  if (u <= plateau_half) return 0.5 * rise + (u + plateau_half);
  if (rise > 0.0 && u <= outer) {
    return 0.5 * rise + 2.0 * plateau_half + 0.5 * rise - (outer - u) * (outer - u) / (2.0 * rise);
  }
  return 2.0 * plateau_half + rise;
}

}  // namespace

// ---------------------------------------------------------------------------
// TimeGrid / ModeFunction

void TimeGrid::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt) || !std::isfinite(t0)) {
    throw GridError("time grid needs finite t0 and dt > 0");
  }
  if (n_samples < 16) {
    throw GridError("time grid needs at least 16 samples");
  }
}

std::size_t TimeGrid::zero_index() const {
  const double pos = -t0 / dt;
  const double rounded = std::round(pos);
  if (std::abs(pos - rounded) > 1e-9 || rounded < 0.0 || rounded >= static_cast<double>(n_samples)) {
    throw GridError("time grid must contain t = 0 as a sample");
  }
  return static_cast<std::size_t>(rounded);
}

TimeGrid default_grid() { return TimeGrid{-200.0, 0.5, 801}; }

double ModeFunction::norm_squared() const { return values.squaredNorm() * grid.dt; }

ModeFunction& ModeFunction::normalize() {
  const double n2 = norm_squared();
  if (!(n2 > 0.0) || !std::isfinite(n2)) {
    throw PreconditionError("cannot normalize a zero mode function");
  }
  values /= std::sqrt(n2);
  return *this;
}

ModeFunction ModeFunction::normalized() const {
  ModeFunction copy = *this;
  copy.normalize();
  return copy;
}

double ModeFunction::peak_abs() const { return values.cwiseAbs().maxCoeff(); }

std::complex<double> overlap(const ModeFunction& a, const ModeFunction& b) {
  require_same_grid(a.grid, b.grid);
  return a.values.dot(b.values) * a.grid.dt;
}

std::string_view to_string(JitterShape shape) {
  switch (shape) {
    case JitterShape::kDelta: return "delta";
    case JitterShape::kRectangular: return "rectangular";
    case JitterShape::kTrapezoidal: return "trapezoidal";
    case JitterShape::kGaussian: return "gaussian";
    case JitterShape::kCustom: return "custom";
  }
  return "custom";
}

JitterShape jitter_shape_from_string(std::string_view name) {
  for (auto shape : {JitterShape::kDelta, JitterShape::kRectangular, JitterShape::kTrapezoidal,
                     JitterShape::kGaussian, JitterShape::kCustom}) {
    if (name == to_string(shape)) return shape;
  }
  throw PreconditionError("unknown jitter shape '" + std::string(name) + "'");
}

double JitterDistribution::total() const { return density.sum() * grid.dt; }

double JitterDistribution::mean() const {
  double m = 0.0;
  for (std::size_t k = 0; k < grid.n_samples; ++k) m += grid.time(k) * density[static_cast<Eigen::Index>(k)];
  return m * grid.dt;
}

double JitterDistribution::variance() const {
  const double mu = mean();
  double v = 0.0;
  for (std::size_t k = 0; k < grid.n_samples; ++k) {
    const double d = grid.time(k) - mu;
    v += d * d * density[static_cast<Eigen::Index>(k)];
  }
  return v * grid.dt;
}

// ---------------------------------------------------------------------------
// Mode construction

ModeFunction opo_correlation(double hwhm_mhz, const TimeGrid& grid) {
  grid.validate();
  require_positive_hwhm(hwhm_mhz);
  const double gamma = angular_rate(hwhm_mhz);
  ModeFunction r{grid, Eigen::VectorXcd(static_cast<Eigen::Index>(grid.n_samples))};
  for (std::size_t k = 0; k < grid.n_samples; ++k) {
    r.values[static_cast<Eigen::Index>(k)] = std::exp(-gamma * std::abs(grid.time(k)));
  }
  check_boundary_decay(r, "OPO correlation");
  return r.normalize();
}

ModeFunction filter_response(double hwhm_mhz, const TimeGrid& grid) {
  grid.validate();
  require_positive_hwhm(hwhm_mhz);
  const double gamma = angular_rate(hwhm_mhz);
  ModeFunction g{grid, Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(grid.n_samples))};
  for (std::size_t k = 0; k < grid.n_samples; ++k) {
    const double t = grid.time(k);
    if (t <= 1e-12 * grid.dt) {
      g.values[static_cast<Eigen::Index>(k)] = std::exp(gamma * std::min(t, 0.0));
    }
  }
  check_boundary_decay(g, "filter response");
  return g.normalize();
}

ModeFunction wavepacket(const ModeFunction& g, const ModeFunction& r) {
  require_same_grid(g.grid, r.grid);
  const TimeGrid& grid = g.grid;
  const auto n = static_cast<std::ptrdiff_t>(grid.n_samples);
  const auto z = static_cast<std::ptrdiff_t>(grid.zero_index());
  ModeFunction f{grid, Eigen::VectorXcd::Zero(n)};
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    std::complex<double> acc = 0.0;
    // index of r at t_k - t_j is k - j + z
    const std::ptrdiff_t j_lo = std::max<std::ptrdiff_t>(0, k + z - n + 1);
    const std::ptrdiff_t j_hi = std::min<std::ptrdiff_t>(n - 1, k + z);
    for (std::ptrdiff_t j = j_lo; j <= j_hi; ++j) {
      acc += g.values[j] * r.values[k - j + z];
    }
    f.values[k] = acc * grid.dt;
  }
  return f.normalize();
}

// ---------------------------------------------------------------------------
// Jitter distributions

JitterDistribution jitter_delta(const TimeGrid& grid, double center_ns) {
  grid.validate();
  const double pos = (center_ns - grid.t0) / grid.dt;
  const double idx = std::round(pos);
  if (idx < 0.0 || idx >= static_cast<double>(grid.n_samples)) {
    throw GridError("delta jitter centre outside the grid");
  }
  Eigen::VectorXd d = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.n_samples));
  d[static_cast<Eigen::Index>(idx)] = 1.0 / grid.dt;
  return JitterDistribution{grid, std::move(d), JitterShape::kDelta};
}

JitterDistribution jitter_rectangular(double width_ns, const TimeGrid& grid, double center_ns) {
  grid.validate();
  if (!std::isfinite(width_ns) || width_ns <= 0.0) {
    throw PreconditionError("rectangular jitter width must be positive");
  }
  if (width_ns >= grid.span()) {
    throw GridError("rectangular jitter width " + format_double(width_ns) + " ns exceeds the grid span");
  }
  const double lo = center_ns - 0.5 * width_ns;
  const double hi = center_ns + 0.5 * width_ns;
  require_support_inside(grid, lo, hi);
  Eigen::VectorXd d(static_cast<Eigen::Index>(grid.n_samples));
  for (std::size_t k = 0; k < grid.n_samples; ++k) {
    d[static_cast<Eigen::Index>(k)] = bin_overlap(grid, k, lo, hi) / (width_ns * grid.dt);
  }
  return finish_jitter(grid, std::move(d), JitterShape::kRectangular);
}

JitterDistribution jitter_gate_profile(double width_ns, double rise_ns, double extinction_db,
                                       const TimeGrid& grid, double center_ns, double floor_width_ns) {
  grid.validate();
  if (!std::isfinite(width_ns) || width_ns <= 0.0) {
    throw PreconditionError("gate width must be positive");
  }
  if (std::isnan(floor_width_ns) || floor_width_ns < 0.0) {
    throw PreconditionError("gate floor width must be non-negative");
  }
  if (!std::isfinite(rise_ns) || rise_ns < 0.0 || rise_ns >= width_ns) {
    throw PreconditionError("gate rise time must lie in [0, width)");
  }
  if (std::isnan(extinction_db) || extinction_db <= 0.0) {
    throw PreconditionError("gate extinction ratio must be positive (dB)");
  }
  if (width_ns + rise_ns >= grid.span()) {
    throw GridError("gate width " + format_double(width_ns) + " ns exceeds the grid span");
  }
  const double plateau_half = 0.5 * (width_ns - rise_ns);
  require_support_inside(grid, center_ns - plateau_half - rise_ns, center_ns + plateau_half + rise_ns);
  const double floor = std::isinf(extinction_db) ? 0.0 : std::pow(10.0, -extinction_db / 10.0);
  Eigen::VectorXd d(static_cast<Eigen::Index>(grid.n_samples));
  for (std::size_t k = 0; k < grid.n_samples; ++k) {
    const double a = grid.time(k) - 0.5 * grid.dt - center_ns;
    const double b = grid.time(k) + 0.5 * grid.dt - center_ns;
    const double trap = (trapezoid_cdf(b, plateau_half, rise_ns) - trapezoid_cdf(a, plateau_half, rise_ns)) / grid.dt;
    const double half = 0.5 * floor_width_ns;
    const double covered = std::isinf(half) ? 1.0 : std::max(0.0, std::min(b, half) - std::max(a, -half)) / grid.dt;
    d[static_cast<Eigen::Index>(k)] = floor * covered + (1.0 - floor * covered) * trap;
  }
  return finish_jitter(grid, std::move(d), JitterShape::kTrapezoidal);
}

JitterDistribution jitter_gaussian(double sigma_ns, const TimeGrid& grid, double center_ns) {
  grid.validate();
  if (!std::isfinite(sigma_ns) || sigma_ns <= 0.0) {
    throw PreconditionError("gaussian jitter sigma must be positive");
  }
  require_support_inside(grid, center_ns - 5.0 * sigma_ns, center_ns + 5.0 * sigma_ns);
  Eigen::VectorXd d(static_cast<Eigen::Index>(grid.n_samples));
  for (std::size_t k = 0; k < grid.n_samples; ++k) {
    const double u = (grid.time(k) - center_ns) / sigma_ns;
    d[static_cast<Eigen::Index>(k)] = std::exp(-0.5 * u * u);
  }
  return finish_jitter(grid, std::move(d), JitterShape::kGaussian);
}

JitterDistribution jitter_custom(Eigen::VectorXd density, const TimeGrid& grid) {
  grid.validate();
  if (density.size() != static_cast<Eigen::Index>(grid.n_samples)) {
    throw GridError("custom jitter density does not match the grid");
  }
  if (!density.allFinite() || density.minCoeff() < 0.0) {
    throw PreconditionError("jitter density must be finite and non-negative");
  }
  return finish_jitter(grid, std::move(density), JitterShape::kCustom);
}

// ---------------------------------------------------------------------------
// Sample layouts and kernels

SampleLayout SampleLayout::window(const TimeGrid& fine, double t_start, double t_end, double step_ns) {
  fine.validate();
  const double ratio = step_ns / fine.dt;
  const double stride = std::round(ratio);
  if (stride < 1.0 || std::abs(ratio - stride) > 1e-9) {
    throw GridError("record step must be a positive integer multiple of the grid step");
  }
  const double first = std::ceil((t_start - fine.t0) / fine.dt - 1e-9);
  const double last = std::floor((t_end - fine.t0) / fine.dt + 1e-9);
  if (first < 0.0 || last >= static_cast<double>(fine.n_samples) || last <= first) {
    throw GridError("record window [" + format_double(t_start) + ", " + format_double(t_end) +
                    "] ns is not inside the simulation grid");
  }
  SampleLayout layout;
  layout.offset = static_cast<std::size_t>(first);
  layout.stride = static_cast<std::size_t>(stride);
  layout.count = static_cast<std::size_t>((last - first) / stride) + 1;
  return layout;
}

TimeGrid SampleLayout::output_grid(const TimeGrid& fine) const {
  return TimeGrid{fine.time(offset), fine.dt * static_cast<double>(stride), count};
}

KernelMatrix jitter_kernel(const ModeFunction& f, const JitterDistribution& j, double max_coverage_loss) {
  return jitter_kernel(f, j, SampleLayout::identity(f.grid), max_coverage_loss);
}

ShiftedModes shifted_modes(const ModeFunction& f, const JitterDistribution& j, const SampleLayout& layout,
                           double max_coverage_loss) {
  require_same_grid(f.grid, j.grid);
  const TimeGrid& fine = f.grid;
  if (layout.count == 0 || layout.stride == 0 ||
      layout.offset + (layout.count - 1) * layout.stride >= fine.n_samples) {
    throw GridError("sample layout does not fit the grid");
  }
  const auto n = static_cast<std::ptrdiff_t>(fine.n_samples);
  const auto z = static_cast<std::ptrdiff_t>(fine.zero_index());
  const double total_mass = f.norm_squared();
  const auto window_lo = static_cast<std::ptrdiff_t>(layout.offset);
  const auto window_hi = static_cast<std::ptrdiff_t>(layout.offset + (layout.count - 1) * layout.stride);

  std::vector<std::ptrdiff_t> shifts;
  ShiftedModes out;
  out.grid = layout.output_grid(fine);
  double weight_sum = 0.0;
  for (std::ptrdiff_t s = 0; s < n; ++s) {
    const double w = j.density[s] * fine.dt;
    if (w > 0.0) {
      shifts.push_back(s);
      out.shift_ns.push_back(fine.time(static_cast<std::size_t>(s)));
      out.probability.push_back(w);
      weight_sum += w;
    }
  }
  for (double& p : out.probability) p /= weight_sum;

  const auto m = static_cast<Eigen::Index>(layout.count);
  out.modes.resize(m, static_cast<Eigen::Index>(shifts.size()));
  for (std::size_t c = 0; c < shifts.size(); ++c) {
    const std::ptrdiff_t s = shifts[c];
    // fine mass of f(t - t_s) inside the output window; index of f at t_a - t_s is a - s + z
    double inside = 0.0;
    for (std::ptrdiff_t a = std::max(window_lo, s - z); a <= std::min(window_hi, n - 1 + s - z); ++a) {
      inside += std::norm(f.values[a - s + z]);
    }
    out.coverage_loss = std::max(out.coverage_loss, 1.0 - inside * fine.dt / total_mass);
    Eigen::VectorXcd u(m);
    for (Eigen::Index k = 0; k < m; ++k) {
      const std::ptrdiff_t src = window_lo + k * static_cast<std::ptrdiff_t>(layout.stride) - s + z;
      u[k] = (src >= 0 && src < n) ? f.values[src] : std::complex<double>(0.0);
    }
    const double un = u.squaredNorm() * out.grid.dt;
    if (!(un > 0.0)) {
      throw GridError("a shifted mode has no support on the output samples");
    }
    out.modes.col(static_cast<Eigen::Index>(c)) = u / std::sqrt(un);
  }
  out.coverage_loss = std::max(0.0, out.coverage_loss);
  if (out.coverage_loss > max_coverage_loss) {
    throw GridError("insufficient grid coverage: a shifted mode loses " + format_double(out.coverage_loss) +
                    " of its weight (limit " + format_double(max_coverage_loss) + ")");
  }
  return out;
}

KernelMatrix jitter_kernel(const ModeFunction& f, const JitterDistribution& j, const SampleLayout& layout,
                           double max_coverage_loss) {
  const ShiftedModes shifted = shifted_modes(f, j, layout, max_coverage_loss);
  Eigen::MatrixXcd columns = shifted.modes;
  for (Eigen::Index c = 0; c < columns.cols(); ++c) {
    columns.col(c) *= std::sqrt(shifted.probability[static_cast<std::size_t>(c)]);
  }
  const auto m = columns.rows();
  KernelMatrix kernel{shifted.grid, Eigen::MatrixXcd(m, m), shifted.coverage_loss};
  kernel.values.noalias() = columns * columns.adjoint();
  return kernel;
}

PrincipalModeResult principal_mode_of_operator(const Eigen::MatrixXcd& op, const TimeGrid& grid) {
  if (op.rows() != op.cols() || op.rows() != static_cast<Eigen::Index>(grid.n_samples)) {
    throw GridError("operator does not match its grid");
  }
  const double scale = std::max(op.cwiseAbs().maxCoeff(), 1e-300);
  if ((op - op.adjoint()).cwiseAbs().maxCoeff() > 1e-8 * scale) {
    throw PreconditionError("kernel is not Hermitian");
  }
  const Eigen::Index n = op.rows();
  Eigen::VectorXd evals(n);
  Eigen::VectorXcd lead(n);
  if (op.imag().cwiseAbs().maxCoeff() == 0.0) {
    Eigen::MatrixXd real = op.real();
    real = 0.5 * (real + real.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(real);
    evals = solver.eigenvalues().reverse();
    lead = solver.eigenvectors().col(n - 1).cast<std::complex<double>>();
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(op);
    evals = solver.eigenvalues().reverse();
    lead = solver.eigenvectors().col(n - 1);
  }
  Eigen::Index peak = 0;
  lead.cwiseAbs().maxCoeff(&peak);
  lead *= std::conj(lead[peak]) / std::abs(lead[peak]);
  lead[peak] = std::abs(lead[peak]);

  double positive = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) positive += std::max(0.0, evals[k]);

  PrincipalModeResult result;
  result.f1 = ModeFunction{grid, lead / std::sqrt(grid.dt)};
  result.f1.normalize();
  result.spectrum = std::move(evals);
  result.lambda1 = positive > 0.0 ? result.spectrum[0] / positive : 0.0;
  return result;
}

PrincipalModeResult principal_mode(const KernelMatrix& kernel) {
  PrincipalModeResult result = principal_mode_of_operator(kernel.values * kernel.grid.dt, kernel.grid);
  const double total = result.spectrum.sum();
  result.lambda1 = std::clamp(result.spectrum[0] / total, 0.0, 1.0);
  return result;
}

FwhmResult fwhm(const ModeFunction& m) {
  const Eigen::VectorXd a = m.values.cwiseAbs();
  Eigen::Index peak = 0;
  const double max = a.maxCoeff(&peak);
  if (!(max > 0.0)) {
    throw PreconditionError("FWHM of an all-zero mode");
  }
  const double half = 0.5 * max;
  const Eigen::Index n = a.size();
  const double dt = m.grid.dt;

  Eigen::Index left = peak;
  while (left > 0 && a[left - 1] >= half) --left;
  double t_left = m.grid.time(static_cast<std::size_t>(left));
  if (left > 0) {
    t_left -= dt * (a[left] - half) / (a[left] - a[left - 1]);
  }
  Eigen::Index right = peak;
  while (right + 1 < n && a[right + 1] >= half) ++right;
  double t_right = m.grid.time(static_cast<std::size_t>(right));
  if (right + 1 < n) {
    t_right += dt * (a[right] - half) / (a[right] - a[right + 1]);
  }

  FwhmResult result{t_right - t_left, false};
  for (Eigen::Index k = 0; k < n; ++k) {
    if ((k < left - 1 || k > right + 1) && a[k] >= half) {
      result.multi_peak = true;
      break;
    }
  }
  return result;
}

ModeFunction resample(const ModeFunction& f, const SampleLayout& layout) {
  if (layout.count == 0 || layout.offset + (layout.count - 1) * layout.stride >= f.grid.n_samples) {
    throw GridError("sample layout does not fit the grid");
  }
  ModeFunction out{layout.output_grid(f.grid), Eigen::VectorXcd(static_cast<Eigen::Index>(layout.count))};
  for (std::size_t k = 0; k < layout.count; ++k) {
    out.values[static_cast<Eigen::Index>(k)] = f.values[static_cast<Eigen::Index>(layout.offset + k * layout.stride)];
  }
  return out.normalize();
}

void write_modes_csv(std::ostream& out, const std::vector<std::string>& names,
                     const std::vector<const ModeFunction*>& modes) {
  if (names.size() != modes.size() || modes.empty()) {
    throw PreconditionError("write_modes_csv needs one name per mode");
  }
  for (const auto* mode : modes) require_same_grid(mode->grid, modes.front()->grid);
  out << "t_ns";
  for (const auto& name : names) out << ',' << name << "_re_per_sqrt_ns," << name << "_im_per_sqrt_ns";
  out << '\n';
  const TimeGrid& grid = modes.front()->grid;
  for (std::size_t k = 0; k < grid.n_samples; ++k) {
    out << format_double(grid.time(k));
    for (const auto* mode : modes) {
      const auto v = mode->values[static_cast<Eigen::Index>(k)];
      out << ',' << format_double(v.real()) << ',' << format_double(v.imag());
    }
    out << '\n';
  }
}

void write_spectrum_csv(std::ostream& out, const Eigen::VectorXd& spectrum) {
  out << "index,eigenvalue_dimensionless\n";
  for (Eigen::Index k = 0; k < spectrum.size(); ++k) {
    out << k << ',' << format_double(spectrum[k]) << '\n';
  }
}

void write_kernel_csv(std::ostream& out, const KernelMatrix& kernel) {
  out << "t1_ns,t2_ns,re_per_ns,im_per_ns\n";
  for (std::size_t a = 0; a < kernel.grid.n_samples; ++a) {
    for (std::size_t b = 0; b < kernel.grid.n_samples; ++b) {
      const auto v = kernel.values(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
      out << format_double(kernel.grid.time(a)) << ',' << format_double(kernel.grid.time(b)) << ','
          << format_double(v.real()) << ',' << format_double(v.imag()) << '\n';
    }
  }
}

}  // namespace heraldsim::modes
