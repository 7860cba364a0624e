#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace heraldsim::modes {

/// Uniform time axis in nanoseconds: t_k = t0 + k * dt.
struct TimeGrid {
  double t0 = -200.0;
  double dt = 0.5;
  std::size_t n_samples = 801;

  /// Throws GridError unless dt > 0 and n_samples >= 16.
  void validate() const;
  double time(std::size_t k) const { return t0 + static_cast<double>(k) * dt; }
  double t_end() const { return time(n_samples - 1); }
  double span() const { return static_cast<double>(n_samples - 1) * dt; }
  /// Index of the sample at t = 0. Throws GridError when 0 is not a sample.
  std::size_t zero_index() const;
  /// True when the span is at least six times `timescale_ns`.
  bool covers(double timescale_ns) const { return span() >= 6.0 * timescale_ns; }

  bool operator==(const TimeGrid&) const = default;
};

/// t in [-200, 200] ns at 0.5 ns.
TimeGrid default_grid();

/// Complex temporal envelope sampled on a grid, in ns^-1/2.
struct ModeFunction {
  TimeGrid grid;
  Eigen::VectorXcd values;

  /// sum |f|^2 dt
  double norm_squared() const;
  /// Scales to unit norm; throws PreconditionError on an all-zero mode.
  ModeFunction& normalize();
  ModeFunction normalized() const;
  double peak_abs() const;
};

/// sum conj(a) b dt on a shared grid.
std::complex<double> overlap(const ModeFunction& a, const ModeFunction& b);

enum class JitterShape { kDelta, kRectangular, kTrapezoidal, kGaussian, kCustom };

std::string_view to_string(JitterShape shape);
JitterShape jitter_shape_from_string(std::string_view name);

/// Probability density of the herald timing offset, in ns^-1.
struct JitterDistribution {
  TimeGrid grid;
  Eigen::VectorXd density;
  JitterShape shape = JitterShape::kCustom;

  double total() const;  // sum j dt
  double mean() const;
  double variance() const;
};

/// Two-sided OPO correlation r(t) ~ exp(-gamma |t|), gamma = 2 pi HWHM.
ModeFunction opo_correlation(double hwhm_mhz, const TimeGrid& grid);

/// Time-reversed filter impulse response g(t) ~ exp(gamma_f t) for t <= 0, 0 after.
ModeFunction filter_response(double hwhm_mhz, const TimeGrid& grid);

/// Normalized discrete convolution (g * r)(t_k) = sum_j g(t_j) r(t_k - t_j) dt.
ModeFunction wavepacket(const ModeFunction& g, const ModeFunction& r);

JitterDistribution jitter_delta(const TimeGrid& grid, double center_ns = 0.0);

/// Uniform on [center - width/2, center + width/2]; edge bins carry their
/// fractional overlap so the discrete integral is exactly one.
JitterDistribution jitter_rectangular(double width_ns, const TimeGrid& grid, double center_ns = 0.0);

/// Bin-averaged trapezoid: full width at half plateau `width_ns`, linear edges
/// lasting `rise_ns`, and a floor 10^(-extinction_db/10) of the plateau over
/// a window of `floor_width_ns` (switch leakage, limited by the raw detector
/// jitter; +inf for the whole grid). extinction_db may be +inf.
JitterDistribution jitter_gate_profile(double width_ns, double rise_ns, double extinction_db,
                                       const TimeGrid& grid, double center_ns = 0.0, double floor_width_ns = 58.0);

JitterDistribution jitter_gaussian(double sigma_ns, const TimeGrid& grid, double center_ns = 0.0);

/// Arbitrary non-negative density, renormalized to unit integral.
JitterDistribution jitter_custom(Eigen::VectorXd density, const TimeGrid& grid);

/// Output sampling of a kernel: sample k of the output sits at fine index
/// offset + k * stride.
struct SampleLayout {
  std::size_t offset = 0;
  std::size_t stride = 1;
  std::size_t count = 0;

  static SampleLayout identity(const TimeGrid& grid) { return {0, 1, grid.n_samples}; }
  /// Samples from the first fine point >= t_start to the last <= t_end, every
  /// `step_ns` (an integer multiple of the fine dt).
  static SampleLayout window(const TimeGrid& fine, double t_start, double t_end, double step_ns);
  TimeGrid output_grid(const TimeGrid& fine) const;
  bool operator==(const SampleLayout&) const = default;
};

/// Copies of f shifted by every jitter offset with non-zero weight, sampled
/// on a layout and each renormalized there.
struct ShiftedModes {
  TimeGrid grid;                        // output grid
  std::vector<double> shift_ns;         // offset t' of each column
  std::vector<double> probability;      // j(t') dt, summing to 1
  Eigen::MatrixXcd modes;               // column c: unit-norm f(t - t'_c) on `grid`
  double coverage_loss = 0.0;           // worst fraction of a shifted mode outside the output window
};

/// Throws GridError when a shift loses more than `max_coverage_loss` of its weight.
ShiftedModes shifted_modes(const ModeFunction& f, const JitterDistribution& j, const SampleLayout& layout,
                           double max_coverage_loss);

/// Hermitian matrix on a TimeGrid; units ns^-1.
struct KernelMatrix {
  TimeGrid grid;
  Eigen::MatrixXcd values;
  /// Largest fraction of any shifted mode's weight that fell outside the grid.
  double coverage_loss = 0.0;
};

/// K(t1, t2) = sum_s j(t_s) dt f(t1 - t_s) conj(f(t2 - t_s)), with each
/// shifted mode renormalized on the output samples. Throws GridError when
/// some shift loses more than `max_coverage_loss` of its weight.
KernelMatrix jitter_kernel(const ModeFunction& f, const JitterDistribution& j, double max_coverage_loss = 1e-6);

KernelMatrix jitter_kernel(const ModeFunction& f, const JitterDistribution& j, const SampleLayout& layout,
                           double max_coverage_loss);

/// Leading mode of a mixture of temporal modes.
struct PrincipalModeResult {
  ModeFunction f1;
  double lambda1 = 0.0;
  Eigen::VectorXd spectrum;  // eigenvalues of K dt, descending
};

/// Eigen-decomposition of K dt. The returned f1 has unit norm and a real
/// positive value at its largest-magnitude sample. Throws PreconditionError
/// when K deviates from Hermitian by more than 1e-8 (relative to max |K|).
PrincipalModeResult principal_mode(const KernelMatrix& kernel);

/// Same decomposition for an arbitrary Hermitian operator on a grid (already
/// in units of K dt); used for data-driven PCA where the spectrum may carry
/// negative noise eigenvalues. lambda1 is the leading eigenvalue over the sum
/// of positive ones.
PrincipalModeResult principal_mode_of_operator(const Eigen::MatrixXcd& operator_dt, const TimeGrid& grid);

struct FwhmResult {
  double width_ns = 0.0;
  bool multi_peak = false;
};

/// Linear-interpolated full width at half max of |m(t)| around the highest peak.
FwhmResult fwhm(const ModeFunction& m);

/// Samples `f` at the positions of `layout` and renormalizes on the output grid.
ModeFunction resample(const ModeFunction& f, const SampleLayout& layout);

/// Modes to CSV: header "t_ns,<name>_re_per_sqrt_ns,<name>_im_per_sqrt_ns,..." (shared grid).
void write_modes_csv(std::ostream& out, const std::vector<std::string>& names,
                     const std::vector<const ModeFunction*>& modes);
void write_spectrum_csv(std::ostream& out, const Eigen::VectorXd& spectrum);
void write_kernel_csv(std::ostream& out, const KernelMatrix& kernel);

}  // namespace heraldsim::modes
