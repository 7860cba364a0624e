#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "heraldsim/errors.hpp"
#include "heraldsim/temporal_modes.hpp"

using namespace heraldsim;
using namespace heraldsim::modes;

namespace {

double gamma_per_ns(double hwhm_mhz) { return 2.0 * std::numbers::pi * hwhm_mhz * 1e-3; }

ModeFunction default_packet() {
  const auto grid = default_grid();
  return wavepacket(filter_response(8.0, grid), opo_correlation(58.4, grid));
}

// First time after the peak where |m| falls to `level` of the peak, linearly interpolated.
double crossing_after_peak(const ModeFunction& m, double level) {
  Eigen::Index peak = 0;
  m.values.cwiseAbs().maxCoeff(&peak);
  const double target = level * std::abs(m.values[peak]);
  for (Eigen::Index k = peak; k + 1 < m.values.size(); ++k) {
    const double a = std::abs(m.values[k]);
    const double b = std::abs(m.values[k + 1]);
    if (a >= target && b < target) {
      return m.grid.time(static_cast<std::size_t>(k)) + m.grid.dt * (a - target) / (a - b);
    }
  }
  return std::nan("");
}

}  // namespace

TEST(TimeGrid, DefaultAndValidation) {
  const auto g = default_grid();
  EXPECT_EQ(g.n_samples, 801u);
  EXPECT_DOUBLE_EQ(g.t0, -200.0);
  EXPECT_DOUBLE_EQ(g.t_end(), 200.0);
  EXPECT_EQ(g.zero_index(), 400u);
  EXPECT_THROW((TimeGrid{0.0, 0.0, 100}.validate()), GridError);
  EXPECT_THROW((TimeGrid{0.0, 1.0, 8}.validate()), GridError);
  EXPECT_THROW((TimeGrid{-10.25, 0.5, 100}.zero_index()), GridError);
  EXPECT_TRUE(g.covers(60.0));
  EXPECT_FALSE(g.covers(70.0));
}

TEST(OpoCorrelation, DecayConstantAndSymmetry) {
  const auto grid = default_grid();
  const auto r = opo_correlation(58.4, grid);
  EXPECT_NEAR(r.norm_squared(), 1.0, 1e-12);
  EXPECT_NEAR(crossing_after_peak(r, std::exp(-1.0)), 1.0 / gamma_per_ns(58.4), grid.dt);
  EXPECT_NEAR(1.0 / gamma_per_ns(58.4), 2.725, 0.01);
  for (std::size_t k = 0; k < grid.n_samples; ++k) {
    EXPECT_EQ(r.values[static_cast<Eigen::Index>(k)], r.values[static_cast<Eigen::Index>(grid.n_samples - 1 - k)]);
  }
}

TEST(OpoCorrelation, WidthScalesInverselyWithLinewidth) {
  const TimeGrid fine{-50.0, 0.01, 10001};
  const double w1 = fwhm(opo_correlation(58.4, fine)).width_ns;
  const double w2 = fwhm(opo_correlation(116.8, fine)).width_ns;
  EXPECT_NEAR(w2 / w1, 0.5, 0.005);
}

TEST(OpoCorrelation, RejectsNarrowGrid) {
  EXPECT_THROW(opo_correlation(1.0, default_grid()), GridError);
  EXPECT_THROW(filter_response(0.5, default_grid()), GridError);
  EXPECT_THROW(opo_correlation(-1.0, default_grid()), PreconditionError);
}

TEST(FilterResponse, CausalAndNormalized) {
  const auto grid = default_grid();
  const auto g = filter_response(8.0, grid);
  EXPECT_NEAR(g.norm_squared(), 1.0, 1e-12);
  for (std::size_t k = grid.zero_index() + 1; k < grid.n_samples; ++k) {
    EXPECT_EQ(g.values[static_cast<Eigen::Index>(k)], std::complex<double>(0.0));
  }
  // decay constant from two samples well inside the support
  const double ratio = std::abs(g.values[340]) / std::abs(g.values[300]);
  EXPECT_NEAR(20.0 / std::log(ratio), 1.0 / gamma_per_ns(8.0), 1e-9);
  EXPECT_NEAR(1.0 / gamma_per_ns(8.0), 19.9, 0.05);
}

TEST(Wavepacket, DefaultWidthAndConvolutionProperties) {
  const auto grid = default_grid();
  const auto g = filter_response(8.0, grid);
  const auto r = opo_correlation(58.4, grid);
  const auto f = wavepacket(g, r);
  EXPECT_NEAR(f.norm_squared(), 1.0, 1e-12);
  EXPECT_NEAR(fwhm(f).width_ns, 22.0, 2.0);
  const auto swapped = wavepacket(r, g);
  EXPECT_LT((f.values - swapped.values).cwiseAbs().maxCoeff(), 1e-10);
  // very broad OPO line: r acts as a delta
  const auto narrow = wavepacket(g, opo_correlation(10000.0, grid));
  EXPECT_GT(std::norm(overlap(narrow, g)), 0.999);
  EXPECT_THROW(wavepacket(g, opo_correlation(58.4, TimeGrid{-100.0, 0.5, 401})), GridError);
}

TEST(Jitter, RectangularDensityAndMoments) {
  const auto grid = default_grid();
  const auto j = jitter_rectangular(8.3, grid);
  EXPECT_NEAR(j.total(), 1.0, 1e-14);
  EXPECT_NEAR(j.density[grid.zero_index()], 1.0 / 8.3, 1e-14);
  EXPECT_EQ(j.shape, JitterShape::kRectangular);
  EXPECT_EQ(j.density[grid.zero_index() + 10], 0.0);

  const TimeGrid fine{-10.0, 0.001, 20001};
  const auto u = jitter_rectangular(2.0, fine);
  EXPECT_NEAR(u.mean(), 0.0, 1e-12);
  EXPECT_NEAR(u.variance() / (4.0 / 12.0), 1.0, 1e-6);

  EXPECT_THROW(jitter_rectangular(500.0, grid), GridError);
  EXPECT_THROW(jitter_rectangular(0.0, grid), PreconditionError);
}

TEST(Jitter, GateProfileLimitsAndFloor) {
  const auto grid = default_grid();
  const auto rect = jitter_rectangular(29.7, grid);
  const auto sharp = jitter_gate_profile(29.7, 0.0, std::numeric_limits<double>::infinity(), grid);
  EXPECT_LT((rect.density - sharp.density).cwiseAbs().maxCoeff(), 1e-9);

  const auto gate = jitter_gate_profile(10.0, 3.5, 30.0, grid);
  EXPECT_NEAR(gate.total(), 1.0, 1e-14);
  const double plateau = gate.density[grid.zero_index()];
  const double floor = gate.density[grid.zero_index() + 40];  // t = 20 ns, inside the floor window
  EXPECT_NEAR(floor / plateau, 1e-3, 1e-15);
  EXPECT_EQ(gate.density[grid.zero_index() + 80], 0.0);  // t = 40 ns, outside
  EXPECT_THROW(jitter_gate_profile(10.0, 12.0, 30.0, grid), PreconditionError);
  EXPECT_THROW(jitter_gate_profile(10.0, 3.5, -3.0, grid), PreconditionError);
}

TEST(Jitter, GaussianAndCustomNormalize) {
  const auto grid = default_grid();
  const auto gj = jitter_gaussian(10.0, grid);
  EXPECT_NEAR(gj.total(), 1.0, 1e-14);
  EXPECT_NEAR(gj.variance(), 100.0, 1e-6);
  Eigen::VectorXd d = Eigen::VectorXd::Zero(801);
  d[400] = 3.0;
  d[410] = 1.0;
  const auto cj = jitter_custom(d, grid);
  EXPECT_NEAR(cj.total(), 1.0, 1e-14);
  EXPECT_NEAR(cj.mean(), 1.25, 1e-12);
  d[3] = -1.0;
  EXPECT_THROW(jitter_custom(d, grid), PreconditionError);
}

TEST(Kernel, DeltaJitterIsRankOne) {
  const auto f = default_packet();
  const auto k = jitter_kernel(f, jitter_delta(f.grid));
  const auto pm = principal_mode(k);
  EXPECT_NEAR(pm.lambda1, 1.0, 1e-9);
  EXPECT_GT(std::norm(overlap(pm.f1, f)), 1.0 - 1e-9);
  EXPECT_NEAR(pm.spectrum.sum(), 1.0, 1e-9);
}

TEST(Kernel, TraceAndSpectrumOfWideGate) {
  const auto f = default_packet();
  const auto k = jitter_kernel(f, jitter_rectangular(70.4, f.grid));
  EXPECT_NEAR(k.values.trace().real() * f.grid.dt, 1.0, 1e-8);
  const auto pm = principal_mode(k);
  const double participation = 1.0 / pm.spectrum.squaredNorm();
  EXPECT_GT(participation, 2.0);
  for (Eigen::Index i = 1; i < pm.spectrum.size(); ++i) EXPECT_LE(pm.spectrum[i], pm.spectrum[i - 1]);
}

TEST(Kernel, HermitianPsdForRandomInputs) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const TimeGrid grid{-40.0, 0.5, 161};
  for (int trial = 0; trial < 20; ++trial) {
    ModeFunction f{grid, Eigen::VectorXcd::Zero(161)};
    for (Eigen::Index k = 60; k < 100; ++k) f.values[k] = {g(rng), g(rng)};
    f.normalize();
    Eigen::VectorXd d = Eigen::VectorXd::Zero(161);
    for (Eigen::Index k = 70; k < 90; ++k) d[k] = u(rng);
    const auto kernel = jitter_kernel(f, jitter_custom(d, grid));
    const double scale = kernel.values.cwiseAbs().maxCoeff();
    EXPECT_LT((kernel.values - kernel.values.adjoint()).cwiseAbs().maxCoeff(), 1e-14 * scale);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(kernel.values);
    EXPECT_GT(es.eigenvalues().minCoeff(), -1e-12 * scale) << trial;
    EXPECT_NEAR(kernel.values.trace().real() * grid.dt, 1.0, 1e-8);
  }
}

TEST(Kernel, CoverageLossIsAnError) {
  // a 150 ns gate pushes early shifts of the packet's slow tail off the grid
  const TimeGrid grid{-190.0, 0.5, 761};
  const auto f = wavepacket(filter_response(8.0, grid), opo_correlation(58.4, grid));
  EXPECT_NO_THROW(jitter_kernel(f, jitter_rectangular(70.4, grid)));
  EXPECT_THROW(jitter_kernel(f, jitter_rectangular(150.0, grid)), GridError);
}

TEST(PrincipalMode, RankOneOperator) {
  const auto f = default_packet();
  Eigen::MatrixXcd op = f.values * f.values.adjoint() * f.grid.dt;
  const auto pm = principal_mode_of_operator(op, f.grid);
  EXPECT_NEAR(pm.lambda1, 1.0, 1e-12);
  EXPECT_GT(std::norm(overlap(pm.f1, f)), 1.0 - 1e-12);
  Eigen::Index peak = 0;
  pm.f1.values.cwiseAbs().maxCoeff(&peak);
  EXPECT_GT(pm.f1.values[peak].real(), 0.0);
  EXPECT_EQ(pm.f1.values[peak].imag(), 0.0);
}

TEST(PrincipalMode, RejectsNonHermitian) {
  const auto grid = TimeGrid{-10.0, 1.0, 21};
  Eigen::MatrixXcd op = Eigen::MatrixXcd::Identity(21, 21);
  op(0, 3) = 0.5;
  EXPECT_THROW(principal_mode_of_operator(op, grid), PreconditionError);
}

TEST(PrincipalMode, MonotoneInGateWidth) {
  const auto f = default_packet();
  double last_lambda = 1.0 + 1e-12;
  double last_width = 0.0;
  double last_peak = 1e300;
  for (double w : {8.3, 29.7, 49.5, 70.4}) {
    const auto pm = principal_mode(jitter_kernel(f, jitter_rectangular(w, f.grid)));
    const double width = fwhm(pm.f1).width_ns;
    EXPECT_LT(pm.lambda1, last_lambda) << w;
    EXPECT_GT(width, last_width) << w;
    EXPECT_LT(pm.f1.peak_abs(), last_peak) << w;
    EXPECT_GT(pm.lambda1, 0.0);
    EXPECT_NEAR(pm.spectrum.sum(), 1.0, 1e-9);
    last_lambda = pm.lambda1;
    last_width = width;
    last_peak = pm.f1.peak_abs();
  }
}

TEST(PrincipalMode, ShiftCovariance) {
  const auto f = default_packet();
  const auto a = principal_mode(jitter_kernel(f, jitter_rectangular(29.7, f.grid, 0.0)));
  const auto b = principal_mode(jitter_kernel(f, jitter_rectangular(29.7, f.grid, 10.0)));
  EXPECT_NEAR(a.lambda1, b.lambda1, 1e-9);
  // f1 of the shifted gate is f1 moved by 10 ns = 20 samples
  std::complex<double> ov = 0.0;
  for (Eigen::Index k = 0; k + 20 < a.f1.values.size(); ++k) {
    ov += std::conj(a.f1.values[k]) * b.f1.values[k + 20] * f.grid.dt;
  }
  EXPECT_GT(std::norm(ov), 1.0 - 1e-9);
}

TEST(PrincipalMode, GridRefinementIsStable) {
  const TimeGrid coarse = default_grid();
  const TimeGrid fine{-200.0, 0.25, 1601};
  auto lambda = [](const TimeGrid& g) {
    const auto f = wavepacket(filter_response(8.0, g), opo_correlation(58.4, g));
    return principal_mode(jitter_kernel(f, jitter_rectangular(29.7, g))).lambda1;
  };
  EXPECT_LT(std::abs(lambda(coarse) - lambda(fine)), 1e-3);
}

TEST(Fwhm, GaussianOracleScalingAndFlags) {
  const TimeGrid grid{-100.0, 0.1, 2001};
  ModeFunction m{grid, Eigen::VectorXcd(2001)};
  for (std::size_t k = 0; k < grid.n_samples; ++k) {
    const double t = grid.time(k);
    m.values[static_cast<Eigen::Index>(k)] = std::exp(-t * t / 200.0);
  }
  const auto r = fwhm(m);
  EXPECT_NEAR(r.width_ns, 20.0 * std::sqrt(2.0 * std::log(2.0)), grid.dt);
  EXPECT_FALSE(r.multi_peak);

  ModeFunction stretched{TimeGrid{-200.0, 0.2, 2001}, m.values};
  EXPECT_NEAR(fwhm(stretched).width_ns, 2.0 * r.width_ns, 1e-9);

  ModeFunction two = m;
  for (std::size_t k = 0; k < grid.n_samples; ++k) {
    const double t = grid.time(k) - 60.0;
    two.values[static_cast<Eigen::Index>(k)] += 0.8 * std::exp(-t * t / 50.0);
  }
  EXPECT_TRUE(fwhm(two).multi_peak);
  EXPECT_THROW(fwhm(ModeFunction{grid, Eigen::VectorXcd::Zero(2001)}), PreconditionError);
}

TEST(Layout, WindowAndResample) {
  const auto grid = default_grid();
  const auto layout = SampleLayout::window(grid, -140.0, 60.0, 4.0);
  EXPECT_EQ(layout.count, 51u);
  EXPECT_EQ(layout.stride, 8u);
  const auto out = layout.output_grid(grid);
  EXPECT_DOUBLE_EQ(out.t0, -140.0);
  EXPECT_DOUBLE_EQ(out.dt, 4.0);
  EXPECT_THROW(SampleLayout::window(grid, -140.0, 60.0, 0.3), GridError);
  const auto f = default_packet();
  const auto coarse = resample(f, layout);
  EXPECT_NEAR(coarse.norm_squared(), 1.0, 1e-12);
}

TEST(Csv, HeadersNameUnits) {
  const auto f = default_packet();
  std::ostringstream modes_csv;
  write_modes_csv(modes_csv, {"f"}, {&f});
  EXPECT_EQ(modes_csv.str().substr(0, modes_csv.str().find('\n')), "t_ns,f_re_per_sqrt_ns,f_im_per_sqrt_ns");
  std::ostringstream spec;
  write_spectrum_csv(spec, Eigen::VectorXd::Ones(3));
  EXPECT_EQ(spec.str().substr(0, spec.str().find('\n')), "index,eigenvalue_dimensionless");
}
