#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "heraldsim/errors.hpp"
#include "heraldsim/fock.hpp"
#include "heraldsim/wigner.hpp"

using namespace heraldsim;
using namespace heraldsim::fock;

namespace {

constexpr double kInvPi = 1.0 / std::numbers::pi;

FockDensity random_density(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> g;
  Eigen::MatrixXcd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < n; ++k) a(i, k) = {g(rng), g(rng)};
  return FockDensity(a * a.adjoint());
}

}  // namespace

TEST(Wigner, ParityAnchors) {
  const auto vac = FockDensity::pure(FockState::basis(0, 10));
  const auto one = FockDensity::pure(FockState::basis(1, 10));
  const auto sqz = FockDensity::pure(squeezed_vacuum(0.5, 60));
  const auto sub = FockDensity::pure(photon_subtract(squeezed_vacuum(0.5, 60)));
  EXPECT_NEAR(wigner_value(vac, 0, 0), kInvPi, 1e-12);
  EXPECT_NEAR(wigner_value(sqz, 0, 0), kInvPi, 1e-12);
  EXPECT_NEAR(wigner_value(one, 0, 0), -kInvPi, 1e-12);
  EXPECT_NEAR(wigner_value(sub, 0, 0), -kInvPi, 1e-12);
}

TEST(Wigner, OriginMatchesParityForRandomStates) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const auto rho = random_density(rng, 3 + trial % 12);
    EXPECT_NEAR(wigner_value(rho, 0.0, 0.0), wigner_origin_parity(rho), 1e-12) << trial;
  }
}

TEST(Wigner, CoherentStateIsDisplacedGaussian) {
  const Complex alpha{0.9, -0.6};
  const auto rho = FockDensity::pure(coherent_state(alpha, 50));
  const double x0 = std::sqrt(2.0) * alpha.real();
  const double p0 = std::sqrt(2.0) * alpha.imag();
  for (double x : {-1.0, 0.0, 1.3}) {
    for (double p : {-1.5, -0.8, 0.4}) {
      const double expected = kInvPi * std::exp(-(x - x0) * (x - x0) - (p - p0) * (p - p0));
      EXPECT_NEAR(wigner_value(rho, x, p), expected, 1e-12);
    }
  }
}

TEST(Wigner, SinglePhotonClosedForm) {
  const auto rho = FockDensity::pure(FockState::basis(1, 4));
  for (double x : {-2.0, -0.3, 0.0, 1.1}) {
    for (double p : {-0.7, 0.0, 2.2}) {
      const double r2 = x * x + p * p;
      EXPECT_NEAR(wigner_value(rho, x, p), kInvPi * (2.0 * r2 - 1.0) * std::exp(-r2), 1e-13);
    }
  }
}

TEST(Wigner, GridIntegratesToOneAndMatchesPointwise) {
  std::mt19937_64 rng(5);
  const auto rho = random_density(rng, 6);
  const auto axis = default_phase_space_axis();
  ASSERT_EQ(axis.size(), 121u);
  const auto grid = wigner(rho, axis, axis);
  EXPECT_NEAR(grid.integral(), 1.0, 1e-6);
  EXPECT_NEAR(grid.values(17, 90), wigner_value(rho, axis[17], axis[90]), 1e-13);
  EXPECT_EQ(grid.convention, kWignerConvention);
}

TEST(Wigner, MarginalIsQuadratureDistribution) {
  std::mt19937_64 rng(9);
  const auto rho = random_density(rng, 7);
  const double h = 0.01;
  for (double x : {-1.7, -0.4, 0.0, 0.9, 2.1}) {
    double marginal = 0.0;
    for (double p = -10.0; p <= 10.0; p += h) marginal += wigner_value(rho, x, p) * h;
    EXPECT_NEAR(marginal, quadrature_pdf(rho, 0.0, x), 1e-4) << x;
  }
}

TEST(Wigner, RejectsBadAxes) {
  const auto rho = FockDensity::pure(FockState::basis(0, 3));
  const std::vector<double> ok{-1.0, 0.0, 1.0};
  const std::vector<double> unsorted{0.0, -1.0, 1.0};
  const std::vector<double> bad{0.0, std::nan(""), 1.0};
  EXPECT_THROW(wigner(rho, unsorted, ok), PreconditionError);
  EXPECT_THROW(wigner(rho, ok, bad), PreconditionError);
}
