#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "heraldsim/errors.hpp"
#include "heraldsim/fock.hpp"

using namespace heraldsim;
using namespace heraldsim::fock;

namespace {

FockDensity random_density(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> g;
  Eigen::MatrixXcd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < n; ++k) a(i, k) = {g(rng), g(rng)};
  return FockDensity(a * a.adjoint());
}

double factorial(int n) { return std::tgamma(n + 1.0); }

}  // namespace

TEST(FockState, NormalizesAndRejectsDegenerateInput) {
  Eigen::VectorXcd v(3);
  v << 3.0, 4.0, 0.0;
  const FockState s(v);
  EXPECT_NEAR(s.amplitudes().squaredNorm(), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(s[0]), 0.6, 1e-15);
  EXPECT_THROW(FockState(Eigen::VectorXcd::Zero(3)), PreconditionError);
  EXPECT_THROW(FockState(Eigen::VectorXcd()), PreconditionError);
  v[2] = std::nan("");
  EXPECT_THROW(FockState{v}, PreconditionError);
}

TEST(FockState, CoherentAmplitudesMatchClosedForm) {
  const Complex alpha{0.7, -0.4};
  const auto s = coherent_state(alpha, 30);
  for (int n = 0; n < 12; ++n) {
    const Complex expected = std::exp(-0.5 * std::norm(alpha)) * std::pow(alpha, n) / std::sqrt(factorial(n));
    EXPECT_NEAR(std::abs(s[n] - expected), 0.0, 1e-12) << n;
  }
  EXPECT_NEAR(s.mean_photon_number(), std::norm(alpha), 1e-12);
}

TEST(FockState, SqueezedVacuumAmplitudesAndMoments) {
  const double r = 0.6;
  const auto s = squeezed_vacuum(r, 60);
  for (int m = 0; m < 8; ++m) {
    const double expected = std::pow(-std::tanh(r), m) * std::sqrt(factorial(2 * m)) /
                            (std::pow(2.0, m) * factorial(m)) / std::sqrt(std::cosh(r));
    EXPECT_NEAR(s[2 * m].real(), expected, 1e-12) << m;
    EXPECT_NEAR(std::abs(s[2 * m + 1]), 0.0, 1e-15);
  }
  EXPECT_NEAR(s.mean_photon_number(), std::sinh(r) * std::sinh(r), 1e-10);
  EXPECT_NEAR(s.parity(), 1.0, 1e-12);
}

TEST(FockState, PhotonSubtractionFlipsParity) {
  const double r = 0.4;
  const auto sub = photon_subtract(squeezed_vacuum(r, 50));
  EXPECT_NEAR(sub.parity(), -1.0, 1e-12);
  // <n> of a S|0> is 1 + 3 sinh^2 r
  EXPECT_NEAR(sub.mean_photon_number(), 1.0 + 3.0 * std::sinh(r) * std::sinh(r), 1e-9);
  EXPECT_THROW(photon_subtract(FockState::basis(0, 5)), PreconditionError);
}

TEST(FockState, CatStateNormalizationAndLimits) {
  const auto odd = cat_state(1.2, std::numbers::pi, 40);
  EXPECT_NEAR(odd.parity(), -1.0, 1e-12);
  const auto even = cat_state(1.2, 0.0, 40);
  EXPECT_NEAR(even.parity(), 1.0, 1e-12);
  // odd cat mean photon number |a|^2 coth|a|^2
  EXPECT_NEAR(odd.mean_photon_number(), 1.44 / std::tanh(1.44), 1e-10);
  // small-alpha odd cat tends to |1>
  const auto tiny = cat_state(1e-3, std::numbers::pi, 10);
  EXPECT_GT(fidelity(tiny, FockState::basis(1, 10)), 1.0 - 1e-6);
  EXPECT_THROW(cat_state(0.0, std::numbers::pi, 10), PreconditionError);
}

TEST(FockState, TailMassFlagsTruncation) {
  EXPECT_GT(coherent_state(3.0, 8).tail_mass(), 1e-3);
  EXPECT_LT(coherent_state(1.0, 40).tail_mass(), 1e-20);
}

TEST(FockDensity, RejectsNonHermitianAndNonPositiveTrace) {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(3, 3);
  m(0, 1) = 0.1;
  EXPECT_THROW(FockDensity{m}, PreconditionError);
  EXPECT_THROW(FockDensity(Eigen::MatrixXcd::Zero(3, 3)), PreconditionError);
  EXPECT_NEAR(FockDensity(2.0 * Eigen::MatrixXcd::Identity(4, 4)).trace(), 1.0, 1e-15);
}

TEST(FockDensity, MixtureWeights) {
  const std::vector<FockState> states{FockState::basis(0, 3), FockState::basis(2, 3)};
  const std::vector<double> w{0.25, 0.75};
  const auto rho = FockDensity::mixture(w, states);
  EXPECT_NEAR(rho(0, 0).real(), 0.25, 1e-15);
  EXPECT_NEAR(rho(2, 2).real(), 0.75, 1e-15);
  EXPECT_NEAR(rho.purity(), 0.25 * 0.25 + 0.75 * 0.75, 1e-15);
  const std::vector<double> bad{0.5, 0.6};
  EXPECT_THROW(FockDensity::mixture(bad, states), PreconditionError);
}

TEST(LossChannel, SinglePhotonAndLimits) {
  const auto one = FockDensity::pure(FockState::basis(1, 4));
  const auto out = loss_channel(one, 0.7);
  EXPECT_NEAR(out(1, 1).real(), 0.7, 1e-15);
  EXPECT_NEAR(out(0, 0).real(), 0.3, 1e-15);
  EXPECT_NEAR((loss_channel(one, 1.0).matrix() - one.matrix()).norm(), 0.0, 1e-15);
  EXPECT_NEAR(loss_channel(one, 0.0)(0, 0).real(), 1.0, 1e-15);
  EXPECT_THROW(loss_channel(one, 1.5), PreconditionError);
}

TEST(LossChannel, SemigroupAndPhysicality) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const auto rho = random_density(rng, 9);
    const auto twice = loss_channel(loss_channel(rho, 0.8), 0.6);
    const auto once = loss_channel(rho, 0.48);
    EXPECT_LT((twice.matrix() - once.matrix()).cwiseAbs().maxCoeff(), 1e-13);
    EXPECT_NEAR(once.trace(), 1.0, 1e-13);
    EXPECT_GT(once.min_eigenvalue(), -1e-13);
  }
}

TEST(LossChannel, CoherentStateStaysCoherent) {
  const Complex alpha{1.1, 0.3};
  const auto out = loss_channel(FockDensity::pure(coherent_state(alpha, 40)), 0.64);
  EXPECT_NEAR(fidelity(out, coherent_state(0.8 * alpha, 40)), 1.0, 1e-12);
}

TEST(QuadraturePdf, VacuumAndCoherentGaussians) {
  const auto vac = FockDensity::pure(FockState::basis(0, 6));
  for (double x : {-1.5, 0.0, 0.3, 2.0}) {
    EXPECT_NEAR(quadrature_pdf(vac, 0.9, x), std::exp(-x * x) / std::sqrt(std::numbers::pi), 1e-14);
  }
  const Complex alpha{0.8, -0.5};
  const auto coh = FockDensity::pure(coherent_state(alpha, 40));
  for (double theta : {0.0, std::numbers::pi / 3, std::numbers::pi / 2}) {
    const double mean = std::sqrt(2.0) * (alpha.real() * std::cos(theta) + alpha.imag() * std::sin(theta));
    for (double x : {-1.0, 0.2, 1.7}) {
      const double expected = std::exp(-(x - mean) * (x - mean)) / std::sqrt(std::numbers::pi);
      EXPECT_NEAR(quadrature_pdf(coh, theta, x), expected, 1e-12);
    }
  }
}

TEST(QuadraturePdf, NormalizedForRandomStates) {
  std::mt19937_64 rng(11);
  const auto rho = random_density(rng, 10);
  double sum = 0.0;
  const double h = 0.01;
  for (double x = -12.0; x <= 12.0; x += h) sum += quadrature_pdf(rho, 0.4, x) * h;
  EXPECT_NEAR(sum, 1.0, 1e-9);
}

TEST(Wavefunctions, OrthonormalOnFineGrid) {
  const std::size_t n = 8;
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
  std::vector<double> psi(n);
  const double h = 0.005;
  for (double x = -12.0; x <= 12.0; x += h) {
    oscillator_wavefunctions(x, psi);
    const Eigen::Map<Eigen::VectorXd> v(psi.data(), n);
    gram += h * v * v.transpose();
  }
  EXPECT_LT((gram - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Fidelity, Bounds) {
  const auto a = coherent_state(0.5, 20);
  EXPECT_NEAR(fidelity(a, a), 1.0, 1e-14);
  EXPECT_NEAR(fidelity(FockState::basis(0, 4), FockState::basis(1, 6)), 0.0, 1e-15);
  EXPECT_NEAR(fidelity(FockDensity::pure(a), a), 1.0, 1e-14);
}

TEST(LogFactorial, MatchesLgamma) {
  EXPECT_DOUBLE_EQ(log_factorial(0), 0.0);
  EXPECT_NEAR(log_factorial(10), std::log(3628800.0), 1e-12);
  EXPECT_NEAR(log_factorial(170), std::lgamma(171.0), 1e-9);
}

TEST(FockJson, RoundTrip) {
  std::mt19937_64 rng(3);
  const auto rho = random_density(rng, 5);
  const auto back = density_from_json(to_json(rho));
  EXPECT_EQ(back.n_cut(), 5u);
  EXPECT_EQ(back.matrix(), rho.matrix());
}
