#include "heraldsim/fock.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <nlohmann/json.hpp>

#include "heraldsim/errors.hpp"

namespace heraldsim::fock {

namespace {

constexpr double kHermitianTolerance = 1e-9;

void require_n_cut(std::size_t n_cut) {
  if (n_cut < 1) {
    throw PreconditionError("n_cut must be at least 1");
  }
}

// Sum of |c_n|^2 for n >= start, given log|c_n|. Stops once terms stop
// contributing at double precision (after the sequence has started to decay).
template <typename LogAmplitude>
double tail_probability(std::size_t start, LogAmplitude log_amplitude) {
  double total = 0.0;
  double previous = 0.0;
  for (std::size_t n = start; n < start + 100000; ++n) {
    const double term = std::exp(2.0 * log_amplitude(n));
    total += term;
    if (term < previous && term <= 1e-18 * std::max(total, 1e-300)) {
      break;
    }
    previous = term;
  }
  return total;
}

}  // namespace

double log_factorial(std::size_t n) { return std::lgamma(static_cast<double>(n) + 1.0); }

// ---------------------------------------------------------------------------
// FockState

FockState::FockState(Eigen::VectorXcd amplitudes, double truncation_deficit)
    : amplitudes_(std::move(amplitudes)), truncation_deficit_(truncation_deficit) {
  if (amplitudes_.size() == 0) {
    throw PreconditionError("FockState needs at least one amplitude");
  }
  if (!amplitudes_.allFinite()) {
    throw PreconditionError("FockState amplitudes must be finite");
  }
  const double norm = amplitudes_.norm();
  if (norm < 1e-150) {
    throw PreconditionError("FockState has zero norm");
  }
  amplitudes_ /= norm;
}

FockState FockState::basis(std::size_t n, std::size_t n_cut) {
  require_n_cut(n_cut);
  if (n >= n_cut) {
    throw PreconditionError("basis state |" + std::to_string(n) + "> outside truncation " +
                            std::to_string(n_cut));
  }
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(n_cut));
  v[static_cast<Eigen::Index>(n)] = 1.0;
  return FockState(std::move(v));
}

double FockState::tail_mass() const { return std::norm(amplitudes_[amplitudes_.size() - 1]); }

double FockState::mean_photon_number() const {
  double mean = 0.0;
  for (Eigen::Index n = 0; n < amplitudes_.size(); ++n) {
    mean += static_cast<double>(n) * std::norm(amplitudes_[n]);
  }
  return mean;
}

double FockState::parity() const {
  double p = 0.0;
  for (Eigen::Index n = 0; n < amplitudes_.size(); ++n) {
    p += (n % 2 == 0 ? 1.0 : -1.0) * std::norm(amplitudes_[n]);
  }
  return p;
}

FockState FockState::resized(std::size_t n_cut) const {
  require_n_cut(n_cut);
  const auto n = static_cast<Eigen::Index>(n_cut);
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(n);
  const Eigen::Index common = std::min(n, amplitudes_.size());
  v.head(common) = amplitudes_.head(common);
  return FockState(std::move(v), truncation_deficit_);
}

// ---------------------------------------------------------------------------
// FockDensity

FockDensity::FockDensity(Eigen::MatrixXcd matrix) : matrix_(std::move(matrix)) {
  if (matrix_.rows() == 0 || matrix_.rows() != matrix_.cols()) {
    throw PreconditionError("density matrix must be square and non-empty");
  }
  if (!matrix_.allFinite()) {
    throw PreconditionError("density matrix must be finite");
  }
  const double scale = std::max(1.0, matrix_.cwiseAbs().maxCoeff());
  const double asym = (matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff();
  if (asym > kHermitianTolerance * scale) {
    throw PreconditionError("density matrix is not Hermitian (deviation " + std::to_string(asym) + ")");
  }
  matrix_ = 0.5 * (matrix_ + matrix_.adjoint()).eval();
  const double tr = matrix_.trace().real();
  if (!(tr > 0.0)) {
    throw PreconditionError("density matrix must have positive trace");
  }
  matrix_ /= tr;
}

FockDensity FockDensity::pure(const FockState& state) {
  const auto& v = state.amplitudes();
  return FockDensity(v * v.adjoint());
}

FockDensity FockDensity::mixture(std::span<const double> weights, std::span<const FockState> states) {
  if (weights.size() != states.size() || states.empty()) {
    throw PreconditionError("mixture needs one weight per state");
  }
  std::size_t n_cut = 0;
  double total = 0.0;
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (!(weights[i] >= 0.0)) {
      throw PreconditionError("mixture weights must be non-negative");
    }
    total += weights[i];
    n_cut = std::max(n_cut, states[i].n_cut());
  }
  if (std::abs(total - 1.0) > 1e-10) {
    throw PreconditionError("mixture weights must sum to 1");
  }
  const auto n = static_cast<Eigen::Index>(n_cut);
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n, n);
  for (std::size_t i = 0; i < states.size(); ++i) {
    const Eigen::VectorXcd v = states[i].resized(n_cut).amplitudes();
    m.noalias() += weights[i] * (v * v.adjoint());
  }
  return FockDensity(std::move(m));
}

double FockDensity::purity() const { return (matrix_ * matrix_).trace().real(); }

double FockDensity::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(matrix_, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

double FockDensity::mean_photon_number() const {
  double mean = 0.0;
  for (Eigen::Index n = 0; n < matrix_.rows(); ++n) {
    mean += static_cast<double>(n) * matrix_(n, n).real();
  }
  return mean;
}

FockDensity FockDensity::resized(std::size_t n_cut) const {
  require_n_cut(n_cut);
  const auto n = static_cast<Eigen::Index>(n_cut);
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n, n);
  const Eigen::Index common = std::min(n, matrix_.rows());
  m.topLeftCorner(common, common) = matrix_.topLeftCorner(common, common);
  return FockDensity(std::move(m));
}

// ---------------------------------------------------------------------------
// States

FockState coherent_state(Complex alpha, std::size_t n_cut) {
  require_n_cut(n_cut);
  if (!std::isfinite(alpha.real()) || !std::isfinite(alpha.imag())) {
    throw PreconditionError("coherent amplitude must be finite");
  }
  const auto n = static_cast<Eigen::Index>(n_cut);
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(n);
  const double mod = std::abs(alpha);
  if (mod == 0.0) {
    v[0] = 1.0;
    return FockState(std::move(v));
  }
  const double phase = std::arg(alpha);
  auto log_amp = [&](std::size_t k) {
    return -0.5 * mod * mod + static_cast<double>(k) * std::log(mod) - 0.5 * log_factorial(k);
  };
  for (Eigen::Index k = 0; k < n; ++k) {
    v[k] = std::polar(std::exp(log_amp(static_cast<std::size_t>(k))), static_cast<double>(k) * phase);
  }
  return FockState(std::move(v), tail_probability(n_cut, log_amp));
}

FockState squeezed_vacuum(double squeeze_param, std::size_t n_cut) {
  require_n_cut(n_cut);
  if (!std::isfinite(squeeze_param) || squeeze_param < 0.0) {
    throw PreconditionError("squeeze parameter must be finite and non-negative");
  }
  const auto n = static_cast<Eigen::Index>(n_cut);
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(n);
  if (squeeze_param == 0.0) {
    v[0] = 1.0;
    return FockState(std::move(v));
  }
  const double log_tanh = std::log(std::tanh(squeeze_param));
  const double log_sech = -0.5 * std::log(std::cosh(squeeze_param));
  // amplitude of |2m>
  auto log_amp_pair = [&](std::size_t m) {
    return log_sech + static_cast<double>(m) * log_tanh + 0.5 * log_factorial(2 * m) -
           static_cast<double>(m) * std::numbers::ln2 - log_factorial(m);
  };
  for (Eigen::Index k = 0; k < n; k += 2) {
    const auto m = static_cast<std::size_t>(k / 2);
    const double sign = (m % 2 == 0) ? 1.0 : -1.0;
    v[k] = sign * std::exp(log_amp_pair(m));
  }
  return FockState(std::move(v), tail_probability((n_cut + 1) / 2, log_amp_pair));
}

FockState cat_state(Complex alpha, double psi, std::size_t n_cut) {
  require_n_cut(n_cut);
  if (!std::isfinite(alpha.real()) || !std::isfinite(alpha.imag()) || !std::isfinite(psi)) {
    throw PreconditionError("cat parameters must be finite");
  }
  const double mod2 = std::norm(alpha);
  const double c = std::cos(psi);
  const double norm2 = 2.0 * (1.0 + c) + 2.0 * c * std::expm1(-2.0 * mod2);
  if (!(norm2 > 1e-24)) {
    throw PreconditionError("cat superposition cancels (normalization below 1e-12)");
  }
  const double inv_norm = 1.0 / std::sqrt(norm2);
  const Complex relative = std::polar(1.0, psi);
  const auto n = static_cast<Eigen::Index>(n_cut);
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(n);
  double kept = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double parity = (k % 2 == 0) ? 1.0 : -1.0;
    const Complex weight = 1.0 + relative * parity;
    // e^{-|a|^2/2} a^k / sqrt(k!)
    Complex coherent = 0.0;
    if (k == 0) {
      coherent = std::exp(-0.5 * mod2);
    } else if (mod2 > 0.0) {
      const double mag = std::exp(-0.5 * mod2 + static_cast<double>(k) * 0.5 * std::log(mod2) -
                                  0.5 * log_factorial(static_cast<std::size_t>(k)));
      coherent = std::polar(mag, static_cast<double>(k) * std::arg(alpha));
    }
    v[k] = coherent * weight * inv_norm;
    kept += std::norm(v[k]);
  }
  return FockState(std::move(v), std::max(0.0, 1.0 - kept));
}

FockState photon_subtract(const FockState& state) {
  const auto& c = state.amplitudes();
  const Eigen::Index n = c.size();
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(n);
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    out[k] = std::sqrt(static_cast<double>(k + 1)) * c[k + 1];
  }
  if (out.squaredNorm() < 1e-24) {
    throw PreconditionError("photon subtraction from a state with no photons");
  }
  return FockState(std::move(out));
}

FockDensity loss_channel(const FockDensity& rho, double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) {
    throw PreconditionError("transmittance must lie in [0, 1]");
  }
  const auto n = static_cast<Eigen::Index>(rho.n_cut());
  if (eta == 1.0) {
    return rho;
  }
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(n, n);
  if (eta == 0.0) {
    out(0, 0) = 1.0;
    return FockDensity(std::move(out));
  }
  const double log_eta = std::log(eta);
  const double log_loss = std::log1p(-eta);
  const auto& in = rho.matrix();
  // rho'_{mn} = sum_k sqrt(C(m+k,k) C(n+k,k)) eta^{(m+n)/2} (1-eta)^k rho_{m+k,n+k}
  auto log_binom = [](Eigen::Index top, Eigen::Index k) {
    return log_factorial(static_cast<std::size_t>(top)) - log_factorial(static_cast<std::size_t>(k)) -
           log_factorial(static_cast<std::size_t>(top - k));
  };
  for (Eigen::Index m = 0; m < n; ++m) {
    for (Eigen::Index q = 0; q < n; ++q) {
      Complex acc = 0.0;
      for (Eigen::Index k = 0; m + k < n && q + k < n; ++k) {
        const double log_coeff = 0.5 * (log_binom(m + k, k) + log_binom(q + k, k)) +
                                 0.5 * static_cast<double>(m + q) * log_eta +
                                 static_cast<double>(k) * log_loss;
        acc += std::exp(log_coeff) * in(m + k, q + k);
      }
      out(m, q) = acc;
    }
  }
  return FockDensity(std::move(out));
}

std::vector<double> photon_number_distribution(const FockDensity& rho) {
  std::vector<double> p(rho.n_cut());
  for (std::size_t n = 0; n < p.size(); ++n) {
    p[n] = rho(n, n).real();
  }
  return p;
}

double fidelity(const FockDensity& rho, const FockState& psi) {
  const std::size_t n_cut = std::max(rho.n_cut(), psi.n_cut());
  const Eigen::VectorXcd v = psi.resized(n_cut).amplitudes();
  const Eigen::MatrixXcd m = rho.resized(n_cut).matrix();
  return (v.adjoint() * m * v)(0, 0).real();
}

double fidelity(const FockState& a, const FockState& b) {
  const std::size_t n_cut = std::max(a.n_cut(), b.n_cut());
  return std::norm(a.resized(n_cut).amplitudes().dot(b.resized(n_cut).amplitudes()));
}

void oscillator_wavefunctions(double x, std::span<double> out) {
  if (out.empty()) {
    return;
  }
  out[0] = std::exp(-0.5 * x * x) / std::sqrt(std::sqrt(std::numbers::pi));
  if (out.size() > 1) {
    out[1] = std::numbers::sqrt2 * x * out[0];
  }
  for (std::size_t n = 2; n < out.size(); ++n) {
    const double nd = static_cast<double>(n);
    out[n] = std::sqrt(2.0 / nd) * x * out[n - 1] - std::sqrt((nd - 1.0) / nd) * out[n - 2];
  }
}

double quadrature_pdf(const FockDensity& rho, double theta, double x) {
  const std::size_t n_cut = rho.n_cut();
  std::vector<double> psi(n_cut);
  oscillator_wavefunctions(x, psi);
  Eigen::VectorXcd a(static_cast<Eigen::Index>(n_cut));
  for (std::size_t m = 0; m < n_cut; ++m) {
    a[static_cast<Eigen::Index>(m)] = std::polar(psi[m], -static_cast<double>(m) * theta);
  }
  // sum_{mn} rho_mn e^{i(n-m)theta} psi_m psi_n
  const Complex value = a.transpose() * rho.matrix() * a.conjugate();
  return std::max(0.0, value.real());
}

nlohmann::json to_json(const FockDensity& rho) {
  nlohmann::json data = nlohmann::json::array();
  const auto& m = rho.matrix();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      data.push_back({m(r, c).real(), m(r, c).imag()});
    }
  }
  return {{"n_cut", rho.n_cut()}, {"layout", "row-major [re, im] pairs"}, {"data", std::move(data)}};
}

FockDensity density_from_json(const nlohmann::json& j) {
  const auto n_cut = j.at("n_cut").get<std::size_t>();
  const auto& data = j.at("data");
  if (data.size() != n_cut * n_cut) {
    throw PreconditionError("density JSON has " + std::to_string(data.size()) + " entries, expected " +
                            std::to_string(n_cut * n_cut));
  }
  const auto n = static_cast<Eigen::Index>(n_cut);
  Eigen::MatrixXcd m(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) {
      const auto& pair = data[static_cast<std::size_t>(r * n + c)];
      m(r, c) = Complex(pair.at(0).get<double>(), pair.at(1).get<double>());
    }
  }
  return FockDensity(std::move(m));
}

}  // namespace heraldsim::fock
