#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <nlohmann/json_fwd.hpp>

namespace heraldsim::fock {

using Complex = std::complex<double>;

/// Pure state in the truncated photon-number basis |0>..|n_cut-1>.
class FockState {
 public:
  /// Normalizes `amplitudes`. Throws PreconditionError on an empty, non-finite
  /// or zero-norm vector.
  explicit FockState(Eigen::VectorXcd amplitudes, double truncation_deficit = 0.0);

  static FockState basis(std::size_t n, std::size_t n_cut);

  std::size_t n_cut() const { return static_cast<std::size_t>(amplitudes_.size()); }
  const Eigen::VectorXcd& amplitudes() const { return amplitudes_; }
  Complex operator[](std::size_t n) const { return amplitudes_[static_cast<Eigen::Index>(n)]; }

  /// Population of the highest retained level.
  double tail_mass() const;
  /// Probability the untruncated state had beyond the cut, for constructors
  /// that know it analytically; 0 otherwise.
  double truncation_deficit() const { return truncation_deficit_; }

  double mean_photon_number() const;
  /// <(-1)^n>
  double parity() const;

  /// Zero-pads or truncates (then renormalizes) to `n_cut` levels.
  FockState resized(std::size_t n_cut) const;

 private:
  Eigen::VectorXcd amplitudes_;
  double truncation_deficit_ = 0.0;
};

/// Density matrix in the truncated photon-number basis.
///
/// Construction symmetrizes and renormalizes to unit trace; inputs further than
/// 1e-9 from Hermitian, or with non-positive trace, are rejected.
class FockDensity {
 public:
  explicit FockDensity(Eigen::MatrixXcd matrix);

  static FockDensity pure(const FockState& state);
  /// Weighted mixture of pure states; weights must be non-negative and sum to 1.
  static FockDensity mixture(std::span<const double> weights, std::span<const FockState> states);

  std::size_t n_cut() const { return static_cast<std::size_t>(matrix_.rows()); }
  const Eigen::MatrixXcd& matrix() const { return matrix_; }
  Complex operator()(std::size_t m, std::size_t n) const {
    return matrix_(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  }

  double trace() const { return matrix_.trace().real(); }
  double purity() const;
  double min_eigenvalue() const;
  double mean_photon_number() const;
  FockDensity resized(std::size_t n_cut) const;

 private:
  Eigen::MatrixXcd matrix_;
};

FockState coherent_state(Complex alpha, std::size_t n_cut);
FockState squeezed_vacuum(double squeeze_param, std::size_t n_cut);
FockState cat_state(Complex alpha, double psi, std::size_t n_cut);

/// Normalized a|psi>. Throws PreconditionError when a|psi> vanishes (vacuum input).
FockState photon_subtract(const FockState& state);

/// Pure-loss (beamsplitter) channel with transmittance `eta`.
FockDensity loss_channel(const FockDensity& rho, double eta);

std::vector<double> photon_number_distribution(const FockDensity& rho);

/// <psi|rho|psi>; the shorter basis is zero-padded.
double fidelity(const FockDensity& rho, const FockState& psi);

/// |<a|b>|^2
double fidelity(const FockState& a, const FockState& b);

/// Harmonic-oscillator eigenfunctions psi_0(x)..psi_{n_cut-1}(x), vacuum variance 1/2.
void oscillator_wavefunctions(double x, std::span<double> out);

/// P(x|theta) for the rotated quadrature x cos(theta) + p sin(theta).
double quadrature_pdf(const FockDensity& rho, double theta, double x);

double log_factorial(std::size_t n);

nlohmann::json to_json(const FockDensity& rho);
FockDensity density_from_json(const nlohmann::json& j);

}  // namespace heraldsim::fock
