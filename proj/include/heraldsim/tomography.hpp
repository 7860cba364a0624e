#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "heraldsim/fock.hpp"

namespace heraldsim::tomography {

/// Quadrature values measured at one local-oscillator phase.
struct PhaseSamples {
  double theta = 0.0;
  std::vector<double> x;
};

/// Tomography input: quadrature samples grouped by phase.
struct QuadratureSampleSet {
  std::vector<PhaseSamples> phases;
  std::string source;  // free-form provenance, e.g. "projection onto pca f1"

  std::size_t total() const;
  /// Throws PreconditionError unless >= 2 distinct phases, each non-empty.
  void validate() const;
};

struct MleOptions {
  std::size_t n_cut = 12;
  std::size_t max_iter = 2000;
  double tol = 1e-7;             // max |rho_{k+1} - rho_k|
  std::size_t min_bin_count = 20;
  double base_bin_width = 0.05;  // fine bins merged until each holds min_bin_count
};

struct TomographyResult {
  fock::FockDensity rho_hat{Eigen::MatrixXcd::Identity(1, 1)};
  std::vector<double> log_likelihood;  // one entry per iteration, starting with the initial state
  std::size_t iterations = 0;
  std::size_t diluted_steps = 0;  // iterations that fell back to a damped update
  bool converged = false;
  double final_change = 0.0;
  std::size_t bin_count = 0;
  double w_origin = 0.0;
  double w_min = 0.0;
  double w_min_x = 0.0;
  double w_min_p = 0.0;
  std::vector<double> pn_dist;
  std::optional<double> bootstrap_mean;
  std::optional<double> bootstrap_std;
};

/// Iterative maximum-likelihood reconstruction (R rho R) from binned
/// quadrature data, no loss correction. The likelihood is non-decreasing:
/// when a plain step would lower it, a damped step (I + eps R) is taken.
/// Non-convergence is reported through `converged`, not thrown.
TomographyResult mle_reconstruct(const QuadratureSampleSet& samples, const MleOptions& options = {},
                                 double search_radius = 1.0);

struct WignerMinimum {
  double value = 0.0;
  double x = 0.0;
  double p = 0.0;
  double distance() const;
};

/// Grid search over the disc of `radius` around the origin, then a compass
/// refinement inside the disc.
WignerMinimum wigner_min_near_origin(const fock::FockDensity& rho, double radius);

struct BootstrapResult {
  double mean = 0.0;
  double std = 0.0;
  std::vector<double> w_min;     // per resample, in resample order
  std::size_t non_converged = 0;
};

inline constexpr std::size_t kMinBootstrapResamples = 50;

/// Per-phase resampling with replacement; resample i draws from
/// derive_seed(seed, kBootstrap, i), so the result does not depend on `jobs`.
BootstrapResult bootstrap_wmin(const QuadratureSampleSet& samples, std::size_t n_resamples, std::uint64_t seed,
                               const MleOptions& options = {}, double search_radius = 1.0, unsigned jobs = 1);

nlohmann::json to_json(const TomographyResult& result);

}  // namespace heraldsim::tomography
