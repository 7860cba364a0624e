#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "heraldsim/fock.hpp"
#include "heraldsim/herald.hpp"
#include "heraldsim/temporal_modes.hpp"
#include "heraldsim/tomography.hpp"

namespace heraldsim::homodyne {

/// The six local-oscillator phases 0, pi/6, ..., 5pi/6.
std::vector<double> default_phases();

/// Time-resolved quadrature trace of one heralded event, in ns^-1/2: the
/// sample at t_k is the field quadrature averaged over a record step.
struct HomodyneRecord {
  std::uint64_t event_id = 0;
  double theta = 0.0;
  std::vector<double> samples;
  double shift_truth = 0.0;  // jitter offset used in synthesis (ns); oracle tests only
};

struct RecordSet {
  modes::TimeGrid grid;
  std::vector<HomodyneRecord> records;
};

/// Homodyne acquisition settings. Records are taken every `step_ns` over
/// [t_start_ns, t_end_ns] of the simulation grid.
struct RecordOptions {
  double t_start_ns = -140.0;
  double t_end_ns = 60.0;
  double step_ns = 4.0;
  /// Background variance relative to vacuum (1 = vacuum, < 1 squeezed).
  double background_factor = 1.0;
  /// Coverage tolerance for shifted packets inside the record window.
  double max_coverage_loss = 1e-4;

  modes::SampleLayout layout(const modes::TimeGrid& fine) const;
};

/// Inverse-CDF sampler of P(x|theta) on a tabulated grid.
class QuadratureSampler {
 public:
  QuadratureSampler(const fock::FockDensity& rho, double theta, double x_max = 12.0, std::size_t points = 8001);
  /// u in [0, 1)
  double quantile(double u) const;

 private:
  std::vector<double> x_;
  std::vector<double> cdf_;
};

/// Event i uses phase phases[i % phases.size()], a jitter shift drawn from
/// cfg.jitter and a mode quadrature drawn from event_state(cfg); everything
/// orthogonal to the shifted packet is white background noise. Event i draws
/// from derive_seed(seed, kSynthesis, i).
RecordSet synthesize_records(const herald::HeraldConfig& cfg, const RecordOptions& options, std::size_t n_events,
                             std::span<const double> phases, std::uint64_t seed, unsigned jobs = 1);

/// Records with no heralded signal (background only).
RecordSet synthesize_background_records(const herald::HeraldConfig& cfg, const RecordOptions& options,
                                        std::size_t n_events, std::span<const double> phases, std::uint64_t seed);

/// Analytic counterpart of covariance_pca on the record samples: principal
/// mode of the jitter kernel evaluated at the record times.
modes::PrincipalModeResult record_principal_mode(const herald::HeraldConfig& cfg, const RecordOptions& options);

enum class BackgroundModel {
  kKnownVacuum,  // subtract background_factor / (2 dt) on the diagonal
  kEstimated,    // subtract the sample covariance of background-only records
};

struct PcaOptions {
  BackgroundModel background = BackgroundModel::kKnownVacuum;
  double background_factor = 1.0;
  const RecordSet* background_records = nullptr;  // required for kEstimated
};

struct PcaResult {
  modes::PrincipalModeResult mode;  // spectrum: excess eigenvalues, may dip below 0 from noise
  double noise_floor = 0.0;         // largest eigenvalue white noise alone would plausibly reach
  bool no_signal = false;
  std::size_t n_records = 0;
};

/// Throws PreconditionError below 100 records.
PcaResult covariance_pca(const RecordSet& records, const PcaOptions& options = {});

/// x = sum_k f1(t_k) x(t_k) dt per record, grouped by phase in first-seen order.
tomography::QuadratureSampleSet project_quadratures(const RecordSet& records, const modes::ModeFunction& f1);

/// Direct single-mode samples from rho: `per_phase` draws at every phase.
tomography::QuadratureSampleSet sample_quadratures(const fock::FockDensity& rho, std::span<const double> phases,
                                                   std::size_t per_phase, std::uint64_t seed);

}  // namespace heraldsim::homodyne
