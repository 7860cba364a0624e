#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "heraldsim/fock.hpp"
#include "heraldsim/temporal_modes.hpp"

namespace heraldsim::herald {

/// Timing-jitter model; instantiated on the simulation grid by make_jitter().
struct JitterSpec {
  modes::JitterShape shape = modes::JitterShape::kRectangular;
  double width_ns = 8.3;        // rectangular / trapezoidal full width
  double rise_ns = 3.5;         // trapezoidal edges
  double extinction_db = 30.0;  // trapezoidal floor
  double floor_width_ns = 58.0; // trapezoidal floor window
  double sigma_ns = 20.0;       // gaussian
  double center_ns = 0.0;
};

modes::JitterDistribution make_jitter(const JitterSpec& spec, const modes::TimeGrid& grid);

/// How the non-Gaussian component is parameterized.
enum class CatSource {
  kCat,         // |cat> = (|a> + e^{i psi}|-a>)/N
  kSubtracted,  // a S(r)|0>, normalized
};

struct HeraldConfig {
  double opo_hwhm_mhz = 58.4;
  double filter_hwhm_mhz = 8.0;
  double squeeze_param = 0.25;
  CatSource cat_source = CatSource::kSubtracted;
  double cat_alpha = 1.0;
  double cat_psi = 3.141592653589793;
  double tap_ratio = 0.047;  // documentation only: sets the heralding rate, not the state
  double efficiency_eta = 1.0;
  JitterSpec jitter;
  std::size_t n_cut = 40;
  modes::TimeGrid grid = modes::default_grid();
  /// Replaces the kernel's lambda1 in the two-component state when set.
  std::optional<double> lambda1_override;

  /// Throws PreconditionError on out-of-range fields.
  void validate() const;
};

/// Wave packet f = g * r of the heralded state (no jitter).
modes::ModeFunction heralded_wavepacket(const HeraldConfig& cfg);

/// Non-Gaussian component on its own mode (before loss).
fock::FockState cat_component(const HeraldConfig& cfg);
fock::FockState squeezed_component(const HeraldConfig& cfg);

/// lambda1 |cat><cat| + (1 - lambda1) |sqz><sqz|, then loss eta.
fock::FockDensity two_component_state(const fock::FockState& cat, const fock::FockState& sqz, double lambda1,
                                      double eta);

/// Single-mode state of one heralded event (cat component with loss), i.e.
/// the state on the shifted packet before jitter averaging.
fock::FockDensity event_state(const HeraldConfig& cfg);

/// Jitter analysis that does not depend on the Fock parameters.
struct ModeAnalysis {
  modes::ModeFunction f;
  modes::PrincipalModeResult principal;
  double fwhm_f1 = 0.0;
};

ModeAnalysis analyze_modes(const HeraldConfig& cfg);

struct HeraldResult {
  fock::FockDensity rho_f1;
  modes::ModeFunction f1;
  double lambda1 = 0.0;  // weight used in rho_f1 (override if set)
  double w_origin = 0.0;
  double w_min_near_origin = 0.0;
  std::vector<double> pn_dist;
  double fwhm_f1 = 0.0;
  Eigen::VectorXd spectrum;
};

/// Radius of the disc searched for the Wigner minimum.
inline constexpr double kDefaultSearchRadius = 1.0;

HeraldResult build_heralded_state(const HeraldConfig& cfg);
/// Reuses a precomputed mode analysis of the same cfg.
HeraldResult build_heralded_state(const HeraldConfig& cfg, const ModeAnalysis& analysis);

/// One result per width (jitter shape from cfg), in input order.
std::vector<HeraldResult> jitter_sweep(const HeraldConfig& cfg, std::span<const double> widths_ns,
                                       unsigned jobs = 1);

struct Calibration {
  double eta = 1.0;
  double residual = 0.0;  // w_origin(eta) - target
};

/// Bisection on eta so that w_origin matches `target_w_origin` within 1e-4.
/// Throws PreconditionError when no eta in [0, 1] brackets the target.
Calibration calibrate_efficiency(double target_w_origin, const HeraldConfig& cfg);
Calibration calibrate_efficiency(double target_w_origin, const HeraldConfig& cfg, const ModeAnalysis& analysis);

nlohmann::json to_json(const HeraldResult& result);

/// Header: width_ns,lambda1_dimensionless,fwhm_f1_ns,w_origin_dimensionless,w_min_dimensionless
void write_sweep_csv(std::ostream& out, std::span<const double> widths_ns, std::span<const HeraldResult> results);

}  // namespace heraldsim::herald
