#include "heraldsim/herald.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <ostream>

#include <nlohmann/json.hpp>

#include "heraldsim/errors.hpp"
#include "heraldsim/tomography.hpp"
#include "heraldsim/util.hpp"
#include "heraldsim/wigner.hpp"

namespace heraldsim::herald {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw PreconditionError(message);
}

}  // namespace

modes::JitterDistribution make_jitter(const JitterSpec& spec, const modes::TimeGrid& grid) {
  switch (spec.shape) {
    case modes::JitterShape::kDelta:
      return modes::jitter_delta(grid, spec.center_ns);
    case modes::JitterShape::kRectangular:
      return modes::jitter_rectangular(spec.width_ns, grid, spec.center_ns);
    case modes::JitterShape::kTrapezoidal:
      return modes::jitter_gate_profile(spec.width_ns, spec.rise_ns, spec.extinction_db, grid, spec.center_ns,
                                        spec.floor_width_ns);
    case modes::JitterShape::kGaussian:
      return modes::jitter_gaussian(spec.sigma_ns, grid, spec.center_ns);
    case modes::JitterShape::kCustom:
      break;
  }
  throw PreconditionError("custom jitter has no parametric spec");
}

void HeraldConfig::validate() const {
  require(std::isfinite(opo_hwhm_mhz) && opo_hwhm_mhz > 0.0, "opo_hwhm_mhz must be positive");
  require(std::isfinite(filter_hwhm_mhz) && filter_hwhm_mhz > 0.0, "filter_hwhm_mhz must be positive");
  require(std::isfinite(squeeze_param) && squeeze_param >= 0.0, "squeeze_param must be non-negative");
  require(std::isfinite(cat_alpha), "cat_alpha must be finite");
  require(std::isfinite(cat_psi), "cat_psi must be finite");
  require(tap_ratio > 0.0 && tap_ratio < 1.0, "tap_ratio must lie in (0, 1)");
  require(efficiency_eta >= 0.0 && efficiency_eta <= 1.0, "efficiency_eta must lie in [0, 1]");
  require(n_cut >= 2, "n_cut must be at least 2");
  if (lambda1_override) {
    require(*lambda1_override >= 0.0 && *lambda1_override <= 1.0, "lambda1_override must lie in [0, 1]");
  }
  grid.validate();
}

modes::ModeFunction heralded_wavepacket(const HeraldConfig& cfg) {
  const auto g = modes::filter_response(cfg.filter_hwhm_mhz, cfg.grid);
  const auto r = modes::opo_correlation(cfg.opo_hwhm_mhz, cfg.grid);
  return modes::wavepacket(g, r);
}

fock::FockState cat_component(const HeraldConfig& cfg) {
  if (cfg.cat_source == CatSource::kCat) {
    return fock::cat_state(cfg.cat_alpha, cfg.cat_psi, cfg.n_cut);
  }
  return fock::photon_subtract(fock::squeezed_vacuum(cfg.squeeze_param, cfg.n_cut));
}

fock::FockState squeezed_component(const HeraldConfig& cfg) {
  return fock::squeezed_vacuum(cfg.squeeze_param, cfg.n_cut);
}

fock::FockDensity two_component_state(const fock::FockState& cat, const fock::FockState& sqz, double lambda1,
                                      double eta) {
  require(lambda1 >= 0.0 && lambda1 <= 1.0, "lambda1 must lie in [0, 1]");
  const std::array<double, 2> weights{lambda1, 1.0 - lambda1};
  const std::array<fock::FockState, 2> states{cat, sqz};
  return fock::loss_channel(fock::FockDensity::mixture(weights, states), eta);
}

fock::FockDensity event_state(const HeraldConfig& cfg) {
  return fock::loss_channel(fock::FockDensity::pure(cat_component(cfg)), cfg.efficiency_eta);
}

ModeAnalysis analyze_modes(const HeraldConfig& cfg) {
  cfg.validate();
  ModeAnalysis analysis;
  analysis.f = heralded_wavepacket(cfg);
  const auto j = make_jitter(cfg.jitter, cfg.grid);
  analysis.principal = modes::principal_mode(modes::jitter_kernel(analysis.f, j));
  analysis.fwhm_f1 = modes::fwhm(analysis.principal.f1).width_ns;
  return analysis;
}

HeraldResult build_heralded_state(const HeraldConfig& cfg) { return build_heralded_state(cfg, analyze_modes(cfg)); }

HeraldResult build_heralded_state(const HeraldConfig& cfg, const ModeAnalysis& analysis) {
  cfg.validate();
  const double lambda1 = cfg.lambda1_override.value_or(analysis.principal.lambda1);
  const auto cat = cat_component(cfg);
  const auto sqz = squeezed_component(cfg);
  for (const auto* state : {&cat, &sqz}) {
    if (state->tail_mass() > 1e-6 || state->truncation_deficit() > 1e-6) {
      throw PreconditionError("n_cut = " + std::to_string(cfg.n_cut) + " truncates the state (tail mass " +
                              format_double(std::max(state->tail_mass(), state->truncation_deficit())) + ")");
    }
  }
  HeraldResult result{two_component_state(cat, sqz, lambda1, cfg.efficiency_eta), {}, 0.0, 0.0, 0.0, {}, 0.0, {}};
  result.f1 = analysis.principal.f1;
  result.lambda1 = lambda1;
  result.w_origin = fock::wigner_origin_parity(result.rho_f1);
  result.w_min_near_origin = tomography::wigner_min_near_origin(result.rho_f1, kDefaultSearchRadius).value;
  result.pn_dist = fock::photon_number_distribution(result.rho_f1);
  result.fwhm_f1 = analysis.fwhm_f1;
  result.spectrum = analysis.principal.spectrum;
  return result;
}

std::vector<HeraldResult> jitter_sweep(const HeraldConfig& cfg, std::span<const double> widths_ns, unsigned jobs) {
  for (double w : widths_ns) {
    require(std::isfinite(w) && w > 0.0, "sweep widths must be positive");
  }
  std::vector<std::optional<HeraldResult>> slots(widths_ns.size());
  parallel_for(widths_ns.size(), jobs, [&](std::size_t i) {
    HeraldConfig local = cfg;
    local.jitter.width_ns = widths_ns[i];
    if (local.jitter.shape == modes::JitterShape::kGaussian) {
      local.jitter.sigma_ns = widths_ns[i];
    }
    slots[i] = build_heralded_state(local);
  });
  std::vector<HeraldResult> results;
  results.reserve(slots.size());
  for (auto& slot : slots) results.push_back(std::move(*slot));
  return results;
}

Calibration calibrate_efficiency(double target, const HeraldConfig& cfg) {
  return calibrate_efficiency(target, cfg, analyze_modes(cfg));
}

Calibration calibrate_efficiency(double target, const HeraldConfig& cfg, const ModeAnalysis& analysis) {
  const double bound = 1.0 / std::numbers::pi;
  require(target > -bound && target < bound, "calibration target must lie in (-1/pi, 1/pi)");
  const double lambda1 = cfg.lambda1_override.value_or(analysis.principal.lambda1);
  const auto cat = cat_component(cfg);
  const auto sqz = squeezed_component(cfg);
  const auto mixed = two_component_state(cat, sqz, lambda1, 1.0);
  auto residual = [&](double eta) { return fock::wigner_origin_parity(fock::loss_channel(mixed, eta)) - target; };

  // Scan down from eta = 1 for the first sign change, then bisect inside it.
  constexpr int kScan = 200;
  double hi = 1.0;
  double r_hi = residual(hi);
  if (std::abs(r_hi) <= 1e-12) return {1.0, r_hi};
  double lo = hi;
  double r_lo = r_hi;
  bool bracketed = false;
  for (int k = kScan - 1; k >= 0; --k) {
    lo = static_cast<double>(k) / kScan;
    r_lo = residual(lo);
    if (r_lo == 0.0) return {lo, 0.0};
    if ((r_lo < 0.0) != (r_hi < 0.0)) {
      bracketed = true;
      break;
    }
    hi = lo;
    r_hi = r_lo;
  }
  if (!bracketed) {
    throw PreconditionError("no efficiency in [0, 1] reaches W(0,0) = " + format_double(target));
  }
  for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double r_mid = residual(mid);
    if ((r_mid < 0.0) == (r_lo < 0.0)) {
      lo = mid;
      r_lo = r_mid;
    } else {
      hi = mid;
      r_hi = r_mid;
    }
  }
  const double eta = std::abs(r_lo) < std::abs(r_hi) ? lo : hi;
  const double res = residual(eta);
  if (std::abs(res) > 1e-4) {
    throw ConvergenceError("efficiency calibration residual " + format_double(res) + " exceeds 1e-4");
  }
  return {eta, res};
}

nlohmann::json to_json(const HeraldResult& result) {
  nlohmann::json f1 = nlohmann::json::array();
  for (Eigen::Index k = 0; k < result.f1.values.size(); ++k) {
    f1.push_back({result.f1.values[k].real(), result.f1.values[k].imag()});
  }
  std::vector<double> spectrum(result.spectrum.data(), result.spectrum.data() + result.spectrum.size());
  return {
      {"lambda1", result.lambda1},
      {"w_origin", result.w_origin},
      {"w_min_near_origin", result.w_min_near_origin},
      {"fwhm_f1_ns", result.fwhm_f1},
      {"pn_dist", result.pn_dist},
      {"spectrum", spectrum},
      {"f1", {{"t0_ns", result.f1.grid.t0}, {"dt_ns", result.f1.grid.dt}, {"values", f1}}},
      {"rho_f1", fock::to_json(result.rho_f1)},
  };
}

void write_sweep_csv(std::ostream& out, std::span<const double> widths_ns, std::span<const HeraldResult> results) {
  out << "width_ns,lambda1_dimensionless,fwhm_f1_ns,w_origin_dimensionless,w_min_dimensionless\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    out << format_double(widths_ns[i]) << ',' << format_double(results[i].lambda1) << ','
        << format_double(results[i].fwhm_f1) << ',' << format_double(results[i].w_origin) << ','
        << format_double(results[i].w_min_near_origin) << '\n';
  }
}

}  // namespace heraldsim::herald
