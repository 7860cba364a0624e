// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "heraldsim/fock.hpp"
#include "heraldsim/herald.hpp"
#include "heraldsim/homodyne.hpp"
#include "heraldsim/runner.hpp"
#include "heraldsim/temporal_modes.hpp"
#include "heraldsim/tomography.hpp"
#include "heraldsim/util.hpp"
#include "heraldsim/wigner.hpp"

using namespace heraldsim;
namespace fs = std::filesystem;

namespace {

const std::vector<double> kGateWidths{8.3, 29.7, 49.5, 70.4};
const std::vector<double> kFig3cWidths{0.0, 8.3, 29.7, 49.5, 58.0, 70.4};
constexpr double kInvPi = 1.0 / std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& title, double budget_s, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool in_time = budget_s <= 0.0 || secs <= budget_s;
  const bool pass = out.pass && in_time;
  if (!pass) ++failures;
  std::printf("[%s] criterion %d: %s | %s | %.2f s%s\n", pass ? "PASS" : "FAIL", id, title.c_str(), out.detail.c_str(),
              secs, in_time ? "" : " (over time budget)");
  std::fflush(stdout);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

herald::HeraldConfig gate(double width_ns) {
  herald::HeraldConfig cfg;
  if (width_ns == 0.0) {
    cfg.jitter.shape = modes::JitterShape::kDelta;
  } else {
    cfg.jitter.width_ns = width_ns;
  }
  return cfg;
}

double packet_fwhm() { return modes::fwhm(herald::heralded_wavepacket(herald::HeraldConfig{})).width_ns; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main() {
  criterion(1, "parity anchors W(0,0) = +-1/pi", 1.0, [] {
    const auto vac = fock::FockDensity::pure(fock::FockState::basis(0, 40));
    const auto sqz = fock::FockDensity::pure(fock::squeezed_vacuum(0.25, 40));
    const auto one = fock::FockDensity::pure(fock::FockState::basis(1, 40));
    auto cfg = gate(0.0);
    cfg.efficiency_eta = 1.0;
    const auto sub = herald::build_heralded_state(cfg).rho_f1;
    const double dev = std::max({std::abs(fock::wigner_value(vac, 0, 0) - kInvPi),
                                 std::abs(fock::wigner_value(sqz, 0, 0) - kInvPi),
                                 std::abs(fock::wigner_value(one, 0, 0) + kInvPi),
                                 std::abs(fock::wigner_value(sub, 0, 0) + kInvPi)});
    return Outcome{dev <= 1e-9, "max |W(0,0) -+ 1/pi| = " + fmt(dev)};
  });

  criterion(2, "wave-packet FWHM 22 +- 2 ns", 1.0, [] {
    const double w = packet_fwhm();
    return Outcome{std::abs(w - 22.0) <= 2.0, "FWHM(g*r) = " + fmt(w) + " ns"};
  });

  criterion(3, "w_origin increasing over gate widths; only 8.3 ns negative after calibration", 30.0, [] {
    const auto ideal = herald::jitter_sweep(herald::HeraldConfig{}, kGateWidths);
    const auto cal = herald::calibrate_efficiency(-0.011, gate(8.3));
    auto cfg = herald::HeraldConfig{};
    cfg.efficiency_eta = cal.eta;
    const auto lossy = herald::jitter_sweep(cfg, kGateWidths);
    bool ok = std::abs(lossy[0].w_origin + 0.011) <= 1e-4 && lossy[0].w_origin < 0.0;
    std::string values;
    for (std::size_t i = 0; i < kGateWidths.size(); ++i) {
      if (i > 0) {
        ok = ok && ideal[i].w_origin > ideal[i - 1].w_origin && lossy[i].w_origin > lossy[i - 1].w_origin;
        ok = ok && lossy[i].w_origin >= 0.0;
      }
      values += (i ? ", " : "") + fmt(lossy[i].w_origin);
    }
    return Outcome{ok, "eta = " + fmt(cal.eta) + ", w_origin = [" + values + "]"};
  });

  criterion(4, "FWHM(f1) non-decreasing over jitter widths, width 0 equals packet FWHM", 30.0, [] {
    std::vector<double> w;
    for (double width : kFig3cWidths) w.push_back(herald::analyze_modes(gate(width)).fwhm_f1);
    bool ok = std::abs(w[0] - packet_fwhm()) <= 1e-9;
    std::string values;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (i > 0) ok = ok && w[i] >= w[i - 1];
      values += (i ? ", " : "") + fmt(w[i]);
    }
    return Outcome{ok, "FWHM(f1) = [" + values + "] ns"};
  });

  criterion(5, "lambda1 = 1 at delta jitter, strictly decreasing over gate widths", 10.0, [] {
    const double delta = herald::analyze_modes(gate(0.0)).principal.lambda1;
    bool ok = std::abs(delta - 1.0) <= 1e-9;
    double last = 2.0;
    std::string values;
    for (double width : kGateWidths) {
      const double l = herald::analyze_modes(gate(width)).principal.lambda1;
      ok = ok && l < last;
      last = l;
      values += ", " + fmt(l);
    }
    return Outcome{ok, "lambda1 = [" + fmt(delta) + values + "]"};
  });

  criterion(6, "PCA on 1e4 events recovers f1 with |overlap|^2 >= 0.98 at every gate width", 120.0, [] {
    // pass/fail on the default configuration; the calibrated-efficiency state is reported alongside
    const auto cal = herald::calibrate_efficiency(-0.011, gate(8.3));
    const homodyne::RecordOptions opt;
    auto overlap_at = [&](double width, double eta, std::uint64_t seed) {
      auto cfg = gate(width);
      cfg.efficiency_eta = eta;
      const auto records = homodyne::synthesize_records(cfg, opt, 10000, homodyne::default_phases(), seed);
      const auto pca = homodyne::covariance_pca(records);
      return pca.no_signal ? 0.0 : std::norm(modes::overlap(pca.mode.f1, homodyne::record_principal_mode(cfg, opt).f1));
    };
    bool ok = true;
    std::string values;
    std::string calibrated;
    for (std::size_t i = 0; i < kGateWidths.size(); ++i) {
      const double ov = overlap_at(kGateWidths[i], 1.0, 1000 + i);
      ok = ok && ov >= 0.98;
      values += (i ? ", " : "") + fmt(ov);
      calibrated += (i ? ", " : "") + fmt(overlap_at(kGateWidths[i], cal.eta, 2000 + i));
    }
    return Outcome{ok, "|<f1_pca, f1>|^2 = [" + values + "]; at calibrated eta " + fmt(cal.eta) + " (informational): [" +
                           calibrated + "]"};
  });

  criterion(7, "MLE round trip: |1> fidelity >= 0.98; two-component w_origin within 0.02", 300.0, [] {
    const auto phases = homodyne::default_phases();
    const auto one_state = fock::FockState::basis(1, 12);
    const auto one = homodyne::sample_quadratures(fock::FockDensity::pure(one_state), phases, 10000, 7);
    const auto r1 = tomography::mle_reconstruct(one);
    const double fid = fock::fidelity(r1.rho_hat, one_state);
    const auto boot = tomography::bootstrap_wmin(one, 100, 7);
    bool ok = fid >= 0.98 && r1.converged;
    std::string detail = "F(|1>) = " + fmt(fid) + ", bootstrap(100) std = " + fmt(boot.std) + "; dw =";
    const herald::HeraldConfig cfg;
    for (double lambda : {0.3, 0.6, 0.9}) {
      const auto truth =
          herald::two_component_state(herald::cat_component(cfg), herald::squeezed_component(cfg), lambda, 1.0);
      const auto samples = homodyne::sample_quadratures(truth, phases, 10000, 70 + static_cast<int>(10 * lambda));
      const auto r = tomography::mle_reconstruct(samples);
      const double dw = r.w_origin - fock::wigner_origin_parity(truth);
      ok = ok && std::abs(dw) <= 0.02 && r.converged;
      detail += " " + fmt(dw);
    }
    return Outcome{ok, detail};
  });

  criterion(8, "bootstrap std of w_min at 1e4 events within 3x of 0.004, shrinking with events", 300.0, [] {
    const auto phases = homodyne::default_phases();
    const auto one = fock::FockDensity::pure(fock::FockState::basis(1, 12));
    const auto small = tomography::bootstrap_wmin(homodyne::sample_quadratures(one, phases, 10000 / 6, 8), 100, 8);
    const auto large = tomography::bootstrap_wmin(homodyne::sample_quadratures(one, phases, 40000 / 6, 9), 100, 9);
    const bool ok = small.std >= 0.004 / 3.0 && small.std <= 0.004 * 3.0 && large.std < small.std;
    return Outcome{ok, "std(1e4) = " + fmt(small.std) + ", std(4e4) = " + fmt(large.std)};
  });

  criterion(9, "every command reruns to byte-identical CSV output", 0.0, [] {
    const fs::path root = fs::temp_directory_path() / "heraldsim_acceptance";
    fs::remove_all(root);
    const std::vector<std::string> small{"homodyne.n_events=3000", "tomography.bootstrap_resamples=50",
                                         "tomography.n_cut=8"};
    std::size_t compared = 0;
    std::string mismatch;
    for (auto cmd : {runner::Command::kModes, runner::Command::kSweep, runner::Command::kSynthesize,
                     runner::Command::kTomography, runner::Command::kReproduceFig3c, runner::Command::kReproduceFig4,
                     runner::Command::kEnd2end}) {
      const std::string name(runner::to_string(cmd));
      runner::ExperimentSpec spec;
      spec.command = cmd;
      spec.seed = 424242;
      spec.overrides = small;
      spec.output_dir = root / name / "first";
      std::ostringstream log;
      if (runner::run(spec, log).exit_code != 0) return Outcome{false, name + " failed"};
      spec.output_dir = root / name / "second";
      spec.jobs = 2;
      runner::run(spec, log);
      runner::ExperimentSpec rerun;
      rerun.manifest_path = root / name / "first" / "manifest.json";
      rerun.output_dir = root / name / "manifest";
      runner::run(rerun, log);
      for (const auto& entry : fs::directory_iterator(root / name / "first")) {
        if (entry.path().extension() != ".csv") continue;
        const auto file = entry.path().filename();
        const auto a = slurp(entry.path());
        if (a != slurp(root / name / "second" / file) || a != slurp(root / name / "manifest" / file)) {
          mismatch += " " + name + "/" + file.string();
        }
        ++compared;
      }
    }
    fs::remove_all(root);
    return Outcome{mismatch.empty() && compared > 0,
                   std::to_string(compared) + " CSV files compared across reruns, jobs and manifest replay" +
                       (mismatch.empty() ? "" : "; differing:" + mismatch)};
  });

  std::printf("%s: %d criterion(s) failed\n", failures == 0 ? "ACCEPTANCE PASSED" : "ACCEPTANCE FAILED", failures);
  return failures == 0 ? 0 : 1;
}
