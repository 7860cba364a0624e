#include "heraldsim/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <ostream>

#include <nlohmann/json.hpp>

#include "heraldsim/config.hpp"
#include "heraldsim/errors.hpp"
#include "heraldsim/fock.hpp"
#include "heraldsim/herald.hpp"
#include "heraldsim/homodyne.hpp"
#include "heraldsim/record_io.hpp"
#include "heraldsim/temporal_modes.hpp"
#include "heraldsim/tomography.hpp"
#include "heraldsim/util.hpp"
#include "heraldsim/wigner.hpp"

namespace heraldsim::runner {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::pair<Command, std::string_view> kCommandNames[] = {
    {Command::kModes, "modes"},
    {Command::kSweep, "sweep"},
    {Command::kSynthesize, "synthesize"},
    {Command::kTomography, "tomography"},
    {Command::kReproduceFig3c, "reproduce-fig3c"},
    {Command::kReproduceFig4, "reproduce-fig4"},
    {Command::kEnd2end, "end2end"},
    {Command::kValidate, "validate"},
};

class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    const fs::path probe = dir_ / ".heraldsim-write-test";
    std::ofstream test(probe);
    if (ec || !test) throw ConfigError("output directory " + dir_.string() + " is not writable");
    test.close();
    fs::remove(probe, ec);
  }

  void write(const std::string& name, const std::function<void(std::ostream&)>& fn, bool binary = false) {
    std::ofstream out(dir_ / name, binary ? std::ios::binary : std::ios::out);
    if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
    fn(out);
    out.close();
    if (!out) throw std::runtime_error("error while writing " + (dir_ / name).string());
    names_.push_back(name);
  }

  void write_json(const std::string& name, const json& j) {
    write(name, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
  }

  const fs::path& dir() const { return dir_; }
  const std::vector<std::string>& names() const { return names_; }

 private:
  fs::path dir_;
  std::vector<std::string> names_;
};

struct Context {
  config::Settings settings;
  std::uint64_t seed = kDefaultSeed;
  unsigned jobs = 1;
  std::ostream& log;
  Outputs& out;
  std::vector<std::string>& warnings;
  int exit_code = kExitOk;
};

herald::HeraldConfig with_width(const herald::HeraldConfig& base, double width_ns) {
  auto cfg = base;
  if (width_ns == 0.0) {
    cfg.jitter.shape = modes::JitterShape::kDelta;
    return cfg;
  }
  if (cfg.jitter.shape == modes::JitterShape::kDelta) cfg.jitter.shape = modes::JitterShape::kRectangular;
  cfg.jitter.width_ns = width_ns;
  if (cfg.jitter.shape == modes::JitterShape::kGaussian) cfg.jitter.sigma_ns = width_ns;
  return cfg;
}

void write_pn_csv(std::ostream& o, const std::vector<double>& pn) {
  o << "n_photons,probability_dimensionless\n";
  for (std::size_t n = 0; n < pn.size(); ++n) o << n << ',' << format_double(pn[n]) << '\n';
}

void write_wigner_csv(std::ostream& o, const fock::FockDensity& rho) {
  const auto axis = fock::default_phase_space_axis();
  const auto grid = fock::wigner(rho, axis, axis);
  o << "x_dimensionless,p_dimensionless,w_dimensionless\n";
  for (std::size_t i = 0; i < axis.size(); ++i) {
    for (std::size_t k = 0; k < axis.size(); ++k) {
      o << format_double(axis[i]) << ',' << format_double(axis[k]) << ','
        << format_double(grid.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k))) << '\n';
    }
  }
}

void write_records(Context& ctx, const std::string& stem, const homodyne::RecordSet& records) {
  const auto fmt = ctx.settings.record_format;
  if (fmt != config::RecordFormat::kCsv) {
    ctx.out.write(stem + ".bin", [&](std::ostream& o) { io::write_records_binary(o, records); }, true);
  }
  if (fmt != config::RecordFormat::kBinary) {
    ctx.out.write(stem + ".csv", [&](std::ostream& o) { io::write_records_csv(o, records); });
  }
}

// --- modes / sweeps -------------------------------------------------------

void cmd_modes(Context& ctx) {
  const auto& cfg = ctx.settings.herald;
  const auto analysis = herald::analyze_modes(cfg);
  ctx.out.write("modes.csv", [&](std::ostream& o) {
    modes::write_modes_csv(o, {"f", "f1"}, {&analysis.f, &analysis.principal.f1});
  });
  ctx.out.write("spectrum.csv", [&](std::ostream& o) { modes::write_spectrum_csv(o, analysis.principal.spectrum); });
  const auto wf = modes::fwhm(analysis.f);
  const auto wf1 = modes::fwhm(analysis.principal.f1);
  ctx.out.write_json("modes.json", {{"jitter_shape", std::string(modes::to_string(cfg.jitter.shape))},
                                    {"jitter_width_ns", cfg.jitter.width_ns},
                                    {"lambda1", analysis.principal.lambda1},
                                    {"fwhm_f_ns", wf.width_ns},
                                    {"fwhm_f1_ns", wf1.width_ns},
                                    {"f1_multi_peak", wf1.multi_peak}});
  ctx.log << "lambda1 = " << format_double(analysis.principal.lambda1) << ", FWHM(f) = " << format_double(wf.width_ns)
          << " ns, FWHM(f1) = " << format_double(wf1.width_ns) << " ns\n";
}

void cmd_sweep(Context& ctx) {
  const auto& widths = ctx.settings.sweep_widths_ns;
  const auto results = herald::jitter_sweep(ctx.settings.herald, widths, ctx.jobs);
  ctx.out.write("sweep.csv", [&](std::ostream& o) { herald::write_sweep_csv(o, widths, results); });
  json all = json::array();
  for (const auto& r : results) all.push_back(herald::to_json(r));
  ctx.out.write_json("sweep.json", all);
}

void cmd_fig3c(Context& ctx) {
  const auto& widths = ctx.settings.fig3c_widths_ns;
  std::vector<herald::ModeAnalysis> analyses(widths.size());
  parallel_for(widths.size(), ctx.jobs,
               [&](std::size_t i) { analyses[i] = herald::analyze_modes(with_width(ctx.settings.herald, widths[i])); });
  ctx.out.write("fig3c.csv", [&](std::ostream& o) {
    o << "jitter_ns,fwhm_f1_ns,lambda1_dimensionless\n";
    for (std::size_t i = 0; i < widths.size(); ++i) {
      o << format_double(widths[i]) << ',' << format_double(analyses[i].fwhm_f1) << ','
        << format_double(analyses[i].principal.lambda1) << '\n';
    }
  });
  for (std::size_t i = 0; i < widths.size(); ++i) {
    ctx.log << "jitter " << format_double(widths[i]) << " ns: FWHM(f1) = " << format_double(analyses[i].fwhm_f1)
            << " ns\n";
  }
}

herald::Calibration calibrate(Context& ctx) {
  const auto cfg = with_width(ctx.settings.herald, ctx.settings.sweep_widths_ns.front());
  const auto cal = herald::calibrate_efficiency(ctx.settings.target_w_origin, cfg);
  ctx.out.write_json("calibration.json", {{"reference_width_ns", ctx.settings.sweep_widths_ns.front()},
                                          {"target_w_origin", ctx.settings.target_w_origin},
                                          {"efficiency_eta", cal.eta},
                                          {"residual", cal.residual}});
  ctx.log << "calibrated efficiency_eta = " << format_double(cal.eta) << '\n';
  return cal;
}

void cmd_fig4(Context& ctx) {
  const auto cal = calibrate(ctx);
  auto cfg = ctx.settings.herald;
  cfg.efficiency_eta = cal.eta;
  const auto& widths = ctx.settings.sweep_widths_ns;
  const auto results = herald::jitter_sweep(cfg, widths, ctx.jobs);
  ctx.out.write("fig4.csv", [&](std::ostream& o) {
    o << "width_ns,w_min_dimensionless,w_origin_dimensionless,lambda1_dimensionless\n";
    for (std::size_t i = 0; i < widths.size(); ++i) {
      o << format_double(widths[i]) << ',' << format_double(results[i].w_min_near_origin) << ','
        << format_double(results[i].w_origin) << ',' << format_double(results[i].lambda1) << '\n';
    }
  });
}

// --- homodyne / tomography ------------------------------------------------

struct Acquisition {
  tomography::QuadratureSampleSet samples;
  double pca_overlap = std::nan("");
  double pca_lambda1 = std::nan("");
};

homodyne::RecordSet synthesize(Context& ctx, const herald::HeraldConfig& cfg, std::uint64_t seed,
                               const std::string& stem, homodyne::RecordSet* background) {
  const auto& s = ctx.settings;
  auto records = homodyne::synthesize_records(cfg, s.records, s.n_events, s.phases, seed, ctx.jobs);
  write_records(ctx, stem, records);
  if (background != nullptr && s.background == homodyne::BackgroundModel::kEstimated) {
    *background = homodyne::synthesize_background_records(cfg, s.records, s.n_events, s.phases, seed);
    write_records(ctx, stem + "_background", *background);
  }
  return records;
}

Acquisition acquire(Context& ctx, const herald::HeraldConfig& cfg, std::uint64_t seed, const std::string& stem) {
  const auto& s = ctx.settings;
  homodyne::RecordSet background;
  const auto records = synthesize(ctx, cfg, seed, stem, &background);
  homodyne::PcaOptions pca_options;
  pca_options.background = s.background;
  pca_options.background_factor = s.records.background_factor;
  pca_options.background_records = &background;
  const auto pca = homodyne::covariance_pca(records, pca_options);
  if (pca.no_signal) {
    throw PreconditionError("no principal mode above the noise floor in " + stem);
  }
  const auto analytic = homodyne::record_principal_mode(cfg, s.records);
  Acquisition a;
  a.pca_overlap = std::norm(modes::overlap(pca.mode.f1, analytic.f1));
  a.pca_lambda1 = pca.mode.lambda1;
  ctx.out.write(stem + "_pca_mode.csv", [&](std::ostream& o) {
    modes::write_modes_csv(o, {"f1_pca", "f1_analytic"}, {&pca.mode.f1, &analytic.f1});
  });
  a.samples = homodyne::project_quadratures(records, pca.mode.f1);
  ctx.log << stem << ": PCA overlap with analytic f1 = " << format_double(a.pca_overlap) << '\n';
  return a;
}

tomography::TomographyResult reconstruct(Context& ctx, const tomography::QuadratureSampleSet& samples,
                                         std::uint64_t seed, const std::string& stem) {
  const auto& s = ctx.settings;
  auto result = tomography::mle_reconstruct(samples, s.mle, s.search_radius);
  std::vector<double> boot;
  if (s.bootstrap_resamples > 0) {
    const auto b = tomography::bootstrap_wmin(samples, s.bootstrap_resamples, seed, s.mle, s.search_radius, ctx.jobs);
    result.bootstrap_mean = b.mean;
    result.bootstrap_std = b.std;
    boot = b.w_min;
    if (b.non_converged > 0) {
      ctx.warnings.push_back(stem + ": " + std::to_string(b.non_converged) + " bootstrap fits did not converge");
    }
  }
  ctx.out.write_json(stem + ".json", tomography::to_json(result));
  ctx.out.write(stem + "_wigner.csv", [&](std::ostream& o) { write_wigner_csv(o, result.rho_hat); });
  ctx.out.write(stem + "_pn.csv", [&](std::ostream& o) { write_pn_csv(o, result.pn_dist); });
  ctx.out.write(stem + "_likelihood.csv", [&](std::ostream& o) {
    o << "iteration,log_likelihood_nats\n";
    for (std::size_t i = 0; i < result.log_likelihood.size(); ++i) {
      o << i << ',' << format_double(result.log_likelihood[i]) << '\n';
    }
  });
  if (!boot.empty()) {
    ctx.out.write(stem + "_bootstrap.csv", [&](std::ostream& o) {
      o << "resample,w_min_dimensionless\n";
      for (std::size_t i = 0; i < boot.size(); ++i) o << i << ',' << format_double(boot[i]) << '\n';
    });
  }
  if (!result.converged) {
    ctx.warnings.push_back(stem + ": MLE did not converge in " + std::to_string(result.iterations) +
                           " iterations (last change " + format_double(result.final_change) + ")");
    ctx.exit_code = kExitConvergence;
  }
  ctx.log << stem << ": W_min = " << format_double(result.w_min) << " at ("
          << format_double(result.w_min_x) << ", " << format_double(result.w_min_p) << ")";
  if (result.bootstrap_std) ctx.log << " +- " << format_double(*result.bootstrap_std);
  ctx.log << ", " << result.iterations << " iterations\n";
  return result;
}

void cmd_synthesize(Context& ctx) {
  homodyne::RecordSet background;
  const auto records = synthesize(ctx, ctx.settings.herald, ctx.seed, "records", &background);
  ctx.out.write_json("synthesize.json", {{"n_events", records.records.size()},
                                         {"samples_per_record", records.grid.n_samples},
                                         {"t0_ns", records.grid.t0},
                                         {"dt_ns", records.grid.dt}});
}

void cmd_tomography(Context& ctx) {
  const auto& input = ctx.settings.tomography_input;
  tomography::QuadratureSampleSet samples;
  if (!input.empty()) {
    std::ifstream in(input, std::ios::binary);
    if (!in) throw ConfigError("tomography.input: cannot open '" + input + "'");
    samples = fs::path(input).extension() == ".csv" ? io::read_samples_csv(in) : io::read_samples_binary(in);
  } else {
    samples = acquire(ctx, ctx.settings.herald, ctx.seed, "records").samples;
  }
  ctx.out.write("samples.csv", [&](std::ostream& o) { io::write_samples_csv(o, samples); });
  reconstruct(ctx, samples, ctx.seed, "tomography");
}

void cmd_end2end(Context& ctx) {
  const auto cal = calibrate(ctx);
  const auto& widths = ctx.settings.sweep_widths_ns;
  struct Row {
    double overlap, lambda1, w_origin_model, w_min_model, w_origin_mle, w_min_mle, w_min_std;
  };
  std::vector<Row> rows;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    auto cfg = with_width(ctx.settings.herald, widths[i]);
    cfg.efficiency_eta = cal.eta;
    const auto model = herald::build_heralded_state(cfg);
    const std::uint64_t seed = splitmix64(ctx.seed + i);
    const std::string stem = "width_" + std::to_string(i);
    const auto acq = acquire(ctx, cfg, seed, stem);
    const auto tomo = reconstruct(ctx, acq.samples, seed, stem + "_tomography");
    rows.push_back({acq.pca_overlap, model.lambda1, model.w_origin, model.w_min_near_origin, tomo.w_origin, tomo.w_min,
                    tomo.bootstrap_std.value_or(std::nan(""))});
  }
  ctx.out.write("end2end.csv", [&](std::ostream& o) {
    o << "width_ns,pca_overlap_dimensionless,lambda1_dimensionless,w_origin_model_dimensionless,"
         "w_min_model_dimensionless,w_origin_mle_dimensionless,w_min_mle_dimensionless,w_min_std_dimensionless\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& r = rows[i];
      o << format_double(widths[i]) << ',' << format_double(r.overlap) << ',' << format_double(r.lambda1) << ','
        << format_double(r.w_origin_model) << ',' << format_double(r.w_min_model) << ','
        << format_double(r.w_origin_mle) << ',' << format_double(r.w_min_mle) << ',' << format_double(r.w_min_std)
        << '\n';
    }
  });
}

json load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open manifest " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("manifest " + path.string() + ": " + e.what());
  }
}

}  // namespace

std::string_view to_string(Command c) {
  for (const auto& [cmd, name] : kCommandNames) {
    if (cmd == c) return name;
  }
  return "unknown";
}

Command command_from_string(std::string_view name) {
  for (const auto& [cmd, n] : kCommandNames) {
    if (n == name) return cmd;
  }
  throw ConfigError("unknown command '" + std::string(name) + "'");
}

fs::path default_output_dir(Command c) {
  const char* root = std::getenv("HERALDSIM_OUT_ROOT");
  const fs::path base = (root != nullptr && *root != '\0') ? fs::path(root) : fs::path("heraldsim-out");
  return base / std::string(to_string(c));
}

RunResult run(const ExperimentSpec& spec, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  Command command = spec.command;
  std::uint64_t seed = spec.seed.value_or(kDefaultSeed);
  config::Config cfg;
  if (spec.manifest_path) {
    const auto m = load_manifest(*spec.manifest_path);
    try {
      command = command_from_string(m.at("command").get<std::string>());
      if (!spec.seed) seed = m.at("seed").get<std::uint64_t>();
      cfg = config::Config::from_json(m.at("config"));
    } catch (const json::exception& e) {
      throw ConfigError("manifest " + spec.manifest_path->string() + ": " + e.what());
    }
  }
  if (spec.config_path) cfg.load_file(*spec.config_path);
  for (const auto& o : spec.overrides) cfg.apply_override(o);

  RunResult result;
  const auto settings = config::resolve(cfg);
  result.warnings = config::precheck(settings);

  if (command == Command::kValidate) {
    config::write_normalized(log, cfg);
    for (const auto& w : result.warnings) log << "warning: " << w << '\n';
    return result;
  }

  result.output_dir = spec.output_dir.empty() ? default_output_dir(command) : spec.output_dir;
  Outputs out(result.output_dir);
  Context ctx{settings, seed, std::max(1u, spec.jobs), log, out, result.warnings};
  switch (command) {
    case Command::kModes:
      cmd_modes(ctx);
      break;
    case Command::kSweep:
      cmd_sweep(ctx);
      break;
    case Command::kSynthesize:
      cmd_synthesize(ctx);
      break;
    case Command::kTomography:
      cmd_tomography(ctx);
      break;
    case Command::kReproduceFig3c:
      cmd_fig3c(ctx);
      break;
    case Command::kReproduceFig4:
      cmd_fig4(ctx);
      break;
    case Command::kEnd2end:
      cmd_end2end(ctx);
      break;
    case Command::kValidate:
      break;
  }
  result.exit_code = ctx.exit_code;

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  json manifest{
      {"tool", "heraldsim"},
      {"version", HERALDSIM_VERSION},
      {"command", std::string(to_string(command))},
      {"seed", seed},
      {"jobs", ctx.jobs},
      {"config", cfg.to_json()},
      {"warnings", result.warnings},
      {"outputs", out.names()},
      {"exit_code", result.exit_code},
      {"wall_time_s", wall},
      {"libraries", {{"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)},
                     {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                           std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                           std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}},
  };
  out.write_json("manifest.json", manifest);
  result.outputs = out.names();
  for (const auto& w : result.warnings) log << "warning: " << w << '\n';
  return result;
}

int run_and_report(const ExperimentSpec& spec, std::ostream& log, std::ostream& err) {
  try {
    return run(spec, log).exit_code;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const PreconditionError& e) {
    err << "precondition error: " << e.what() << '\n';
    return kExitPrecondition;
  } catch (const ConvergenceError& e) {
    err << "convergence error: " << e.what() << '\n';
    return kExitConvergence;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace heraldsim::runner
