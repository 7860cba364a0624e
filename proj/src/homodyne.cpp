#include "heraldsim/homodyne.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include "heraldsim/errors.hpp"
#include "heraldsim/util.hpp"

namespace heraldsim::homodyne {

namespace {

constexpr std::size_t kMinPcaRecords = 100;

double uniform01(std::mt19937_64& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

void require_phases(std::span<const double> phases) {
  if (phases.empty()) {
    throw PreconditionError("at least one local-oscillator phase is required");
  }
  for (double theta : phases) {
    if (!std::isfinite(theta)) throw PreconditionError("phases must be finite");
  }
}

// Real unit vectors (sum u^2 = 1) of the shifted packets on the record samples.
struct RecordBasis {
  modes::ShiftedModes shifted;
  Eigen::MatrixXd unit;    // columns
  std::vector<double> cdf;
};

RecordBasis record_basis(const herald::HeraldConfig& cfg, const RecordOptions& options) {
  cfg.validate();
  const auto f = herald::heralded_wavepacket(cfg);
  const auto j = herald::make_jitter(cfg.jitter, cfg.grid);
  RecordBasis basis{modes::shifted_modes(f, j, options.layout(cfg.grid), options.max_coverage_loss), {}, {}};
  if (basis.shifted.modes.imag().cwiseAbs().maxCoeff() > 1e-12) {
    throw PreconditionError("homodyne synthesis needs a real temporal mode");
  }
  basis.unit = basis.shifted.modes.real() * std::sqrt(basis.shifted.grid.dt);
  double acc = 0.0;
  for (double p : basis.shifted.probability) {
    acc += p;
    basis.cdf.push_back(acc);
  }
  basis.cdf.back() = 1.0;
  return basis;
}

void require_background_factor(double factor) {
  if (!std::isfinite(factor) || factor <= 0.0) {
    throw PreconditionError("background factor must be positive");
  }
}

}  // namespace

std::vector<double> default_phases() {
  std::vector<double> phases;
  for (int k = 0; k < 6; ++k) phases.push_back(k * std::numbers::pi / 6.0);
  return phases;
}

modes::SampleLayout RecordOptions::layout(const modes::TimeGrid& fine) const {
  return modes::SampleLayout::window(fine, t_start_ns, t_end_ns, step_ns);
}

// ---------------------------------------------------------------------------

QuadratureSampler::QuadratureSampler(const fock::FockDensity& rho, double theta, double x_max, std::size_t points)
    : x_(points), cdf_(points) {
  if (points < 3 || !(x_max > 0.0)) {
    throw PreconditionError("quadrature sampler needs >= 3 points and x_max > 0");
  }
  std::vector<double> pdf(points);
  const double dx = 2.0 * x_max / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) {
    x_[i] = -x_max + dx * static_cast<double>(i);
    pdf[i] = fock::quadrature_pdf(rho, theta, x_[i]);
  }
  cdf_[0] = 0.0;
  for (std::size_t i = 1; i < points; ++i) {
    cdf_[i] = cdf_[i - 1] + 0.5 * dx * (pdf[i] + pdf[i - 1]);
  }
  const double total = cdf_.back();
  if (!(total > 0.0)) {
    throw PreconditionError("quadrature distribution has no weight on the sampling range");
  }
  for (double& c : cdf_) c /= total;
}

double QuadratureSampler::quantile(double u) const {
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  if (it == cdf_.begin()) return x_.front();
  if (it == cdf_.end()) return x_.back();
  const auto i = static_cast<std::size_t>(it - cdf_.begin());
  const double c0 = cdf_[i - 1];
  const double c1 = cdf_[i];
  const double frac = c1 > c0 ? (u - c0) / (c1 - c0) : 0.5;
  return x_[i - 1] + frac * (x_[i] - x_[i - 1]);
}

// ---------------------------------------------------------------------------

RecordSet synthesize_records(const herald::HeraldConfig& cfg, const RecordOptions& options, std::size_t n_events,
                             std::span<const double> phases, std::uint64_t seed, unsigned jobs) {
  require_phases(phases);
  require_background_factor(options.background_factor);
  const RecordBasis basis = record_basis(cfg, options);
  const auto state = herald::event_state(cfg);
  std::vector<QuadratureSampler> samplers;
  samplers.reserve(phases.size());
  for (double theta : phases) samplers.emplace_back(state, theta);

  RecordSet set{basis.shifted.grid, std::vector<HomodyneRecord>(n_events)};
  const double dt = set.grid.dt;
  const double sigma = std::sqrt(0.5 * options.background_factor);
  const auto m = basis.unit.rows();

  parallel_for(n_events, jobs, [&](std::size_t i) {
    std::mt19937_64 rng(derive_seed(seed, SeedStream::kSynthesis, i));
    const std::size_t phase_index = i % phases.size();
    const double u_shift = uniform01(rng);
    const auto column = static_cast<Eigen::Index>(
        std::min<std::size_t>(std::upper_bound(basis.cdf.begin(), basis.cdf.end(), u_shift) - basis.cdf.begin(),
                              basis.cdf.size() - 1));
    const double x_mode = samplers[phase_index].quantile(uniform01(rng));

    std::normal_distribution<double> noise(0.0, sigma);
    Eigen::VectorXd xi(m);
    for (Eigen::Index k = 0; k < m; ++k) xi[k] = noise(rng);
    const auto e = basis.unit.col(column);
    xi -= e * e.dot(xi);
    xi += e * x_mode;

    HomodyneRecord& rec = set.records[i];
    rec.event_id = i;
    rec.theta = phases[phase_index];
    rec.shift_truth = basis.shifted.shift_ns[static_cast<std::size_t>(column)];
    rec.samples.resize(static_cast<std::size_t>(m));
    for (Eigen::Index k = 0; k < m; ++k) rec.samples[static_cast<std::size_t>(k)] = xi[k] / std::sqrt(dt);
  });
  return set;
}

RecordSet synthesize_background_records(const herald::HeraldConfig& cfg, const RecordOptions& options,
                                        std::size_t n_events, std::span<const double> phases, std::uint64_t seed) {
  require_phases(phases);
  require_background_factor(options.background_factor);
  cfg.grid.validate();
  const auto grid = options.layout(cfg.grid).output_grid(cfg.grid);
  RecordSet set{grid, std::vector<HomodyneRecord>(n_events)};
  const double scale = std::sqrt(0.5 * options.background_factor / grid.dt);
  for (std::size_t i = 0; i < n_events; ++i) {
    std::mt19937_64 rng(derive_seed(seed, SeedStream::kBackground, i));
    std::normal_distribution<double> noise(0.0, scale);
    HomodyneRecord& rec = set.records[i];
    rec.event_id = i;
    rec.theta = phases[i % phases.size()];
    rec.samples.resize(grid.n_samples);
    for (double& v : rec.samples) v = noise(rng);
  }
  return set;
}

modes::PrincipalModeResult record_principal_mode(const herald::HeraldConfig& cfg, const RecordOptions& options) {
  cfg.validate();
  const auto f = herald::heralded_wavepacket(cfg);
  const auto j = herald::make_jitter(cfg.jitter, cfg.grid);
  return modes::principal_mode(modes::jitter_kernel(f, j, options.layout(cfg.grid), options.max_coverage_loss));
}

// ---------------------------------------------------------------------------

namespace {

Eigen::MatrixXd sample_covariance(const RecordSet& set) {
  const auto n = static_cast<Eigen::Index>(set.records.size());
  const auto m = static_cast<Eigen::Index>(set.grid.n_samples);
  Eigen::MatrixXd x(n, m);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& s = set.records[static_cast<std::size_t>(r)].samples;
    if (s.size() != static_cast<std::size_t>(m)) {
      throw GridError("record " + std::to_string(r) + " does not match the record grid");
    }
    x.row(r) = Eigen::Map<const Eigen::RowVectorXd>(s.data(), m);
  }
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(m, m);
  cov.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
  cov = cov.selfadjointView<Eigen::Lower>();
  return cov / static_cast<double>(n - 1);
}

}  // namespace

PcaResult covariance_pca(const RecordSet& records, const PcaOptions& options) {
  if (records.records.size() < kMinPcaRecords) {
    throw PreconditionError("covariance PCA needs at least " + std::to_string(kMinPcaRecords) + " records, got " +
                            std::to_string(records.records.size()));
  }
  require_background_factor(options.background_factor);
  const double dt = records.grid.dt;
  const auto m = static_cast<double>(records.grid.n_samples);
  Eigen::MatrixXd excess = sample_covariance(records);
  const double sigma2 = 0.5 * options.background_factor;
  // largest white-noise eigenvalue: Marchenko-Pastur edge plus four Tracy-Widom scales
  auto mp_excess = [&](double n) {
    const double a = std::sqrt(n - 1.0) + std::sqrt(m);
    const double edge = a * a / n;
    const double tw = a * std::cbrt(1.0 / std::sqrt(n - 1.0) + 1.0 / std::sqrt(m)) / n;
    return sigma2 * (edge + 4.0 * tw - 1.0);
  };
  double floor = mp_excess(static_cast<double>(records.records.size()));
  if (options.background == BackgroundModel::kKnownVacuum) {
    excess.diagonal().array() -= options.background_factor / (2.0 * dt);
  } else {
    if (options.background_records == nullptr || options.background_records->records.size() < kMinPcaRecords) {
      throw PreconditionError("estimated background needs at least " + std::to_string(kMinPcaRecords) +
                              " background records");
    }
    if (!(options.background_records->grid == records.grid)) {
      throw GridError("background records use a different grid");
    }
    excess -= sample_covariance(*options.background_records);
    floor += mp_excess(static_cast<double>(options.background_records->records.size()));
  }
  PcaResult result;
  result.mode = modes::principal_mode_of_operator((excess * dt).cast<std::complex<double>>(), records.grid);
  result.noise_floor = floor;
  result.no_signal = result.mode.spectrum[0] <= floor;
  result.n_records = records.records.size();
  return result;
}

tomography::QuadratureSampleSet project_quadratures(const RecordSet& records, const modes::ModeFunction& f1) {
  if (!(f1.grid == records.grid)) {
    throw GridError("projection mode and records use different grids");
  }
  const Eigen::VectorXd weights = f1.values.real() * records.grid.dt;
  tomography::QuadratureSampleSet out;
  out.source = "projection of homodyne records onto a temporal mode";
  std::map<double, std::size_t> index_of;
  for (const auto& rec : records.records) {
    if (rec.samples.size() != records.grid.n_samples) {
      throw GridError("record " + std::to_string(rec.event_id) + " does not match the record grid");
    }
    const double x = weights.dot(Eigen::Map<const Eigen::VectorXd>(rec.samples.data(), weights.size()));
    auto [it, inserted] = index_of.try_emplace(rec.theta, out.phases.size());
    if (inserted) out.phases.push_back({rec.theta, {}});
    out.phases[it->second].x.push_back(x);
  }
  return out;
}

tomography::QuadratureSampleSet sample_quadratures(const fock::FockDensity& rho, std::span<const double> phases,
                                                   std::size_t per_phase, std::uint64_t seed) {
  require_phases(phases);
  tomography::QuadratureSampleSet out;
  out.source = "direct single-mode sampling";
  for (std::size_t p = 0; p < phases.size(); ++p) {
    const QuadratureSampler sampler(rho, phases[p]);
    std::mt19937_64 rng(derive_seed(seed, SeedStream::kDirectSampling, p));
    tomography::PhaseSamples ps{phases[p], std::vector<double>(per_phase)};
    for (double& x : ps.x) x = sampler.quantile(uniform01(rng));
    out.phases.push_back(std::move(ps));
  }
  return out;
}

}  // namespace heraldsim::homodyne
