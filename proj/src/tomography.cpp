#include "heraldsim/tomography.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "heraldsim/errors.hpp"
#include "heraldsim/util.hpp"
#include "heraldsim/wigner.hpp"

namespace heraldsim::tomography {

namespace {

constexpr std::array<double, 4> kGaussNodes{0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                            0.9602898564975363};
constexpr std::array<double, 4> kGaussWeights{0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                              0.1012285362903763};

// Running integrals C_k = int_{-L}^{x_k} psi psi^T dx on the lattice
// x_k = -L + k w, stored as flattened n x n row blocks.
class OverlapTable {
 public:
  OverlapTable(std::size_t n_cut, double width, double half_range)
      : n_(n_cut), width_(width), lo_(-half_range) {
    const auto steps = static_cast<std::size_t>(std::ceil(2.0 * half_range / width));
    const auto nn = static_cast<Eigen::Index>(n_ * n_);
    cumulative_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(steps + 1), nn);
    std::vector<double> psi(n_);
    Eigen::MatrixXd segment(n_, n_);
    for (std::size_t k = 0; k < steps; ++k) {
      const double a = lo_ + width_ * static_cast<double>(k);
      const double mid = a + 0.5 * width_;
      segment.setZero();
      for (std::size_t q = 0; q < 8; ++q) {
        const double node = (q < 4 ? -1.0 : 1.0) * kGaussNodes[q % 4];
        const double weight = kGaussWeights[q % 4] * 0.5 * width_;
        fock::oscillator_wavefunctions(mid + 0.5 * width_ * node, psi);
        const Eigen::Map<const Eigen::VectorXd> v(psi.data(), static_cast<Eigen::Index>(n_));
        segment.noalias() += weight * (v * v.transpose());
      }
      cumulative_.row(static_cast<Eigen::Index>(k + 1)) =
          cumulative_.row(static_cast<Eigen::Index>(k)) + Eigen::Map<const Eigen::RowVectorXd>(segment.data(), nn);
    }
  }

  std::size_t lattice_size() const { return static_cast<std::size_t>(cumulative_.rows()); }
  double lattice_point(std::size_t k) const { return lo_ + width_ * static_cast<double>(k); }
  std::size_t lattice_index(double x) const {
    const double pos = std::floor((x - lo_) / width_);
    return static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(lattice_size() - 2)));
  }
  Eigen::RowVectorXd between(std::size_t lo, std::size_t hi) const {
    return cumulative_.row(static_cast<Eigen::Index>(hi)) - cumulative_.row(static_cast<Eigen::Index>(lo));
  }

 private:
  std::size_t n_;
  double width_;
  double lo_;
  Eigen::MatrixXd cumulative_;
};

// Bin projectors of one phase: row i of `overlaps` is vec(int_bin psi psi^T).
struct PhaseBins {
  double theta = 0.0;
  Eigen::MatrixXd overlaps;
  Eigen::VectorXd counts;
};

PhaseBins bin_phase(const PhaseSamples& samples, const OverlapTable& table, std::size_t min_count) {
  // counts on lattice cells, merged left to right until each bin holds min_count
  std::vector<std::size_t> cell_counts(table.lattice_size() - 1, 0);
  for (double x : samples.x) ++cell_counts[table.lattice_index(x)];
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // lattice index ranges
  std::vector<double> counts;
  std::size_t start = 0;
  std::size_t acc = 0;
  for (std::size_t c = 0; c < cell_counts.size(); ++c) {
    acc += cell_counts[c];
    if (acc >= min_count) {
      edges.emplace_back(start, c + 1);
      counts.push_back(static_cast<double>(acc));
      start = c + 1;
      acc = 0;
    }
  }
  if (edges.empty()) {
    edges.emplace_back(0, cell_counts.size());
    counts.push_back(static_cast<double>(acc));
  } else {
    edges.back().second = cell_counts.size();
    counts.back() += static_cast<double>(acc);
  }
  edges.front().first = 0;

  PhaseBins bins;
  bins.theta = samples.theta;
  bins.overlaps.resize(static_cast<Eigen::Index>(edges.size()), table.between(0, 1).size());
  bins.counts.resize(static_cast<Eigen::Index>(edges.size()));
  for (std::size_t i = 0; i < edges.size(); ++i) {
    bins.overlaps.row(static_cast<Eigen::Index>(i)) = table.between(edges[i].first, edges[i].second);
    bins.counts[static_cast<Eigen::Index>(i)] = counts[i];
  }
  return bins;
}

Eigen::VectorXcd phase_factors(double theta, Eigen::Index n) {
  Eigen::VectorXcd d(n);
  for (Eigen::Index k = 0; k < n; ++k) d[k] = std::polar(1.0, -static_cast<double>(k) * theta);
  return d;
}

struct Likelihood {
  double value = 0.0;
  std::vector<Eigen::VectorXd> probabilities;  // per phase
};

Likelihood evaluate(const Eigen::MatrixXcd& rho, const std::vector<PhaseBins>& phases,
                    const std::vector<Eigen::VectorXcd>& factors) {
  Likelihood out;
  const Eigen::Index n = rho.rows();
  for (std::size_t p = 0; p < phases.size(); ++p) {
    const auto& d = factors[p];
    // Re(D rho D^dagger), flattened column-major
    const Eigen::MatrixXd rotated = (d.asDiagonal() * rho * d.conjugate().asDiagonal()).real();
    Eigen::VectorXd prob = phases[p].overlaps * Eigen::Map<const Eigen::VectorXd>(rotated.data(), n * n);
    prob = prob.cwiseMax(1e-300);
    out.value += (phases[p].counts.array() * prob.array().log()).sum();
    out.probabilities.push_back(std::move(prob));
  }
  return out;
}

Eigen::MatrixXcd build_r(const Likelihood& lik, const std::vector<PhaseBins>& phases,
                         const std::vector<Eigen::VectorXcd>& factors, double total, Eigen::Index n) {
  Eigen::MatrixXcd r = Eigen::MatrixXcd::Zero(n, n);
  for (std::size_t p = 0; p < phases.size(); ++p) {
    const Eigen::VectorXd w = phases[p].counts.cwiseQuotient(lik.probabilities[p]);
    Eigen::VectorXd flat = phases[p].overlaps.transpose() * w;
    const Eigen::Map<const Eigen::MatrixXd> s(flat.data(), n, n);
    const auto& d = factors[p];
    r.noalias() += d.conjugate().asDiagonal() * s.cast<std::complex<double>>() * d.asDiagonal();
  }
  return r / total;
}

Eigen::MatrixXcd sandwich(const Eigen::MatrixXcd& m, const Eigen::MatrixXcd& rho) {
  Eigen::MatrixXcd out = m * rho * m.adjoint();
  out = 0.5 * (out + out.adjoint()).eval();
  return out / out.trace().real();
}

}  // namespace

std::size_t QuadratureSampleSet::total() const {
  std::size_t n = 0;
  for (const auto& p : phases) n += p.x.size();
  return n;
}

void QuadratureSampleSet::validate() const {
  std::set<double> distinct;
  for (const auto& p : phases) {
    if (p.x.empty()) {
      throw PreconditionError("phase " + format_double(p.theta) + " has no samples");
    }
    for (double x : p.x) {
      if (!std::isfinite(x)) throw PreconditionError("quadrature samples must be finite");
    }
    distinct.insert(p.theta);
  }
  if (distinct.size() < 2) {
    throw PreconditionError("tomography needs at least two distinct phases");
  }
}

TomographyResult mle_reconstruct(const QuadratureSampleSet& samples, const MleOptions& options, double search_radius) {
  samples.validate();
  if (options.n_cut < 1 || options.min_bin_count < 1 || !(options.base_bin_width > 0.0) || !(options.tol > 0.0)) {
    throw PreconditionError("invalid MLE options");
  }
  double extent = 15.0;
  for (const auto& p : samples.phases) {
    for (double x : p.x) extent = std::max(extent, std::abs(x) + 1.0);
  }
  const OverlapTable table(options.n_cut, options.base_bin_width, extent);
  std::vector<PhaseBins> phases;
  std::vector<Eigen::VectorXcd> factors;
  const auto n = static_cast<Eigen::Index>(options.n_cut);
  TomographyResult result;
  for (const auto& p : samples.phases) {
    phases.push_back(bin_phase(p, table, options.min_bin_count));
    factors.push_back(phase_factors(p.theta, n));
    result.bin_count += static_cast<std::size_t>(phases.back().counts.size());
  }
  const auto total = static_cast<double>(samples.total());

  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Identity(n, n) / static_cast<double>(n);
  Likelihood lik = evaluate(rho, phases, factors);
  result.log_likelihood.push_back(lik.value);
  const Eigen::MatrixXcd identity = Eigen::MatrixXcd::Identity(n, n);

  for (std::size_t it = 0; it < options.max_iter; ++it) {
    const Eigen::MatrixXcd r = build_r(lik, phases, factors, total, n);
    const double slack = 1e-12 * std::max(1.0, std::abs(lik.value));
    Eigen::MatrixXcd next = sandwich(r, rho);
    Likelihood next_lik = evaluate(next, phases, factors);
    if (next_lik.value < lik.value - slack) {
      ++result.diluted_steps;
      double eps = 0.5;
      for (; eps > 1e-12; eps *= 0.5) {
        next = sandwich(identity + eps * r, rho);
        next_lik = evaluate(next, phases, factors);
        if (next_lik.value >= lik.value - slack) break;
      }
      if (eps <= 1e-12) {
        result.final_change = 0.0;
        result.converged = true;
        break;
      }
    }
    result.final_change = (next - rho).cwiseAbs().maxCoeff();
    rho = std::move(next);
    lik = std::move(next_lik);
    result.log_likelihood.push_back(lik.value);
    result.iterations = it + 1;
    if (result.final_change < options.tol) {
      result.converged = true;
      break;
    }
  }

  result.rho_hat = fock::FockDensity(rho);
  result.w_origin = fock::wigner_origin_parity(result.rho_hat);
  const auto minimum = wigner_min_near_origin(result.rho_hat, search_radius);
  result.w_min = minimum.value;
  result.w_min_x = minimum.x;
  result.w_min_p = minimum.p;
  result.pn_dist = fock::photon_number_distribution(result.rho_hat);
  return result;
}

double WignerMinimum::distance() const { return std::hypot(x, p); }

WignerMinimum wigner_min_near_origin(const fock::FockDensity& rho, double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw PreconditionError("search radius must be positive");
  }
  constexpr int kGrid = 41;
  const double r2 = radius * radius;
  WignerMinimum best{fock::wigner_value(rho, 0.0, 0.0), 0.0, 0.0};
  const double h = 2.0 * radius / (kGrid - 1);
  for (int i = 0; i < kGrid; ++i) {
    for (int k = 0; k < kGrid; ++k) {
      const double x = -radius + h * i;
      const double p = -radius + h * k;
      if (x * x + p * p > r2) continue;
      const double w = fock::wigner_value(rho, x, p);
      if (w < best.value) best = {w, x, p};
    }
  }
  constexpr std::array<std::array<double, 2>, 8> kDirections{
      {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {0.7071067811865476, 0.7071067811865476},
       {-0.7071067811865476, 0.7071067811865476}, {0.7071067811865476, -0.7071067811865476},
       {-0.7071067811865476, -0.7071067811865476}}};
  for (double step = h; step > 1e-9;) {
    bool moved = false;
    for (const auto& d : kDirections) {
      const double x = best.x + step * d[0];
      const double p = best.p + step * d[1];
      if (x * x + p * p > r2) continue;
      const double w = fock::wigner_value(rho, x, p);
      if (w < best.value) {
        best = {w, x, p};
        moved = true;
      }
    }
    if (!moved) step *= 0.5;
  }
  return best;
}

BootstrapResult bootstrap_wmin(const QuadratureSampleSet& samples, std::size_t n_resamples, std::uint64_t seed,
                               const MleOptions& options, double search_radius, unsigned jobs) {
  samples.validate();
  if (n_resamples < kMinBootstrapResamples) {
    throw PreconditionError("bootstrap needs at least " + std::to_string(kMinBootstrapResamples) + " resamples, got " +
                            std::to_string(n_resamples));
  }
  BootstrapResult out;
  out.w_min.resize(n_resamples);
  std::vector<char> converged(n_resamples, 0);
  parallel_for(n_resamples, jobs, [&](std::size_t i) {
    std::mt19937_64 rng(derive_seed(seed, SeedStream::kBootstrap, i));
    QuadratureSampleSet resampled;
    resampled.source = samples.source;
    for (const auto& phase : samples.phases) {
      std::uniform_int_distribution<std::size_t> pick(0, phase.x.size() - 1);
      PhaseSamples ps{phase.theta, std::vector<double>(phase.x.size())};
      for (double& x : ps.x) x = phase.x[pick(rng)];
      resampled.phases.push_back(std::move(ps));
    }
    const auto result = mle_reconstruct(resampled, options, search_radius);
    out.w_min[i] = result.w_min;
    converged[i] = result.converged ? 1 : 0;
  });
  double sum = 0.0;
  for (double w : out.w_min) sum += w;
  out.mean = sum / static_cast<double>(n_resamples);
  double var = 0.0;
  for (double w : out.w_min) var += (w - out.mean) * (w - out.mean);
  out.std = std::sqrt(var / static_cast<double>(n_resamples - 1));
  for (char c : converged) out.non_converged += c ? 0 : 1;
  return out;
}

nlohmann::json to_json(const TomographyResult& result) {
  nlohmann::json j{
      {"rho_hat", fock::to_json(result.rho_hat)},
      {"log_likelihood", result.log_likelihood},
      {"iterations", result.iterations},
      {"diluted_steps", result.diluted_steps},
      {"converged", result.converged},
      {"final_change", result.final_change},
      {"bin_count", result.bin_count},
      {"w_origin", result.w_origin},
      {"w_min", result.w_min},
      {"w_min_location", {result.w_min_x, result.w_min_p}},
      {"w_min_distance", std::hypot(result.w_min_x, result.w_min_p)},
      {"pn_dist", result.pn_dist},
  };
  j["bootstrap_mean"] = result.bootstrap_mean ? nlohmann::json(*result.bootstrap_mean) : nlohmann::json(nullptr);
  j["bootstrap_std"] = result.bootstrap_std ? nlohmann::json(*result.bootstrap_std) : nlohmann::json(nullptr);
  return j;
}

}  // namespace heraldsim::tomography
