#include "heraldsim/wigner.hpp"

#include <cmath>
#include <numbers>

#include "heraldsim/errors.hpp"

namespace heraldsim::fock {

namespace {

// Laguerre-recursion evaluation of W at alpha = (x + i p)/sqrt(2); `work`
// holds the running column of Wigner matrix elements.
double wigner_at(const Eigen::MatrixXcd& rho, Complex alpha, std::vector<Complex>& work) {
  const auto n = rho.rows();
  work.assign(static_cast<std::size_t>(n), 0.0);
  work[0] = std::exp(-2.0 * std::norm(alpha)) / std::numbers::pi;
  double w = rho(0, 0).real() * work[0].real();
  for (Eigen::Index k = 1; k < n; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    work[kk] = 2.0 * alpha * work[kk - 1] / std::sqrt(static_cast<double>(k));
    w += 2.0 * (rho(0, k) * work[kk]).real();
  }
  for (Eigen::Index m = 1; m < n; ++m) {
    const auto mm = static_cast<std::size_t>(m);
    const double sm = std::sqrt(static_cast<double>(m));
    Complex temp = work[mm];
    work[mm] = (2.0 * std::conj(alpha) * temp - sm * work[mm - 1]) / sm;
    w += (rho(m, m) * work[mm]).real();
    for (Eigen::Index k = m + 1; k < n; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      const Complex next = (2.0 * alpha * work[kk - 1] - sm * temp) / std::sqrt(static_cast<double>(k));
      temp = work[kk];
      work[kk] = next;
      w += 2.0 * (rho(m, k) * work[kk]).real();
    }
  }
  return w;
}

}  // namespace

double WignerGrid::integral() const {
  if (x_axis.size() < 2 || p_axis.size() < 2) {
    return 0.0;
  }
  const double dx = (x_axis.back() - x_axis.front()) / static_cast<double>(x_axis.size() - 1);
  const double dp = (p_axis.back() - p_axis.front()) / static_cast<double>(p_axis.size() - 1);
  return values.sum() * dx * dp;
}

std::vector<double> linspace(double lo, double hi, std::size_t count) {
  std::vector<double> axis(count);
  if (count == 1) {
    axis[0] = lo;
    return axis;
  }
  for (std::size_t i = 0; i < count; ++i) {
    axis[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  return axis;
}

std::vector<double> default_phase_space_axis() { return linspace(-6.0, 6.0, 121); }

WignerGrid wigner(const FockDensity& rho, std::span<const double> x_axis, std::span<const double> p_axis) {
  for (auto axis : {x_axis, p_axis}) {
    for (std::size_t i = 0; i < axis.size(); ++i) {
      if (!std::isfinite(axis[i]) || (i > 0 && !(axis[i] > axis[i - 1]))) {
        throw PreconditionError("Wigner axes must be finite and strictly increasing");
      }
    }
  }
  WignerGrid grid;
  grid.x_axis.assign(x_axis.begin(), x_axis.end());
  grid.p_axis.assign(p_axis.begin(), p_axis.end());
  grid.values.resize(static_cast<Eigen::Index>(x_axis.size()), static_cast<Eigen::Index>(p_axis.size()));
  std::vector<Complex> work;
  for (std::size_t i = 0; i < x_axis.size(); ++i) {
    for (std::size_t j = 0; j < p_axis.size(); ++j) {
      const Complex alpha = Complex(x_axis[i], p_axis[j]) / std::numbers::sqrt2;
      grid.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          wigner_at(rho.matrix(), alpha, work);
    }
  }
  return grid;
}

double wigner_value(const FockDensity& rho, double x, double p) {
  std::vector<Complex> work;
  return wigner_at(rho.matrix(), Complex(x, p) / std::numbers::sqrt2, work);
}

double wigner_origin_parity(const FockDensity& rho) {
  double sum = 0.0;
  for (std::size_t n = 0; n < rho.n_cut(); ++n) {
    sum += (n % 2 == 0 ? 1.0 : -1.0) * rho(n, n).real();
  }
  return sum / std::numbers::pi;
}

}  // namespace heraldsim::fock
