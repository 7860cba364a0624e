#pragma once

#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "heraldsim/fock.hpp"

namespace heraldsim::fock {

/// hbar = 1, vacuum variance 1/2, unit integral, W(0,0) = (1/pi) sum_n (-1)^n rho_nn.
inline constexpr std::string_view kWignerConvention =
    "hbar=1; vacuum variance 1/2; unit integral; W(0,0)=(1/pi)*sum_n (-1)^n rho_nn";

struct WignerGrid {
  std::vector<double> x_axis;
  std::vector<double> p_axis;
  Eigen::MatrixXd values;  // values(i, j) = W(x_axis[i], p_axis[j])
  std::string_view convention = kWignerConvention;

  /// Riemann sum of values times cell area (uniform axes assumed).
  double integral() const;
  double min() const { return values.minCoeff(); }
  double max() const { return values.maxCoeff(); }
};

/// Evenly spaced axis with `count` points on [lo, hi].
std::vector<double> linspace(double lo, double hi, std::size_t count);

/// Default phase-space axis: [-6, 6] with 121 points.
std::vector<double> default_phase_space_axis();

WignerGrid wigner(const FockDensity& rho, std::span<const double> x_axis, std::span<const double> p_axis);

double wigner_value(const FockDensity& rho, double x, double p);

double wigner_origin_parity(const FockDensity& rho);

}  // namespace heraldsim::fock
