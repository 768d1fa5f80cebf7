#pragma once

#include <cmath>
#include <numbers>

#include "fkpf/core.hpp"

namespace fkpf {

/// Axis-aligned bivariate Gaussian.
struct GaussianComponent {
  StateVec mean;
  StateVec var{1e-2, 1e-2};

  double log_pdf(const StateVec& s) const {
    const double dx = s.x - mean.x;
    const double dy = s.y - mean.y;
    return -0.5 * (dx * dx / var.x + dy * dy / var.y) -
           std::log(2.0 * std::numbers::pi * std::sqrt(var.x * var.y));
  }

  double pdf(const StateVec& s) const { return std::exp(log_pdf(s)); }

  friend bool operator==(const GaussianComponent&, const GaussianComponent&) = default;
};

}  // namespace fkpf
