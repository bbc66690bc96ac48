#pragma once

#include <cstddef>
#include <functional>

namespace sridge {

struct QuadratureResult {
  double value = 0;
  double error_estimate = 0;
  std::size_t subdivisions = 0;
};

inline constexpr double kDefaultQuadratureTolerance = 1e-10;
inline constexpr std::size_t kDefaultMaxPanels = 10000;

/// Globally adaptive Gauss-Kronrod (7/15) integration of f over [a, b].
/// The panel with the largest error estimate is bisected until the summed
/// estimate is within max(tol, rel_tol * |value|). Throws IntegrationError
/// naming the worst panel when max_panels is reached first.
QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           double tol = kDefaultQuadratureTolerance,
                           std::size_t max_panels = kDefaultMaxPanels, double rel_tol = 0);

}  // namespace sridge
