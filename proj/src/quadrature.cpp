#include "sridge/quadrature.hpp"

#include "sridge/core.hpp"

#include <array>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <queue>
#include <string>
#include <vector>

namespace sridge {
namespace {

constexpr std::array<double, 8> kKronrodNodes = {
    0.0,
    2.07784955007898468e-01,
    4.05845151377397167e-01,
    5.86087235467691130e-01,
    7.41531185599394440e-01,
    8.64864423359769073e-01,
    9.49107912342758525e-01,
    9.91455371120812639e-01};

constexpr std::array<double, 8> kKronrodWeights = {
    2.09482141084727828e-01,
    2.04432940075298892e-01,
    1.90350578064785410e-01,
    1.69004726639267903e-01,
    1.40653259715525919e-01,
    1.04790010322250184e-01,
    6.30920926299785533e-02,
    2.29353220105292250e-02};

// Gauss nodes are the Kronrod nodes at even indices.
constexpr std::array<double, 4> kGaussWeights = {
    4.17959183673469388e-01,
    3.81830050505118945e-01,
    2.79705391489276668e-01,
    1.29484966168869693e-01};

struct Panel {
  double lo;
  double hi;
  double value;
  double error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

Panel evaluate(const std::function<double(double)>& f, double lo, double hi) {
  const double c = 0.5 * (lo + hi);
  const double h = 0.5 * (hi - lo);
  const double f0 = f(c);
  if (!std::isfinite(f0)) throw IntegrationError("integrand is not finite", lo, hi);
  double kronrod = kKronrodWeights[0] * f0;
  double gauss = kGaussWeights[0] * f0;
  for (std::size_t i = 1; i < kKronrodNodes.size(); ++i) {
    const double dx = h * kKronrodNodes[i];
    const double pair = f(c - dx) + f(c + dx);
    if (!std::isfinite(pair)) throw IntegrationError("integrand is not finite", lo, hi);
    kronrod += kKronrodWeights[i] * pair;
    if (i % 2 == 0) gauss += kGaussWeights[i / 2] * pair;
  }
  return Panel{lo, hi, kronrod * h, std::abs((kronrod - gauss) * h)};
}

std::string panel_limit_message(double error, const Panel& worst) {
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "integrate: panel limit reached with error estimate %.3g (worst panel [%.17g, %.17g])",
                error, worst.lo, worst.hi);
  return buf;
}

}  // namespace

QuadratureResult integrate(const std::function<double(double)>& f, double a, double b, double tol,
                           std::size_t max_panels, double rel_tol) {
  if (!(a < b) || !std::isfinite(a) || !std::isfinite(b))
    throw ArgumentError("integrate: need finite a < b");
  if (!(tol > 0) || !(rel_tol >= 0)) throw ArgumentError("integrate: tolerances must be positive");
  if (max_panels < 1) throw ArgumentError("integrate: max_panels must be positive");

  std::priority_queue<Panel> heap;
  heap.push(evaluate(f, a, b));
  double error = heap.top().error;
  double value = heap.top().value;
  std::size_t panels = 1;

  while (error > std::max(tol, rel_tol * std::abs(value))) {
    const Panel worst = heap.top();
    if (panels >= max_panels)
      throw IntegrationError(panel_limit_message(error, worst), worst.lo, worst.hi);
    heap.pop();
    const double mid = 0.5 * (worst.lo + worst.hi);
    const Panel left = evaluate(f, worst.lo, mid);
    const Panel right = evaluate(f, mid, worst.hi);
    heap.push(left);
    heap.push(right);
    ++panels;
    error += left.error + right.error - worst.error;
    value += left.value + right.value - worst.value;
    if (error < 0) error = 0;
  }

  // Sum from the smallest error estimates up; the order depends only on f.
  std::vector<Panel> all;
  all.reserve(heap.size());
  while (!heap.empty()) {
    all.push_back(heap.top());
    heap.pop();
  }
  QuadratureResult out;
  out.subdivisions = panels;
  for (auto it = all.rbegin(); it != all.rend(); ++it) {
    out.value += it->value;
    out.error_estimate += it->error;
  }
  return out;
}

}  // namespace sridge
