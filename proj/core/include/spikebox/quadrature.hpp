#pragma once

#include <functional>

namespace spikebox {

/// Rule for semi-infinite time integrals with a t^{-3/2}-type boundary
/// layer and an exponential tail: Gauss-Legendre panels placed log-uniformly
/// in t between t_min and t_max, split at t = 1. Tail mass of the algebraic
/// part beyond t_max is appended in closed form by the callers that need it;
/// the exponential remainder is reported as a truncation estimate.
struct QuadratureSpec {
  int nodes = 200;
  double t_min = 1e-8;
  double t_max = 40.0;

  /// Tighter rule for 1e-8-grade route-agreement checks at small eps.
  static QuadratureSpec dense() { return QuadratureSpec{400, 1e-10, 600.0}; }
};

namespace quad {

/// Composite 8-point Gauss-Legendre on [a, b] with n equal panels.
double gl_panels(const std::function<double(double)>& f, double a, double b,
                 int n_panels);

/// Integral of f over [lo, hi], lo > 0, by composite Gauss-Legendre in
/// log t with panels of width about `panel` (log units).
double log_gl(const std::function<double(double)>& f, double lo, double hi,
              double panel = 1.0);

/// Same rule with an explicit node budget (8 nodes per panel).
double log_gl_budget(const std::function<double(double)>& f, double lo,
                     double hi, int node_budget);

/// Scaled complementary error function e^{x^2} erfc(x) for x >= 0, stable
/// for large arguments.
double erfcx(double x);

}  // namespace quad

}  // namespace spikebox
