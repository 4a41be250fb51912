#pragma once

#include "spikebox/domain.hpp"
#include "spikebox/quadrature.hpp"

#include <vector>

namespace spikebox {

/// Harmonic lift of a trace field to the half cylinder, evaluated on a set
/// of y levels:
///   v(x, y) = mean(u) + sum_{k != 0} e^{-y sqrt(eps lambda_k)} u_k phi_k(x).
/// The mean rides along unchanged at every level; the zero-mean part decays.
struct ExtensionField {
  SpectralField trace;
  double eps = 0.0;
  std::vector<double> y_levels;           // sorted, >= 0
  std::vector<SpectralField> slab_coeff;  // damped coefficients per level
  std::vector<NodalField> slabs;          // nodal samples per level
};

ExtensionField extend(const SpectralField& u, double eps,
                      std::vector<double> y_levels);

/// Geometrically graded y grid on [0, y_max] refined near y = 0.
std::vector<double> graded_levels(double y_max, int count,
                                  double ratio = 1.15);

/// Closed-form cylinder Dirichlet energy of the lift,
/// sum_{k != 0} sqrt(eps lambda_k) u_k^2.
double dirichlet_energy(const ExtensionField& v);

/// Trapezoid-in-y, spectral-in-x estimate of the same energy over the
/// truncated cylinder spanned by v.y_levels. Cross-check only.
double dirichlet_energy_quadrature(const ExtensionField& v);

/// Cylinder norm ||v||_eps^2: Dirichlet energy plus the L2 norm of the trace.
double v_eps_norm_sq(const ExtensionField& v);

/// || -(v(.,h) - v(.,0))/h - (-eps Delta_N)^{1/2} u ||_{L2}; first order in h.
double dtn_residual(const SpectralField& u, double eps, double h);

/// Polynomial bump profile in y with zero trace and compact support:
/// psi(y) = y (1 - y/height)^2 on [0, height], 0 beyond.
struct ZeroTraceBump {
  SpectralField shape;
  double height = 1.0;
  double scale = 1.0;
};

/// Dirichlet energy of the bump alone (closed-form y integrals).
double bump_energy(const ZeroTraceBump& bump, double eps);

/// Dirichlet energy minus the quarter-power trace seminorm of the trace.
/// Zero for exact lifts; strictly positive once a zero-trace bump is added.
double trace_inequality_gap(const ExtensionField& v);
double trace_inequality_gap(const ExtensionField& v, const ZeroTraceBump& bump);

/// Dual-route evaluation of the lift at one level through the heat
/// semigroup time integral; the mean passes through unchanged.
SpectralField extension_via_heat_quadrature(const SpectralField& u, double eps,
                                            double y);

}  // namespace spikebox
