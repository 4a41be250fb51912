#pragma once

#include "spikebox/domain.hpp"
#include "spikebox/quadrature.hpp"

#include <span>

namespace spikebox {

/// (-eps Delta_N)^s: coefficient-wise u_k -> (eps lambda_k)^s u_k.
/// The constant mode is annihilated for every s > 0.
SpectralField frac_apply(const SpectralField& u, double eps, double s);

struct SubordinationResult {
  SpectralField field;
  /// Largest per-mode relative truncation bound from the cut exponential
  /// tail beyond t_max.
  double truncation_estimate = 0.0;
};

/// Half power of -eps Delta_N through the heat semigroup: per coefficient,
///   -(1/(2 sqrt(pi))) Int_0^inf (e^{-t eps lambda} - 1) dt / t^{3/2}.
/// The algebraic tail of the integrand beyond t_max is appended in closed
/// form; the remaining exponential tail is reported, and an exception is
/// thrown if it exceeds `tolerance` (relative).
SubordinationResult semigroup_route_frac_half(const SpectralField& u, double eps,
                                              const QuadratureSpec& spec = {},
                                              double tolerance = 1e-4);

/// Heat semigroup e^{t Delta_N}: u_k -> e^{-t lambda_k} u_k. Fold eps in as
/// t*eps at the call site when the eps-Laplacian flow is meant.
SpectralField heat_apply(const SpectralField& u, double t);

struct KernelValue {
  double value = 0.0;
  double tail_bound = 0.0;
};

/// Neumann heat kernel W_t(x,z) by the (separable) eigenfunction series,
/// truncated per axis at `cutoff` terms; cutoff <= 0 picks the cutoff
/// adaptively from the geometric decay. Throws if the requested cutoff
/// leaves a tail above 1e-10 of the leading term.
KernelValue heat_kernel(const RectDomain& dom, double t,
                        std::span<const double> x, std::span<const double> z,
                        int cutoff = 0);

enum class PoissonRoute { direct, subordinated };

/// Neumann-Poisson kernel P_y(x,z): either the eigenfunction series or the
/// time integral of the heat kernel (constant mode's tail added exactly).
KernelValue poisson_kernel(const RectDomain& dom, double y,
                           std::span<const double> x, std::span<const double> z,
                           PoissonRoute route = PoissonRoute::direct);

/// ||u||^2 in the eps-dependent half-order space:
/// L2 norm squared plus sqrt(eps) * sum lambda_k^{1/2} u_k^2.
double h_eps_norm_sq(const SpectralField& u, double eps);
double h_eps_inner(const SpectralField& u, const SpectralField& v, double eps);

/// sum_{k != 0} lambda_k^{1/2} u_k^2 (the eps-free spectral seminorm).
double spectral_half_seminorm_sq(const SpectralField& u);

/// Double-sum quadrature of |u(x)-u(z)|^2 / |x-z|^{n+1} over the grid.
/// Pairs closer than 1.5 grid spacings are dropped and replaced by a
/// first-order local gradient correction. An estimator: used for two-sided
/// equivalence bands only, never for exact assertions.
double gagliardo_seminorm_sq(const NodalField& u);

/// sum_{k != 0} lambda_k^{1/2} u_k^2 - lambda_1^{1/2} sum_{k != 0} u_k^2.
/// Nonnegative for every field; zero iff u - mean sits in the first
/// eigenspace.
double poincare_defect(const SpectralField& u);

namespace detail {

/// Heat kernel evaluation switching between the eigenfunction series and
/// the reflection sum, whichever is short at this t.
double heat_kernel_fast(const RectDomain& dom, double t,
                        std::span<const double> x, std::span<const double> z);

/// Squared distance from x to the nearest reflected image of z; bounds the
/// Gaussian decay of the heat kernel between the two points.
double min_image_distance_sq(const RectDomain& dom, std::span<const double> x,
                             std::span<const double> z);

}  // namespace detail

}  // namespace spikebox
