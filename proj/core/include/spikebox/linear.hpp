#pragma once

#include "spikebox/domain.hpp"
#include "spikebox/extension.hpp"
#include "spikebox/quadrature.hpp"

namespace spikebox {

/// Explicit spectral solution of (-eps Delta_N)^{1/2} u + u = f:
/// u_k = f_k / (sqrt(eps lambda_k) + 1) per retained mode.
struct LinearSolution {
  SpectralField f;
  double eps = 0.0;
  SpectralField u;
  double residual_norm = 0.0;
};

LinearSolution solve_linear(const SpectralField& f, double eps);

ExtensionField extend_linear_solution(const LinearSolution& sol,
                                      std::vector<double> y_levels);

/// Dual route: u = Int_0^inf e^{-t} e^{-t sqrt(eps) (-Delta_N)^{1/2}} f dt,
/// integrated per coefficient in log time.
SpectralField solve_linear_via_semigroup(const SpectralField& f, double eps);

/// Resolvent kernel L(x,z) = Int_0^inf e^{-t} P_{sqrt(eps) t}(x,z) dt by
/// quadrature over the subordinated Poisson kernel. Near-diagonal values
/// grow like |x-z|^{1-n}; do not evaluate on the diagonal.
double resolvent_kernel(const RectDomain& dom, double eps,
                        std::span<const double> x, std::span<const double> z,
                        const QuadratureSpec& spec = {});

/// Mass of the resolvent row through its spectral z-representation,
/// Int_Omega L(x, z) dz; equals 1 up to transform round-off.
double resolvent_mass(const DomainPtr& dom, double eps,
                      std::span<const double> x);

struct KernelSolve {
  std::vector<std::vector<double>> points;
  Vector values;
};

/// Apply the quadrature kernel to nodal data f: for each evaluation point
/// (every stride-th node, nudged off the z lattice),
///   u(x) = f(x) + sum_j w_j L(x, z_j) (f_j - f(x)),
/// using the unit row mass to subtract the integrable singularity.
KernelSolve resolvent_apply_quadrature(const NodalField& f, double eps,
                                       int stride = 1,
                                       const QuadratureSpec& spec = {});

}  // namespace spikebox
