#pragma once

#include "spikebox/domain.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace spikebox {

/// Configuration for one least-energy solve of
/// (-eps Delta_N)^{1/2} u + u = u_+^p.
struct SemilinearConfig {
  DomainPtr domain;
  double eps = 0.0;
  double p = 2.0;

  double descent_step = 0.5;
  double descent_tol = 1e-10;   // relative energy decrease
  int max_descent_iter = 4000;
  double newton_tol = 1e-11;    // residual L2 target
  int max_newton_iter = 60;
  int oversample = 2;           // nonlinearity dealiasing factor
  std::vector<double> tent_center;  // empty: midpoint of the x_n = 0 face
  std::uint64_t seed = 0;

  /// Reject p outside (1, (n+1)/(n-1)) and nonpositive eps.
  void validate() const;
};

enum class SolveStatus {
  converged,
  descent_stagnated,   // positive part vanished, cannot Nehari-project
  newton_diverged,
  negative_minimum,    // converged but inf u <= 0
};

std::string to_string(SolveStatus s);

struct SolutionReport {
  SpectralField u;
  double energy = 0.0;
  double residual_norm = 0.0;
  double nehari_defect = 0.0;  // | ||u||_eps^2 - int u_+^{p+1} |
  double sup_u = 0.0;
  double inf_u = 0.0;
  bool is_constant = false;
  int descent_iterations = 0;
  int newton_iterations = 0;
  double wall_time_seconds = 0.0;
  SolveStatus status = SolveStatus::converged;
  std::vector<double> residual_history;

  bool accepted() const { return status == SolveStatus::converged; }
};

/// I_eps(u) = (1/2)(||u||_{L2}^2 + sqrt(eps) sum lambda^{1/2} u_k^2)
///            - (1/(p+1)) int u_+^{p+1}.
/// The cylinder Dirichlet term enters through its closed form.
double energy(const SpectralField& u, double eps, double p, int oversample = 2);

/// Energy of the constant solution u = 1: (1/2 - 1/(p+1)) |Omega|.
double constant_solution_energy(double p, double volume);

/// R(u) = (-eps Delta_N)^{1/2} u + u - P[u_+^p], spectral coefficients.
SpectralField euler_lagrange_residual(const SpectralField& u, double eps,
                                      double p, int oversample = 2);

/// Gradient in the H_eps metric: u - K[u_+^p] with K the linear resolvent.
SpectralField grad_energy(const SpectralField& u, double eps, double p,
                          int oversample = 2);

/// Scale t* with ||t u||_eps^2 = int (t u)_+^{p+1}; requires the positive
/// part to carry mass.
double nehari_scale(const SpectralField& u, double eps, double p,
                    int oversample = 2);

/// Nodal sampling of eps^{-n/2} (1 - eps^{-1/2} |x - center|)_+ projected to
/// the retained modes. Supports centers on the boundary; the profile is
/// clipped by the domain.
SpectralField tent_initializer(const DomainPtr& dom, double eps,
                               std::vector<double> center = {});

SolutionReport solve(const SemilinearConfig& config);

/// Same descent/Newton pipeline from an explicit start field.
SolutionReport solve_from(const SemilinearConfig& config,
                          const SpectralField& start);

/// Tent plus seeded band-limited perturbations; one report per start.
std::vector<SolutionReport> perturbed_restart_scan(const SemilinearConfig& config,
                                                   int m_starts);

}  // namespace spikebox
