#pragma once

#include "spikebox/domain.hpp"
#include "spikebox/semilinear.hpp"

#include <optional>
#include <string>
#include <vector>

namespace spikebox {

struct HarnackSample {
  std::vector<double> center;
  double radius = 0.0;
  double ratio = 0.0;      // sup/inf over B(center, R) cap Omega
  double control = 0.0;    // R (||c||_inf / eps)^{1/2}
};

/// One row of an eps sweep; feeds the scaling fits and dichotomy tests.
struct SweepRecord {
  double eps = 0.0;
  double energy = 0.0;
  double mass_p1 = 0.0;               // int u_+^{p+1}
  std::vector<double> q_list;
  std::vector<double> mass_q;         // int u^q per q
  double sup_u = 0.0;
  double inf_u = 0.0;
  std::vector<double> eta_list;
  std::vector<double> level_measure;  // |{u > eta}| per eta
  int cube_count = 0;                 // side sqrt(eps) cover of {u > eta_1}
  std::vector<HarnackSample> harnack;
  bool is_constant = false;
  double residual = 0.0;
  std::uint64_t seed = 0;
  std::string status = "converged";
};

struct SweepConfig {
  std::vector<double> eps_list;
  SemilinearConfig base;              // eps is overridden per record
  std::vector<double> q_list{0.5, 1.0, 2.0, 3.0};
  std::vector<double> eta_factors{0.25, 0.5};  // times the sweep-min sup
  /// Tent centers tried per eps; the accepted nonconstant report with the
  /// least energy wins. Empty: face midpoint, corner, domain center.
  std::vector<std::vector<double>> centers;
  /// Raise the per-axis grid so that sqrt(eps) spans at least two cells.
  bool auto_resolution = true;
  int threads = 0;  // 0: read SPIKEBOX_THREADS, then hardware
};

std::vector<SweepRecord> run_sweep(const SweepConfig& config);

struct ScalingFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // rms misfit of the least-squares line
  int points = 0;
};

/// Least-squares slope of log(energy) against log(eps) over the
/// nonconstant records. Throws below 4 usable records.
ScalingFit energy_scaling_fit(const std::vector<SweepRecord>& records);

struct RatioBand {
  double lo = 0.0;
  double hi = 0.0;
  bool drifting = false;  // monotone trend beyond 10x across the sweep
};

/// Band of int u^q / eps^{n/2} over nonconstant records (for q >= 1); the
/// 0 < q < 1 branch normalizes the upper end by eps^{n q / 2}.
RatioBand lq_scaling(const std::vector<SweepRecord>& records, double q, int dim);

/// Slope of log |{u > eta}| against log(eps). Records with empty level sets
/// are skipped and counted.
struct MeasureDecay {
  double slope = 0.0;
  int empty_levels = 0;
  bool monotone = false;  // measures decrease with eps
};
MeasureDecay measure_decay(const std::vector<SweepRecord>& records, int eta_index);

/// Number of lattice cubes of side l = sqrt(eps), centered on l Z^n, that
/// meet {u > eta}. Refuses when sqrt(eps) is under two grid spacings.
int cube_cover(const NodalField& u, double eps, double eta);

std::vector<HarnackSample> harnack_ratio(const NodalField& u, double eps,
                                         double p,
                                         const std::vector<std::vector<double>>& centers,
                                         double radius);

struct MoserChain {
  std::vector<double> s;           // s_0, s_1, ... with p-1+2s_{j+1} = nu s_j
  std::vector<double> mass;        // int u^{p-1+2s_j}
  std::vector<double> lhs;         // (int u^{s_j nu})^{2/nu}
  std::vector<double> chain_const; // lhs / (s_j eps^{-1/2} mass)
  std::vector<double> sup_proxy;   // (int u^{s_j nu})^{1/(s_j nu)}
  bool truncated = false;          // overflow guard tripped
};

/// Runs the iteration bookkeeping in the log domain; requires u > 0.
MoserChain moser_chain(const NodalField& u, double eps, double p, int j_max);

struct UniformBoundReport {
  double max_sup = 0.0;
  double drift_ratio = 0.0;  // sup at smallest eps over sup at largest
  bool drifting = false;
};
UniformBoundReport uniform_bound_report(const std::vector<SweepRecord>& records);

/// eps* = [ ((p C_sup^{p-1} - 1) / (C1 C2))_+ ]^2. Returns 0 when the
/// numerator is nonpositive (flag that constancy would hold for all eps).
double epsilon_star_estimate(double p, double c_sup, double c1, double c2);

/// Two-sided fit of the spectral half seminorm against the Gagliardo
/// quadrature over a seeded corpus; yields the equivalence constants used
/// by epsilon_star_estimate.
struct NormEquivalenceFit {
  double ratio_lo = 0.0;  // min over corpus of spectral/gagliardo
  double ratio_hi = 0.0;
  double c1 = 0.0;        // lower equivalence constant
  double c2 = 0.0;        // Poincare constant lambda_1^{1/2} / ratio_hi
};
NormEquivalenceFit fit_norm_equivalence(const DomainPtr& dom, int corpus,
                                        std::uint64_t seed);

/// Largest eps in a geometric scan where some start still converges to a
/// nonconstant solution; scans downward from hi.
struct TransitionScan {
  double transition_eps = 0.0;
  std::vector<double> tested;
  std::vector<bool> found_nonconstant;
};
TransitionScan locate_transition(const SemilinearConfig& base, double lo,
                                 double hi, int points, int starts);

/// Keller-Segel steady-state parameters. The chemical diffusion D2 and
/// decay a induce eps through the configured mapping.
enum class KsMapping { linear, squared };  // eps = D2/a or (D2/a)^2

struct KSParams {
  double d1 = 1.0, d2 = 1.0, chi = 2.0, a = 1.0, b = 1.0;
  double mean_density = 1.0;  // prescribed mean of rho
  KsMapping mapping = KsMapping::linear;

  double exponent() const { return chi / d1; }
  double implied_eps() const;
  void validate(int dim) const;
};

struct KsReconstruction {
  NodalField rho;
  NodalField chem;
  double lambda = 0.0;   // rho = lambda * chem^{chi/D1}
  double beta = 0.0;     // chem = beta * u
  /// sup of D1 grad(rho) - chi rho grad(log(chem)), relative to the flux
  /// magnitude; an exact identity up to round-off.
  double flux_residual = 0.0;
  double chemical_residual = 0.0;  // L2 norm of D2 (-Delta)^{1/2} c + a c - b rho
};

/// Rebuild (rho, c) from a solution u of the scalar problem at the implied
/// eps and exponent p = chi/D1.
KsReconstruction keller_segel_reconstruct(const SpectralField& u,
                                          const KSParams& ks,
                                          int oversample = 2);

}  // namespace spikebox
