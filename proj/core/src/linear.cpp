#include "spikebox/linear.hpp"

#include "spikebox/operators.hpp"

#include <cmath>
#include <stdexcept>

namespace spikebox {

LinearSolution solve_linear(const SpectralField& f, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("solve_linear: eps must be > 0");
  LinearSolution sol;
  sol.f = f;
  sol.eps = eps;
  sol.u = f;
  const auto& dom = *f.domain;
  for (std::int64_t i = 0; i < sol.u.coeff.size(); ++i)
    sol.u.coeff[i] = f.coeff[i] / (std::sqrt(eps * dom.lambda_flat(i)) + 1.0);

  SpectralField r = frac_apply(sol.u, eps, 0.5);
  r.coeff += sol.u.coeff - f.coeff;
  sol.residual_norm = std::sqrt(r.coeff.squaredNorm());
  return sol;
}

ExtensionField extend_linear_solution(const LinearSolution& sol,
                                      std::vector<double> y_levels) {
  return extend(sol.u, sol.eps, std::move(y_levels));
}

SpectralField solve_linear_via_semigroup(const SpectralField& f, double eps) {
  if (!(eps > 0.0))
    throw std::invalid_argument("solve_linear_via_semigroup: eps must be > 0");
  SpectralField out = f;
  const auto& dom = *f.domain;
  for (std::int64_t i = 0; i < f.coeff.size(); ++i) {
    if (f.coeff[i] == 0.0) continue;
    const double rate = 1.0 + std::sqrt(eps * dom.lambda_flat(i));
    const double t_lo = 1e-12;
    const double t_hi = 41.0 / rate;
    const double stub = t_lo * (1.0 - 0.5 * rate * t_lo);
    const double q =
        stub + quad::log_gl([rate](double t) { return std::exp(-rate * t); },
                            t_lo, t_hi, 0.5);
    out.coeff[i] = q * f.coeff[i];
  }
  return out;
}

namespace {

constexpr double kPi = 3.14159265358979323846;

// Weight g(t) with L(x,z) = Int_0^inf W_t(x,z) g(t) dt: the resolvent's
// Laplace integral folded through the subordination formula in closed form,
//   g(t) = (pi eps t)^{-1/2} (1 - sqrt(pi) x erfcx(x)),  x = sqrt(t/eps).
double resolvent_time_weight(double t, double eps) {
  const double x = std::sqrt(t / eps);
  double one_minus;
  if (x >= 12.0) {
    // series for 1 - sqrt(pi) x erfcx(x), avoiding the cancellation
    const double q = 0.5 / (x * x);
    one_minus = q * (1.0 + q * (-3.0 + q * (15.0 + q * (-105.0 + 945.0 * q))));
  } else {
    one_minus = 1.0 - std::sqrt(kPi) * x * quad::erfcx(x);
  }
  return one_minus / std::sqrt(kPi * eps * t);
}

// Int_T^inf g(t) dt = Int_0^inf e^{-s} erf(sqrt(eps) s / (2 sqrt(T))) ds.
double resolvent_weight_tail(double t_hi, double eps) {
  const double scale = std::sqrt(eps) / (2.0 * std::sqrt(t_hi));
  return quad::gl_panels(
      [scale](double s) { return std::exp(-s) * std::erf(scale * s); }, 0.0,
      45.0, 48);
}

}  // namespace

double resolvent_kernel(const RectDomain& dom, double eps,
                        std::span<const double> x, std::span<const double> z,
                        const QuadratureSpec& spec) {
  if (!(eps > 0.0))
    throw std::invalid_argument("resolvent_kernel: eps must be > 0");
  const double d_sq = detail::min_image_distance_sq(dom, x, z);
  const double t_lo = std::max({d_sq / 160.0, spec.t_min * 1e-4, 1e-14});
  const double t_hi = std::max(42.0 / dom.lambda_first(), 2.0 * t_lo);
  const double body = quad::log_gl(
      [&](double t) {
        return detail::heat_kernel_fast(dom, t, x, z) *
               resolvent_time_weight(t, eps);
      },
      t_lo, t_hi, 0.5);
  const double tail =
      resolvent_weight_tail(t_hi, eps) / dom.volume();
  return body + tail;
}

double resolvent_mass(const DomainPtr& dom, double eps,
                      std::span<const double> x) {
  SpectralField row = SpectralField::zero(dom);
  std::vector<int> k(dom->dim(), 0);
  for (std::int64_t flat = 0; flat < dom->mode_count(); ++flat) {
    double basis = 1.0;
    for (int a = 0; a < dom->dim(); ++a) basis *= dom->basis1d(a, k[a], x[a]);
    row.coeff[flat] = basis / (std::sqrt(eps * dom->lambda_flat(flat)) + 1.0);
    for (int a = dom->dim() - 1; a >= 0; --a) {
      if (++k[a] < dom->cutoff(a)) break;
      k[a] = 0;
    }
  }
  return quad_integral(to_nodal(row));
}

KernelSolve resolvent_apply_quadrature(const NodalField& f, double eps,
                                       int stride, const QuadratureSpec& spec) {
  const auto& dom = *f.domain;
  const std::int64_t nodes = dom.node_count();
  const double w = dom.quad_weight();
  const SpectralField fs = to_spectral(f);

  // Evaluation points sit 0.37 h off the z lattice so the kernel is never
  // sampled at its singularity.
  KernelSolve out;
  for (std::int64_t i = 0; i < nodes; i += stride) {
    auto x = dom.node_point(i);
    bool keep = true;
    for (int a = 0; a < dom.dim(); ++a) {
      x[a] += 0.37 * dom.spacing(a);
      keep = keep && x[a] < dom.length(a);
    }
    if (keep) out.points.push_back(std::move(x));
  }
  out.values.resize(static_cast<std::int64_t>(out.points.size()));

  for (std::size_t pi = 0; pi < out.points.size(); ++pi) {
    const auto& x = out.points[pi];
    const double fx = evaluate(fs, x);
    double acc = 0.0;
    for (std::int64_t j = 0; j < nodes; ++j) {
      const double df = f.values[j] - fx;
      if (df == 0.0) continue;
      auto z = dom.node_point(j);
      acc += resolvent_kernel(dom, eps, x, z, spec) * df;
    }
    out.values[static_cast<std::int64_t>(pi)] = fx + w * acc;
  }
  return out;
}

}  // namespace spikebox
