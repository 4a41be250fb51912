#include "spikebox/extension.hpp"

#include "spikebox/operators.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>

namespace spikebox {

namespace {
constexpr double kPi = std::numbers::pi;
}

ExtensionField extend(const SpectralField& u, double eps,
                      std::vector<double> y_levels) {
  if (!(eps > 0.0)) throw std::invalid_argument("extend: eps must be > 0");
  for (double y : y_levels)
    if (y < 0.0) throw std::invalid_argument("extend: y levels must be >= 0");
  std::sort(y_levels.begin(), y_levels.end());

  ExtensionField v;
  v.trace = u;
  v.eps = eps;
  v.y_levels = std::move(y_levels);
  const auto& dom = *u.domain;
  v.slab_coeff.reserve(v.y_levels.size());
  v.slabs.reserve(v.y_levels.size());
  for (double y : v.y_levels) {
    SpectralField slab = u;
    for (std::int64_t i = 0; i < slab.coeff.size(); ++i) {
      const double lam = dom.lambda_flat(i);
      if (lam > 0.0) slab.coeff[i] *= std::exp(-y * std::sqrt(eps * lam));
    }
    v.slabs.push_back(to_nodal(slab));
    v.slab_coeff.push_back(std::move(slab));
  }
  return v;
}

std::vector<double> graded_levels(double y_max, int count, double ratio) {
  if (count < 2 || !(y_max > 0.0) || !(ratio > 1.0))
    throw std::invalid_argument("graded_levels: bad arguments");
  const double h0 = y_max * (ratio - 1.0) / (std::pow(ratio, count) - 1.0);
  std::vector<double> y{0.0};
  double h = h0, pos = 0.0;
  for (int i = 0; i < count; ++i) {
    pos += h;
    y.push_back(std::min(pos, y_max));
    h *= ratio;
  }
  y.back() = y_max;
  return y;
}

double dirichlet_energy(const ExtensionField& v) {
  const auto& dom = *v.trace.domain;
  double sum = 0.0;
  for (std::int64_t i = 0; i < v.trace.coeff.size(); ++i)
    sum += std::sqrt(v.eps * dom.lambda_flat(i)) * v.trace.coeff[i] *
           v.trace.coeff[i];
  return sum;
}

double dirichlet_energy_quadrature(const ExtensionField& v) {
  if (v.y_levels.size() < 2)
    throw std::invalid_argument("dirichlet_energy_quadrature: need >= 2 levels");
  const auto& dom = *v.trace.domain;
  std::vector<double> integrand(v.y_levels.size(), 0.0);
  for (std::size_t j = 0; j < v.y_levels.size(); ++j) {
    const auto& c = v.slab_coeff[j].coeff;
    double a = 0.0;
    for (std::int64_t i = 0; i < c.size(); ++i) {
      const double el = v.eps * dom.lambda_flat(i);
      // eps |grad_x v|^2 + v_y^2 per mode; v_y = -sqrt(eps lambda) v.
      a += 2.0 * el * c[i] * c[i];
    }
    integrand[j] = a;
  }
  double sum = 0.0;
  for (std::size_t j = 0; j + 1 < v.y_levels.size(); ++j)
    sum += 0.5 * (integrand[j] + integrand[j + 1]) *
           (v.y_levels[j + 1] - v.y_levels[j]);
  return sum;
}

double v_eps_norm_sq(const ExtensionField& v) {
  return dirichlet_energy(v) + v.trace.coeff.squaredNorm();
}

double dtn_residual(const SpectralField& u, double eps, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("dtn_residual: h must be > 0");
  const auto& dom = *u.domain;
  double sum = 0.0;
  for (std::int64_t i = 0; i < u.coeff.size(); ++i) {
    const double lam = dom.lambda_flat(i);
    if (lam == 0.0) continue;
    const double root = std::sqrt(eps * lam);
    const double dq = -std::expm1(-h * root) / h;  // difference quotient
    const double d = (dq - root) * u.coeff[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

namespace {

// Closed-form y integrals for psi(y) = y (1 - y/H)^2 on [0, H].
double psi_sq_integral(double height) { return std::pow(height, 3) / 105.0; }
double dpsi_sq_integral(double height) { return 2.0 * height / 15.0; }

double psi(double y, double height) {
  const double s = y / height;
  return (s >= 1.0) ? 0.0 : y * (1.0 - s) * (1.0 - s);
}
double dpsi(double y, double height) {
  const double s = y / height;
  return (s >= 1.0) ? 0.0 : (1.0 - s) * (1.0 - 3.0 * s);
}

// Gauss-Legendre on [0, H] with enough panels to resolve e^{-root y}.
double gl_profile_integral(const std::function<double(double)>& f, double height,
                           double root) {
  const int panels =
      std::min(2000, std::max(6, static_cast<int>(std::ceil(height * std::max(1.0, root)))));
  return quad::gl_panels(f, 0.0, height, panels);
}

}  // namespace

double bump_energy(const ZeroTraceBump& bump, double eps) {
  const auto& dom = *bump.shape.domain;
  const double ipp = psi_sq_integral(bump.height);
  const double idd = dpsi_sq_integral(bump.height);
  double sum = 0.0;
  for (std::int64_t i = 0; i < bump.shape.coeff.size(); ++i) {
    const double c = bump.shape.coeff[i];
    sum += c * c * (eps * dom.lambda_flat(i) * ipp + idd);
  }
  return bump.scale * bump.scale * sum;
}

double trace_inequality_gap(const ExtensionField& v) {
  const double energy = dirichlet_energy(v);
  const double quarter = frac_apply(v.trace, v.eps, 0.25).l2_norm_sq();
  return energy - quarter;
}

double trace_inequality_gap(const ExtensionField& v, const ZeroTraceBump& bump) {
  if (!bump.shape.domain->same_layout(*v.trace.domain))
    throw std::invalid_argument("trace_inequality_gap: bump on a different domain");
  const auto& dom = *v.trace.domain;
  double cross = 0.0;
  for (std::int64_t i = 0; i < bump.shape.coeff.size(); ++i) {
    const double lam = dom.lambda_flat(i);
    if (lam == 0.0 || bump.shape.coeff[i] == 0.0 || v.trace.coeff[i] == 0.0)
      continue;
    const double el = v.eps * lam;
    const double root = std::sqrt(el);
    const double j1 = gl_profile_integral(
        [&](double y) { return std::exp(-root * y) * psi(y, bump.height); },
        bump.height, root);
    const double j2 = gl_profile_integral(
        [&](double y) { return std::exp(-root * y) * dpsi(y, bump.height); },
        bump.height, root);
    cross += v.trace.coeff[i] * bump.shape.coeff[i] * (el * j1 - root * j2);
  }
  return trace_inequality_gap(v) + 2.0 * bump.scale * cross +
         bump_energy(bump, v.eps);
}

SpectralField extension_via_heat_quadrature(const SpectralField& u, double eps,
                                            double y) {
  if (!(eps > 0.0))
    throw std::invalid_argument("extension_via_heat_quadrature: eps must be > 0");
  if (y < 0.0)
    throw std::invalid_argument("extension_via_heat_quadrature: y must be >= 0");
  SpectralField out = u;
  if (y == 0.0) return out;
  const auto& dom = *u.domain;
  const double pref = std::sqrt(eps) * y / (2.0 * std::sqrt(kPi));
  for (std::int64_t i = 0; i < u.coeff.size(); ++i) {
    const double lam = dom.lambda_flat(i);
    if (lam == 0.0) continue;  // the mean rides along unchanged
    if (u.coeff[i] == 0.0) continue;
    const double t_lo = eps * y * y / 164.0;
    const double t_hi = 41.0 / lam;
    if (t_lo >= t_hi) {
      out.coeff[i] = 0.0;
      continue;
    }
    const double factor =
        pref * quad::log_gl(
                   [&](double t) {
                     return std::exp(-eps * y * y / (4.0 * t)) *
                            std::exp(-t * lam) * std::pow(t, -1.5);
                   },
                   t_lo, t_hi, 0.5);
    out.coeff[i] = factor * u.coeff[i];
  }
  return out;
}

}  // namespace spikebox
