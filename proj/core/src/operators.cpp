#include "spikebox/operators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace spikebox {

namespace {

constexpr double kPi = std::numbers::pi;

}  // namespace

namespace quad {

namespace {
// 8-point Gauss-Legendre on [-1, 1].
constexpr double kGlNode[8] = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
    -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
    0.7966664774136267,  0.9602898564975363};
constexpr double kGlWeight[8] = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
    0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
    0.2223810344533745, 0.1012285362903763};
}  // namespace

double gl_panels(const std::function<double(double)>& f, double a, double b,
                 int n_panels) {
  const double h = (b - a) / n_panels;
  double sum = 0.0;
  for (int p = 0; p < n_panels; ++p) {
    const double mid = a + (p + 0.5) * h;
    double acc = 0.0;
    for (int q = 0; q < 8; ++q) acc += kGlWeight[q] * f(mid + 0.5 * h * kGlNode[q]);
    sum += 0.5 * h * acc;
  }
  return sum;
}

double log_gl(const std::function<double(double)>& f, double lo, double hi,
              double panel) {
  if (!(lo > 0.0) || !(hi > lo)) return 0.0;
  const double a = std::log(lo), b = std::log(hi);
  const int n = std::max(1, static_cast<int>(std::ceil((b - a) / panel)));
  return gl_panels([&](double x) { return f(std::exp(x)) * std::exp(x); }, a, b,
                   n);
}

double log_gl_budget(const std::function<double(double)>& f, double lo,
                     double hi, int node_budget) {
  if (!(lo > 0.0) || !(hi > lo)) return 0.0;
  const double a = std::log(lo), b = std::log(hi);
  const int n = std::max(1, node_budget / 8);
  return gl_panels([&](double x) { return f(std::exp(x)) * std::exp(x); }, a, b,
                   n);
}

double erfcx(double x) {
  if (x < 12.0) return std::exp(x * x) * std::erfc(x);
  // asymptotic series, alternating with q = 1/(2x^2)
  const double q = 0.5 / (x * x);
  const double series =
      1.0 + q * (-1.0 + q * (3.0 + q * (-15.0 + q * (105.0 - 945.0 * q))));
  return series / (x * std::sqrt(kPi));
}

}  // namespace quad

SpectralField frac_apply(const SpectralField& u, double eps, double s) {
  if (!(eps > 0.0)) throw std::invalid_argument("frac_apply: eps must be > 0");
  if (!(s > 0.0) || s > 1.0)
    throw std::invalid_argument("frac_apply: s must lie in (0, 1]");
  SpectralField out = u;
  const auto& dom = *u.domain;
  for (std::int64_t i = 0; i < out.coeff.size(); ++i) {
    const double lam = dom.lambda_flat(i);
    out.coeff[i] = (lam == 0.0) ? 0.0 : std::pow(eps * lam, s) * u.coeff[i];
  }
  return out;
}

SubordinationResult semigroup_route_frac_half(const SpectralField& u,
                                              double eps,
                                              const QuadratureSpec& spec,
                                              double tolerance) {
  if (!(eps > 0.0))
    throw std::invalid_argument("semigroup_route_frac_half: eps must be > 0");
  if (!(spec.t_min > 0.0) || !(spec.t_min < 1.0) || !(spec.t_max > 1.0))
    throw std::invalid_argument("semigroup_route_frac_half: need t_min < 1 < t_max");

  const auto& dom = *u.domain;
  SpectralField out = SpectralField::zero(u.domain);
  const double prefactor = -1.0 / (2.0 * std::sqrt(kPi));

  // Node budget split between the boundary-layer side (t_min, 1] and the
  // decay side [1, t_max) in proportion to their log lengths.
  const double len_lo = -std::log(spec.t_min);
  const double len_hi = std::log(spec.t_max);
  const int panels = std::max(2, spec.nodes / 8);
  const int panels_lo =
      std::max(1, static_cast<int>(std::round(panels * len_lo / (len_lo + len_hi))));
  const int panels_hi = std::max(1, panels - panels_lo);

  double worst_rel = 0.0;
  for (std::int64_t i = 0; i < u.coeff.size(); ++i) {
    const double lam = dom.lambda_flat(i);
    if (lam == 0.0 || u.coeff[i] == 0.0) {
      out.coeff[i] = 0.0;
      continue;
    }
    const double a = eps * lam;
    // Keep the series stub below t_min accurate when a is large.
    const double tmin = std::min(spec.t_min, 0.05 / a);
    const double at = a * tmin;
    const double stub =
        std::sqrt(tmin) * (-2.0 * a + at * a / 3.0 - at * at * a / 15.0 +
                           at * at * at * a / 84.0);

    const double core = quad::gl_panels(
        [a](double x) {
          const double t = std::exp(x);
          return (std::expm1(-a * t)) * std::pow(t, -1.5) * t;
        },
        std::log(tmin), 0.0, panels_lo);
    const double upper = quad::gl_panels(
        [a](double x) {
          const double t = std::exp(x);
          return std::exp(-a * t) * std::pow(t, -1.5) * t;
        },
        0.0, std::log(spec.t_max), panels_hi);

    // Exact algebraic tail of the "-1" part on [1, inf); the remaining
    // exponential tail beyond t_max is only estimated.
    const double integral = stub + core + upper - 2.0;
    out.coeff[i] = prefactor * integral * u.coeff[i];

    const double tail = 2.0 * std::exp(-a * spec.t_max) / std::sqrt(spec.t_max);
    worst_rel = std::max(worst_rel, -prefactor * tail / std::sqrt(a));
  }

  if (worst_rel > tolerance)
    throw std::runtime_error(
        "semigroup_route_frac_half: truncation estimate " +
        std::to_string(worst_rel) + " exceeds tolerance; raise t_max");
  return SubordinationResult{std::move(out), worst_rel};
}

SpectralField heat_apply(const SpectralField& u, double t) {
  if (t < 0.0) throw std::invalid_argument("heat_apply: t must be >= 0");
  SpectralField out = u;
  const auto& dom = *u.domain;
  for (std::int64_t i = 0; i < out.coeff.size(); ++i)
    out.coeff[i] = std::exp(-t * dom.lambda_flat(i)) * u.coeff[i];
  return out;
}

namespace {

struct Axis1d {
  double value = 0.0;
  double tail = 0.0;
};

// 1D Neumann heat kernel on [0, L] by the cosine series with `terms` modes
// beyond the constant; geometric bound on the dropped tail.
Axis1d heat1d_series(double len, double t, double x, double z, int terms) {
  Axis1d r;
  double sum = 1.0 / len;
  for (int k = 1; k <= terms; ++k) {
    const double w = kPi * k / len;
    sum += (2.0 / len) * std::exp(-t * w * w) * std::cos(w * x) * std::cos(w * z);
  }
  r.value = sum;
  const double w1 = kPi * (terms + 1) / len;
  const double head = (2.0 / len) * std::exp(-t * w1 * w1);
  const double ratio = std::exp(-t * kPi * kPi * (2.0 * terms + 3.0) / (len * len));
  r.tail = (ratio < 1.0) ? head / (1.0 - ratio) : std::numeric_limits<double>::infinity();
  return r;
}

int heat1d_terms_needed(double len, double t) {
  // e^{-t (pi k / L)^2} < 1e-17 relative to the constant mode.
  const double k = (len / kPi) * std::sqrt(39.2 / t);
  return std::max(1, static_cast<int>(std::ceil(k)) + 2);
}

// Reflection (image) form; exact alternative representation used where the
// series would need a huge cutoff.
double heat1d_images(double len, double t, double x, double z) {
  const double dx = x - z, sx = x + z;
  const int m_max = 1 + static_cast<int>(std::ceil(std::sqrt(39.2 * t) / (2.0 * len)));
  const double norm = 1.0 / std::sqrt(4.0 * kPi * t);
  double sum = 0.0;
  for (int m = -m_max; m <= m_max; ++m) {
    const double r1 = dx + 2.0 * m * len;
    const double r2 = sx + 2.0 * m * len;
    sum += std::exp(-r1 * r1 / (4.0 * t)) + std::exp(-r2 * r2 / (4.0 * t));
  }
  return norm * sum;
}

}  // namespace

namespace detail {

double heat_kernel_fast(const RectDomain& dom, double t,
                        std::span<const double> x, std::span<const double> z) {
  double prod = 1.0;
  for (int a = 0; a < dom.dim(); ++a) {
    const double len = dom.length(a);
    if (t < 0.2 * len * len) {
      prod *= heat1d_images(len, t, x[a], z[a]);
    } else {
      prod *= heat1d_series(len, t, x[a], z[a], heat1d_terms_needed(len, t)).value;
    }
  }
  return prod;
}

double min_image_distance_sq(const RectDomain& dom, std::span<const double> x,
                             std::span<const double> z) {
  double sum = 0.0;
  for (int a = 0; a < dom.dim(); ++a) {
    const double len = dom.length(a);
    const double dx = std::abs(x[a] - z[a]);
    const double sx = x[a] + z[a];
    double best = std::min(dx, 2.0 * len - dx);
    best = std::min({best, sx, std::abs(2.0 * len - sx)});
    sum += best * best;
  }
  return sum;
}

}  // namespace detail

KernelValue heat_kernel(const RectDomain& dom, double t,
                        std::span<const double> x, std::span<const double> z,
                        int cutoff) {
  if (!(t > 0.0)) throw std::invalid_argument("heat_kernel: t must be > 0");
  std::vector<Axis1d> axes(dom.dim());
  for (int a = 0; a < dom.dim(); ++a) {
    const int need = heat1d_terms_needed(dom.length(a), t);
    const int terms = (cutoff > 0) ? cutoff : need;
    axes[a] = heat1d_series(dom.length(a), t, x[a], z[a], terms);
  }
  double value = 1.0, tail = 0.0;
  for (int a = 0; a < dom.dim(); ++a) value *= axes[a].value;
  for (int a = 0; a < dom.dim(); ++a) {
    double rest = 1.0;
    for (int b = 0; b < dom.dim(); ++b)
      if (b != a) rest *= std::abs(axes[b].value) + axes[b].tail;
    tail += axes[a].tail * rest;
  }
  const double lead = 1.0 / dom.volume();
  if (!(tail <= 1e-10 * std::max(lead, std::abs(value))))
    throw std::runtime_error("heat_kernel: cutoff too small for this t");
  return KernelValue{value, tail};
}

KernelValue poisson_kernel(const RectDomain& dom, double y,
                           std::span<const double> x, std::span<const double> z,
                           PoissonRoute route) {
  if (!(y > 0.0)) throw std::invalid_argument("poisson_kernel: y must be > 0");

  if (route == PoissonRoute::direct) {
    // Per-axis cap so that exp(-y sqrt(lambda)) has fallen below 1e-17.
    std::vector<int> kmax(dom.dim());
    std::int64_t total = 1;
    for (int a = 0; a < dom.dim(); ++a) {
      kmax[a] = 1 + static_cast<int>(std::ceil((dom.length(a) / kPi) * 39.2 / y));
      total *= kmax[a] + 1;
    }
    if (total > 8'000'000)
      throw std::runtime_error(
          "poisson_kernel: direct series impractical at this y; "
          "use the subordinated route");
    std::vector<int> k(dom.dim(), 0);
    double sum = 0.0;
    double omitted = 0.0;
    while (true) {
      double lam = 0.0;
      for (int a = 0; a < dom.dim(); ++a) lam += dom.lambda1d(a, k[a]);
      const double damp = std::exp(-y * std::sqrt(lam));
      double basis = 1.0;
      for (int a = 0; a < dom.dim(); ++a)
        basis *= dom.basis1d(a, k[a], x[a]) * dom.basis1d(a, k[a], z[a]);
      if (damp > 1e-18)
        sum += damp * basis;
      else
        omitted = std::max(omitted, damp * std::abs(basis));
      bool done = true;
      for (int a = dom.dim() - 1; a >= 0; --a) {
        if (++k[a] <= kmax[a]) {
          done = false;
          break;
        }
        k[a] = 0;
      }
      if (done) break;
    }
    return KernelValue{sum, std::max(omitted * total, 1e-18 * total / dom.volume())};
  }

  // Subordinated route: integrate the full heat kernel in log time where it
  // is alive (combined Gaussian kill below, eigenvalue decay above) and add
  // the constant mode's exact tail beyond the window.
  const double lam1 = dom.lambda_first();
  const double inv_vol = 1.0 / dom.volume();
  const double d_sq = detail::min_image_distance_sq(dom, x, z);
  const double t_lo = std::max((y * y + d_sq) / 160.0, 1e-300);
  const double t_hi = std::max(42.0 / lam1, 2.0 * t_lo);
  const double integral = quad::log_gl(
      [&](double t) {
        return std::exp(-y * y / (4.0 * t)) *
               detail::heat_kernel_fast(dom, t, x, z) * std::pow(t, -1.5);
      },
      t_lo, t_hi, 0.5);
  const double pref = y / (2.0 * std::sqrt(kPi));
  // int_T^inf e^{-y^2/4t} t^{-3/2} dt = (2 sqrt(pi)/y) erf(y / (2 sqrt(T)))
  const double const_tail =
      inv_vol * (2.0 * std::sqrt(kPi) / y) * std::erf(y / (2.0 * std::sqrt(t_hi)));
  const double value = pref * (integral + const_tail);
  const double tail =
      pref * std::exp(-t_hi * lam1) * std::pow(t_hi, -1.5) * 2.0 * t_hi;
  return KernelValue{value, tail};
}

double h_eps_norm_sq(const SpectralField& u, double eps) {
  return h_eps_inner(u, u, eps);
}

double h_eps_inner(const SpectralField& u, const SpectralField& v, double eps) {
  const auto& dom = *u.domain;
  double sum = 0.0;
  for (std::int64_t i = 0; i < u.coeff.size(); ++i)
    sum += (1.0 + std::sqrt(eps * dom.lambda_flat(i))) * u.coeff[i] * v.coeff[i];
  return sum;
}

double spectral_half_seminorm_sq(const SpectralField& u) {
  const auto& dom = *u.domain;
  double sum = 0.0;
  for (std::int64_t i = 0; i < u.coeff.size(); ++i)
    sum += std::sqrt(dom.lambda_flat(i)) * u.coeff[i] * u.coeff[i];
  return sum;
}

double gagliardo_seminorm_sq(const NodalField& u) {
  const auto& dom = *u.domain;
  const int n = dom.dim();
  const std::int64_t nodes = dom.node_count();

  double h_max = 0.0;
  for (int a = 0; a < n; ++a) h_max = std::max(h_max, dom.spacing(a));
  const double r_cut = 1.5 * h_max;
  const double r_cut_sq = r_cut * r_cut;

  std::vector<double> coords(nodes * n);
  for (std::int64_t i = 0; i < nodes; ++i) {
    auto x = dom.node_point(i);
    for (int a = 0; a < n; ++a) coords[i * n + a] = x[a];
  }

  const double w = dom.quad_weight();
  const double power = 0.5 * (n + 1);
  double sum = 0.0;
  for (std::int64_t i = 0; i < nodes; ++i) {
    for (std::int64_t j = i + 1; j < nodes; ++j) {
      double r2 = 0.0;
      for (int a = 0; a < n; ++a) {
        const double d = coords[i * n + a] - coords[j * n + a];
        r2 += d * d;
      }
      if (r2 < r_cut_sq) continue;
      const double du = u.values[i] - u.values[j];
      sum += du * du / std::pow(r2, power);
    }
  }
  double result = 2.0 * w * w * sum;  // ordered pairs

  // Local correction for the removed near-diagonal region: for smooth u,
  // the omitted mass is |grad u(x)|^2 * (omega_{n-1}/n) * r_cut per point.
  SpectralField us = to_spectral(u);
  Vector grad_sq = Vector::Zero(nodes);
  for (int a = 0; a < n; ++a) {
    NodalField g = grad_nodal(us, a);
    grad_sq.array() += g.values.array().square();
  }
  const double omega = 2.0 * std::pow(kPi, 0.5 * n) / std::tgamma(0.5 * n);
  result += w * (omega / n) * r_cut * grad_sq.sum();
  return result;
}

double poincare_defect(const SpectralField& u) {
  const auto& dom = *u.domain;
  const double lam1 = dom.lambda_first();
  double defect = 0.0;
  for (std::int64_t i = 0; i < u.coeff.size(); ++i) {
    const double lam = dom.lambda_flat(i);
    if (lam == 0.0) continue;
    defect += (std::sqrt(lam) - std::sqrt(lam1)) * u.coeff[i] * u.coeff[i];
  }
  return defect;
}

}  // namespace spikebox
