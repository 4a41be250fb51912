#include "spikebox/semilinear.hpp"

#include "spikebox/linear.hpp"
#include "spikebox/operators.hpp"

#include <Eigen/LU>

#include <chrono>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>

namespace spikebox {

namespace {

// Oversampled synthesis domains, cached by layout signature.
DomainPtr oversampled_domain(const DomainPtr& base, int factor) {
  if (factor <= 1) return base;
  static std::mutex mu;
  static std::map<std::string, DomainPtr> cache;
  std::ostringstream key;
  key << factor << '|' << base->dim();
  for (int a = 0; a < base->dim(); ++a)
    key << '|' << base->length(a) << ',' << base->grid_size(a) << ','
        << base->cutoff(a);
  std::scoped_lock lock(mu);
  auto it = cache.find(key.str());
  if (it != cache.end()) return it->second;
  std::vector<double> lengths(base->dim());
  std::vector<int> grid(base->dim()), cut(base->dim());
  for (int a = 0; a < base->dim(); ++a) {
    lengths[a] = base->length(a);
    grid[a] = factor * base->grid_size(a);
    cut[a] = base->cutoff(a);
  }
  auto dom = RectDomain::build(base->dim(), lengths, grid, cut);
  cache.emplace(key.str(), dom);
  return dom;
}

NodalField synthesize_oversampled(const SpectralField& u, const DomainPtr& os) {
  return to_nodal(resample(u, os));
}

// P[u_+^p] on the retained modes, dealiased on the oversampled grid.
SpectralField project_g(const SpectralField& u, double p, const DomainPtr& os) {
  NodalField g = synthesize_oversampled(u, os);
  for (std::int64_t i = 0; i < g.values.size(); ++i)
    g.values[i] = (g.values[i] > 0.0) ? std::pow(g.values[i], p) : 0.0;
  return resample(to_spectral(g), u.domain);
}

SpectralField resolvent_precondition(const SpectralField& f, double eps) {
  SpectralField out = f;
  const auto& dom = *f.domain;
  for (std::int64_t i = 0; i < out.coeff.size(); ++i)
    out.coeff[i] /= std::sqrt(eps * dom.lambda_flat(i)) + 1.0;
  return out;
}

// Symmetrically preconditioned Jacobian, I - D^{-1/2} M D^{-1/2} with
// D = diag(1 + sqrt(eps lambda)) and M multiplication by p u_+^{p-1}.
struct NewtonOperator {
  const DomainPtr base;
  const DomainPtr os;
  double eps;
  Vector dsqrt;      // sqrt of the diagonal
  Vector weight_os;  // p u_+^{p-1} on the oversampled grid

  Vector apply(const Vector& w) const {
    SpectralField ws(base, Vector(w.array() / dsqrt.array()));
    NodalField g = synthesize_oversampled(ws, os);
    g.values.array() *= weight_os.array();
    Vector back = resample(to_spectral(g), base).coeff;
    return w - Vector(back.array() / dsqrt.array());
  }
};

// MINRES for a symmetric, possibly indefinite operator.
Vector minres(const NewtonOperator& op, const Vector& rhs, double rel_tol,
              int max_iter) {
  const std::int64_t n = rhs.size();
  Vector x = Vector::Zero(n);
  double beta = rhs.norm();
  if (beta == 0.0) return x;
  const double target = rel_tol * beta;

  Vector v_prev = Vector::Zero(n);
  Vector v = rhs / beta;
  double eta = beta;
  double gamma = 1.0, gamma_prev = 1.0;
  double sigma = 0.0, sigma_prev = 0.0;
  Vector w_prev = Vector::Zero(n), w_prev2 = Vector::Zero(n);
  double norm_r = beta;

  for (int j = 0; j < max_iter; ++j) {
    Vector av = op.apply(v);
    const double alpha = v.dot(av);
    Vector v_next = av - alpha * v - beta * v_prev;
    const double beta_next = v_next.norm();
    if (beta_next > 0.0) v_next /= beta_next;

    const double delta = gamma * alpha - gamma_prev * sigma * beta;
    const double rho1 = std::sqrt(delta * delta + beta_next * beta_next);
    const double rho2 = sigma * alpha + gamma_prev * gamma * beta;
    const double rho3 = sigma_prev * beta;
    const double gamma_next = (rho1 > 0.0) ? delta / rho1 : 1.0;
    const double sigma_next = (rho1 > 0.0) ? beta_next / rho1 : 0.0;

    Vector w = (v - rho3 * w_prev2 - rho2 * w_prev) / rho1;
    x += gamma_next * eta * w;
    norm_r *= std::abs(sigma_next);
    eta = -sigma_next * eta;

    v_prev = v;
    v = v_next;
    beta = beta_next;
    gamma_prev = gamma;
    gamma = gamma_next;
    sigma_prev = sigma;
    sigma = sigma_next;
    w_prev2 = w_prev;
    w_prev = w;

    if (norm_r <= target || beta == 0.0) break;
  }
  return x;
}

}  // namespace

void SemilinearConfig::validate() const {
  if (!domain) throw std::invalid_argument("SemilinearConfig: domain not set");
  if (!(eps > 0.0)) throw std::invalid_argument("SemilinearConfig: eps must be > 0");
  const int n = domain->dim();
  const double p_max = (n > 1)
                           ? (n + 1.0) / (n - 1.0)
                           : std::numeric_limits<double>::infinity();
  if (!(p > 1.0) || !(p < p_max))
    throw std::invalid_argument(
        "SemilinearConfig: p must lie strictly inside (1, (n+1)/(n-1))");
  if (oversample < 1)
    throw std::invalid_argument("SemilinearConfig: oversample must be >= 1");
  if (!tent_center.empty() && static_cast<int>(tent_center.size()) != n)
    throw std::invalid_argument("SemilinearConfig: tent center dimension mismatch");
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::descent_stagnated: return "descent_stagnated";
    case SolveStatus::newton_diverged: return "newton_diverged";
    case SolveStatus::negative_minimum: return "negative_minimum";
  }
  return "unknown";
}

double energy(const SpectralField& u, double eps, double p, int oversample) {
  const DomainPtr os = oversampled_domain(u.domain, oversample);
  const double mass = integral_plus_pow(synthesize_oversampled(u, os), p + 1.0);
  return 0.5 * h_eps_norm_sq(u, eps) - mass / (p + 1.0);
}

double constant_solution_energy(double p, double volume) {
  return (0.5 - 1.0 / (p + 1.0)) * volume;
}

SpectralField euler_lagrange_residual(const SpectralField& u, double eps,
                                      double p, int oversample) {
  const DomainPtr os = oversampled_domain(u.domain, oversample);
  SpectralField r = frac_apply(u, eps, 0.5);
  r.coeff += u.coeff - project_g(u, p, os).coeff;
  return r;
}

SpectralField grad_energy(const SpectralField& u, double eps, double p,
                          int oversample) {
  const DomainPtr os = oversampled_domain(u.domain, oversample);
  SpectralField g = resolvent_precondition(project_g(u, p, os), eps);
  g.coeff = u.coeff - g.coeff;
  return g;
}

double nehari_scale(const SpectralField& u, double eps, double p,
                    int oversample) {
  const DomainPtr os = oversampled_domain(u.domain, oversample);
  const double mass = integral_plus_pow(synthesize_oversampled(u, os), p + 1.0);
  if (!(mass > 0.0))
    throw std::domain_error("nehari_scale: positive part carries no mass");
  return std::pow(h_eps_norm_sq(u, eps) / mass, 1.0 / (p - 1.0));
}

SpectralField tent_initializer(const DomainPtr& dom, double eps,
                               std::vector<double> center) {
  if (!(eps > 0.0)) throw std::invalid_argument("tent_initializer: eps must be > 0");
  if (center.empty()) {
    center.assign(dom->dim(), 0.0);
    for (int a = 0; a + 1 < dom->dim(); ++a) center[a] = 0.5 * dom->length(a);
  }
  const double root = std::sqrt(eps);
  const double amp = std::pow(eps, -0.5 * dom->dim());
  NodalField tent = sample(dom, [&](std::span<const double> x) {
    double r2 = 0.0;
    for (std::size_t a = 0; a < x.size(); ++a) {
      const double d = x[a] - center[a];
      r2 += d * d;
    }
    const double shape = 1.0 - std::sqrt(r2) / root;
    return (shape > 0.0) ? amp * shape : 0.0;
  });
  return to_spectral(tent);
}

SolutionReport solve_from(const SemilinearConfig& config,
                          const SpectralField& start) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const DomainPtr base = config.domain;
  const DomainPtr os = oversampled_domain(base, config.oversample);
  const double eps = config.eps;
  const double p = config.p;

  SolutionReport rep;
  rep.u = start;

  auto finish = [&](SolveStatus status) {
    rep.status = status;
    NodalField nodal = to_nodal(rep.u);
    rep.sup_u = nodal.values.maxCoeff();
    rep.inf_u = nodal.values.minCoeff();
    const double mean = rep.u.mean();
    const double dev = (nodal.values.array() - mean).abs().maxCoeff();
    rep.is_constant = dev < 1e-6 * std::max(1.0, rep.sup_u);
    rep.energy = energy(rep.u, eps, p, config.oversample);
    rep.residual_norm = std::sqrt(
        euler_lagrange_residual(rep.u, eps, p, config.oversample).l2_norm_sq());
    rep.nehari_defect = std::abs(
        h_eps_norm_sq(rep.u, eps) -
        integral_plus_pow(synthesize_oversampled(rep.u, os), p + 1.0));
    if (rep.status == SolveStatus::converged && !(rep.inf_u > 0.0))
      rep.status = SolveStatus::negative_minimum;
    rep.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    return rep;
  };

  // Phase 1: Nehari-projected descent from the start field.
  {
    double mass = integral_plus_pow(synthesize_oversampled(rep.u, os), p + 1.0);
    if (!(mass > 0.0)) return finish(SolveStatus::descent_stagnated);
    rep.u.coeff *= nehari_scale(rep.u, eps, p, config.oversample);
  }
  double e_now = energy(rep.u, eps, p, config.oversample);
  double tau = config.descent_step;
  int iter = 0;
  bool settled = false;
  while (!settled && iter < config.max_descent_iter) {
    ++iter;
    SpectralField g = grad_energy(rep.u, eps, p, config.oversample);
    bool stepped = false;
    for (int halving = 0; halving < 30 && !stepped; ++halving) {
      SpectralField trial = rep.u;
      trial.coeff -= tau * g.coeff;
      const double mass =
          integral_plus_pow(synthesize_oversampled(trial, os), p + 1.0);
      if (!(mass > 0.0)) {
        tau *= 0.5;
        continue;
      }
      trial.coeff *= std::pow(h_eps_norm_sq(trial, eps) / mass, 1.0 / (p - 1.0));
      const double e_trial = energy(trial, eps, p, config.oversample);
      if (e_trial <= e_now + 1e-14 * (std::abs(e_now) + 1.0)) {
        const double drop = e_now - e_trial;
        rep.u = std::move(trial);
        e_now = e_trial;
        tau = std::min(tau * 1.25, config.descent_step);
        stepped = true;
        settled = drop < config.descent_tol * std::max(1.0, std::abs(e_now));
      } else {
        tau *= 0.5;
      }
    }
    if (!stepped) break;  // step collapsed, hand over to Newton
    if (!settled && iter % 16 == 0) {
      const double r = std::sqrt(
          euler_lagrange_residual(rep.u, eps, p, config.oversample).l2_norm_sq());
      settled = r < 1e-5;
    }
  }
  rep.descent_iterations = iter;

  {
    const double mass = integral_plus_pow(synthesize_oversampled(rep.u, os), p + 1.0);
    if (!(mass > 0.0)) return finish(SolveStatus::descent_stagnated);
  }

  // Phase 2: Newton on R(u) = 0. The Jacobian is diagonal in spectral
  // space minus multiplication by p u_+^{p-1}, applied matrix-free;
  // dense LU below 4096 modes.
  const std::int64_t modes = base->mode_count();
  Vector dsqrt(modes);
  for (std::int64_t i = 0; i < modes; ++i)
    dsqrt[i] = std::sqrt(std::sqrt(eps * base->lambda_flat(i)) + 1.0);

  SpectralField res = euler_lagrange_residual(rep.u, eps, p, config.oversample);
  double r_now = std::sqrt(res.l2_norm_sq());
  rep.residual_history.push_back(r_now);
  const double floor_norm = 1e-10 * std::max(1.0, std::sqrt(rep.u.l2_norm_sq()));

  int newton_it = 0;
  while (r_now > config.newton_tol && newton_it < config.max_newton_iter) {
    ++newton_it;
    NewtonOperator op{base, os, eps, dsqrt, Vector()};
    NodalField u_os = synthesize_oversampled(rep.u, os);
    op.weight_os.resize(u_os.values.size());
    for (std::int64_t i = 0; i < u_os.values.size(); ++i)
      op.weight_os[i] =
          (u_os.values[i] > 0.0) ? p * std::pow(u_os.values[i], p - 1.0) : 0.0;

    Vector rhs = Vector(-res.coeff.array() / dsqrt.array());
    Vector step_hat;
    if (modes <= 4096) {
      // column l of the preconditioned Jacobian; the synthesis of a unit
      // mode is a tensor product of basis columns, built directly
      Eigen::MatrixXd jac(modes, modes);
      for (std::int64_t l = 0; l < modes; ++l) {
        const auto k = base->unflatten_mode(l);
        Vector acc(1);
        acc[0] = 1.0 / dsqrt[l];
        for (int a = 0; a < base->dim(); ++a) {
          const auto col = os->synthesis(a).col(k[a]);
          Vector next(acc.size() * col.size());
          for (std::int64_t i = 0; i < acc.size(); ++i)
            next.segment(i * col.size(), col.size()) = acc[i] * col;
          acc = std::move(next);
        }
        acc.array() *= op.weight_os.array();
        Vector back =
            resample(to_spectral(NodalField(os, std::move(acc))), base).coeff;
        jac.col(l) = -Vector(back.array() / dsqrt.array());
        jac(l, l) += 1.0;
      }
      step_hat = jac.partialPivLu().solve(rhs);
    } else {
      step_hat = minres(op, rhs, 1e-10, 600);
    }
    Vector step = Vector(step_hat.array() / dsqrt.array());

    double alpha = 1.0;
    bool improved = false;
    for (int cut = 0; cut < 25; ++cut) {
      SpectralField trial = rep.u;
      trial.coeff += alpha * step;
      SpectralField r_trial =
          euler_lagrange_residual(trial, eps, p, config.oversample);
      const double rn = std::sqrt(r_trial.l2_norm_sq());
      if (rn < r_now) {
        rep.u = std::move(trial);
        res = std::move(r_trial);
        r_now = rn;
        improved = true;
        break;
      }
      alpha *= 0.5;
    }
    rep.residual_history.push_back(r_now);
    if (!improved) {
      rep.newton_iterations = newton_it;
      return finish(SolveStatus::newton_diverged);
    }
    if (std::sqrt(rep.u.l2_norm_sq()) < floor_norm) {
      // collapsed onto the trivial zero solution
      rep.newton_iterations = newton_it;
      return finish(SolveStatus::newton_diverged);
    }
  }
  rep.newton_iterations = newton_it;
  if (r_now > config.newton_tol) return finish(SolveStatus::newton_diverged);
  return finish(SolveStatus::converged);
}

SolutionReport solve(const SemilinearConfig& config) {
  config.validate();
  SpectralField start =
      tent_initializer(config.domain, config.eps, config.tent_center);
  return solve_from(config, start);
}

std::vector<SolutionReport> perturbed_restart_scan(const SemilinearConfig& config,
                                                   int m_starts) {
  config.validate();
  if (m_starts < 1)
    throw std::invalid_argument("perturbed_restart_scan: m_starts must be >= 1");
  SpectralField tent =
      tent_initializer(config.domain, config.eps, config.tent_center);
  const double tent_scale = std::sqrt(h_eps_norm_sq(tent, config.eps));

  std::vector<SolutionReport> reports;
  reports.reserve(m_starts);
  for (int s = 0; s < m_starts; ++s) {
    SpectralField start = tent;
    if (s > 0) {
      const int band = std::min(8, config.domain->cutoff(0));
      SpectralField noise = random_bandlimited(
          config.domain, band, config.seed + 0x9e3779b9ull * s);
      const double ns = std::sqrt(h_eps_norm_sq(noise, config.eps));
      if (ns > 0.0) start.coeff += (0.25 * tent_scale / ns) * noise.coeff;
    }
    reports.push_back(solve_from(config, start));
  }
  return reports;
}

}  // namespace spikebox
