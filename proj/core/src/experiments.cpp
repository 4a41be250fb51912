#include "spikebox/experiments.hpp"

#include "spikebox/operators.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <set>
#include <stdexcept>
#include <thread>

namespace spikebox {

namespace {

int resolve_threads(int request) {
  if (request > 0) return request;
  if (const char* env = std::getenv("SPIKEBOX_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

// Spike solutions need roughly six cells across the sqrt(eps) width before
// the truncated far field stays positive; below two cells the cube-cover
// lattice is meaningless. The floor is capped to keep sweeps bounded.
DomainPtr domain_for_eps(const DomainPtr& base, double eps, bool auto_res) {
  if (!auto_res) return base;
  const double l = std::sqrt(eps);
  constexpr double kCellsPerWidth = 6.0;
  constexpr int kGridCap = 384;
  bool ok = true;
  for (int a = 0; a < base->dim(); ++a)
    ok = ok && l >= kCellsPerWidth * base->spacing(a);
  if (ok) return base;
  std::vector<double> lengths(base->dim());
  std::vector<int> grid(base->dim()), cut(base->dim());
  for (int a = 0; a < base->dim(); ++a) {
    lengths[a] = base->length(a);
    const int need =
        static_cast<int>(std::ceil(kCellsPerWidth * lengths[a] / l));
    grid[a] = std::min(kGridCap, std::max(base->grid_size(a), need));
    const bool full = base->cutoff(a) == base->grid_size(a);
    cut[a] = full ? grid[a] : std::min(base->cutoff(a), grid[a]);
  }
  return RectDomain::build(base->dim(), lengths, grid, cut);
}

std::vector<std::vector<double>> default_centers(const RectDomain& dom) {
  const int n = dom.dim();
  std::vector<double> face_mid(n, 0.0), corner(n, 0.0), middle(n, 0.0);
  for (int a = 0; a + 1 < n; ++a) face_mid[a] = 0.5 * dom.length(a);
  for (int a = 0; a < n; ++a) middle[a] = 0.5 * dom.length(a);
  return {face_mid, corner, middle};
}

double finite_or_nan(double v) { return std::isfinite(v) ? v : std::nan(""); }

}  // namespace

std::vector<SweepRecord> run_sweep(const SweepConfig& config) {
  if (config.eps_list.empty())
    throw std::invalid_argument("run_sweep: empty eps list");
  for (double eps : config.eps_list)
    if (!(eps > 0.0)) throw std::invalid_argument("run_sweep: eps must be > 0");

  std::vector<double> eps_sorted = config.eps_list;
  std::sort(eps_sorted.begin(), eps_sorted.end());

  struct Slot {
    SweepRecord record;
    SolutionReport report;
    NodalField nodal;
    DomainPtr domain;
  };
  std::vector<Slot> slots(eps_sorted.size());

  auto solve_one = [&](std::size_t idx) {
    const double eps = eps_sorted[idx];
    Slot& slot = slots[idx];
    slot.domain = domain_for_eps(config.base.domain, eps, config.auto_resolution);

    SemilinearConfig cfg = config.base;
    cfg.domain = slot.domain;
    cfg.eps = eps;

    const auto centers = config.centers.empty() ? default_centers(*slot.domain)
                                                : config.centers;
    const double e_const =
        constant_solution_energy(cfg.p, slot.domain->volume());

    std::optional<SolutionReport> best;
    std::optional<SolutionReport> fallback;
    for (const auto& center : centers) {
      cfg.tent_center = center;
      SolutionReport rep = solve(cfg);
      if (!rep.accepted()) {
        if (!fallback) fallback = std::move(rep);
        continue;
      }
      if (!rep.is_constant && rep.energy < e_const) {
        if (!best || rep.energy < best->energy) best = std::move(rep);
      } else if (!fallback || !fallback->accepted()) {
        fallback = std::move(rep);
      }
    }
    if (best) {
      slot.report = std::move(*best);
    } else if (fallback) {
      slot.report = std::move(*fallback);
    } else {
      slot.report.u = SpectralField::zero(slot.domain);
      slot.report.status = SolveStatus::descent_stagnated;
    }

    SweepRecord& r = slot.record;
    r.eps = eps;
    r.seed = cfg.seed;
    r.status = to_string(slot.report.status);
    r.is_constant = slot.report.is_constant;
    r.energy = finite_or_nan(slot.report.energy);
    r.residual = finite_or_nan(slot.report.residual_norm);
    r.sup_u = slot.report.sup_u;
    r.inf_u = slot.report.inf_u;
    slot.nodal = to_nodal(slot.report.u);
    r.mass_p1 = integral_plus_pow(slot.nodal, cfg.p + 1.0);
    r.q_list = config.q_list;
    for (double q : config.q_list)
      r.mass_q.push_back(integral_plus_pow(slot.nodal, q));
  };

  const int threads =
      std::min<int>(resolve_threads(config.threads), slots.size());
  if (threads <= 1) {
    for (std::size_t i = 0; i < slots.size(); ++i) solve_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < slots.size();
             i = next.fetch_add(1))
          solve_one(i);
      });
    for (auto& th : pool) th.join();
  }

  // Level-set thresholds depend on the whole sweep: eta = factor * min sup.
  double min_sup = std::numeric_limits<double>::infinity();
  for (const auto& slot : slots)
    if (slot.report.accepted()) min_sup = std::min(min_sup, slot.record.sup_u);
  if (!std::isfinite(min_sup)) min_sup = 1.0;

  std::vector<SweepRecord> records;
  records.reserve(slots.size());
  for (auto& slot : slots) {
    SweepRecord& r = slot.record;
    for (double f : config.eta_factors) r.eta_list.push_back(f * min_sup);
    const double w = slot.domain->quad_weight();
    for (double eta : r.eta_list) {
      std::int64_t count = 0;
      for (std::int64_t i = 0; i < slot.nodal.values.size(); ++i)
        if (slot.nodal.values[i] > eta) ++count;
      r.level_measure.push_back(w * count);
    }
    const double l = std::sqrt(r.eps);
    bool resolvable = true;
    for (int a = 0; a < slot.domain->dim(); ++a)
      resolvable = resolvable && l >= 2.0 * slot.domain->spacing(a);
    r.cube_count = resolvable && !r.eta_list.empty()
                       ? cube_cover(slot.nodal, r.eps, r.eta_list.front())
                       : -1;

    if (slot.report.accepted() && slot.report.inf_u > 0.0) {
      std::int64_t arg = 0;
      slot.nodal.values.maxCoeff(&arg);
      std::vector<std::vector<double>> centers{
          slot.domain->node_point(arg)};
      std::vector<double> mid(slot.domain->dim());
      for (int a = 0; a < slot.domain->dim(); ++a)
        mid[a] = 0.5 * slot.domain->length(a);
      centers.push_back(mid);
      r.harnack =
          harnack_ratio(slot.nodal, r.eps, config.base.p, centers, 2.0 * l);
    }
    records.push_back(std::move(r));
  }
  return records;
}

ScalingFit energy_scaling_fit(const std::vector<SweepRecord>& records) {
  std::vector<double> xs, ys;
  for (const auto& r : records)
    if (!r.is_constant && r.status == "converged" && r.energy > 0.0) {
      xs.push_back(std::log(r.eps));
      ys.push_back(std::log(r.energy));
    }
  if (xs.size() < 4)
    throw std::runtime_error("energy_scaling_fit: need >= 4 nonconstant records");
  const int n = static_cast<int>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  ScalingFit fit;
  fit.points = n;
  fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  fit.intercept = (sy - fit.slope * sx) / n;
  double rss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double e = ys[i] - fit.slope * xs[i] - fit.intercept;
    rss += e * e;
  }
  fit.residual = std::sqrt(rss / n);
  return fit;
}

RatioBand lq_scaling(const std::vector<SweepRecord>& records, double q, int dim) {
  RatioBand band;
  band.lo = std::numeric_limits<double>::infinity();
  band.hi = -std::numeric_limits<double>::infinity();
  std::vector<std::pair<double, double>> ratios;  // (eps, lower-normalized)
  for (const auto& r : records) {
    if (r.is_constant || r.status != "converged") continue;
    auto it = std::min_element(r.q_list.begin(), r.q_list.end(),
                               [q](double a, double b) {
                                 return std::abs(a - q) < std::abs(b - q);
                               });
    if (it == r.q_list.end() || std::abs(*it - q) > 1e-9)
      throw std::invalid_argument("lq_scaling: q not recorded in sweep");
    const double mass = r.mass_q[it - r.q_list.begin()];
    const double lower_norm = std::pow(r.eps, 0.5 * dim);
    const double upper_norm =
        (q >= 1.0) ? lower_norm : std::pow(r.eps, 0.5 * dim * q);
    band.lo = std::min(band.lo, mass / lower_norm);
    band.hi = std::max(band.hi, mass / upper_norm);
    ratios.emplace_back(r.eps, mass / lower_norm);
  }
  if (ratios.empty())
    throw std::runtime_error("lq_scaling: no nonconstant records");
  std::sort(ratios.begin(), ratios.end());
  bool increasing = true, decreasing = true;
  for (std::size_t i = 1; i < ratios.size(); ++i) {
    increasing = increasing && ratios[i].second >= ratios[i - 1].second;
    decreasing = decreasing && ratios[i].second <= ratios[i - 1].second;
  }
  const double spread = ratios.empty() ? 1.0 : band.hi / std::max(band.lo, 1e-300);
  band.drifting = (increasing || decreasing) && spread > 10.0;
  return band;
}

MeasureDecay measure_decay(const std::vector<SweepRecord>& records,
                           int eta_index) {
  MeasureDecay out;
  std::vector<std::pair<double, double>> pts;
  for (const auto& r : records) {
    if (r.is_constant || r.status != "converged") continue;
    if (eta_index < 0 || eta_index >= static_cast<int>(r.level_measure.size()))
      throw std::invalid_argument("measure_decay: eta index out of range");
    const double m = r.level_measure[eta_index];
    if (m > 0.0)
      pts.emplace_back(std::log(r.eps), std::log(m));
    else
      ++out.empty_levels;
  }
  if (pts.size() < 2)
    throw std::runtime_error("measure_decay: not enough nonempty level sets");
  std::sort(pts.begin(), pts.end());
  const int n = static_cast<int>(pts.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (auto& [x, y] : pts) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  out.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  out.monotone = true;
  for (int i = 1; i < n; ++i)
    out.monotone = out.monotone && pts[i].second >= pts[i - 1].second - 0.1;
  return out;
}

int cube_cover(const NodalField& u, double eps, double eta) {
  const auto& dom = *u.domain;
  const double l = std::sqrt(eps);
  for (int a = 0; a < dom.dim(); ++a)
    if (l < 2.0 * dom.spacing(a))
      throw std::invalid_argument(
          "cube_cover: sqrt(eps) under two grid spacings; raise the grid");
  std::set<std::vector<long>> cubes;
  for (std::int64_t i = 0; i < u.values.size(); ++i) {
    if (u.values[i] <= eta) continue;
    const auto x = dom.node_point(i);
    std::vector<long> key(dom.dim());
    for (int a = 0; a < dom.dim(); ++a) key[a] = std::lround(x[a] / l);
    cubes.insert(std::move(key));
  }
  return static_cast<int>(cubes.size());
}

std::vector<HarnackSample> harnack_ratio(
    const NodalField& u, double eps, double p,
    const std::vector<std::vector<double>>& centers, double radius) {
  const auto& dom = *u.domain;
  double c_inf = 0.0;
  for (std::int64_t i = 0; i < u.values.size(); ++i) {
    const double v = u.values[i];
    const double c = 1.0 - ((v > 0.0) ? std::pow(v, p - 1.0) : 0.0);
    c_inf = std::max(c_inf, std::abs(c));
  }
  std::vector<HarnackSample> out;
  for (const auto& center : centers) {
    if (static_cast<int>(center.size()) != dom.dim())
      throw std::invalid_argument("harnack_ratio: center dimension mismatch");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    bool hit = false;
    for (std::int64_t i = 0; i < u.values.size(); ++i) {
      const auto x = dom.node_point(i);
      double r2 = 0.0;
      for (int a = 0; a < dom.dim(); ++a) {
        const double d = x[a] - center[a];
        r2 += d * d;
      }
      if (r2 > radius * radius) continue;
      hit = true;
      lo = std::min(lo, u.values[i]);
      hi = std::max(hi, u.values[i]);
    }
    if (!hit)
      throw std::invalid_argument("harnack_ratio: ball misses every grid node");
    HarnackSample s;
    s.center = center;
    s.radius = radius;
    s.ratio = (lo > 0.0) ? hi / lo : std::numeric_limits<double>::infinity();
    s.control = radius * std::sqrt(c_inf / eps);
    out.push_back(std::move(s));
  }
  return out;
}

MoserChain moser_chain(const NodalField& u, double eps, double p, int j_max) {
  const auto& dom = *u.domain;
  if (dom.dim() < 2)
    throw std::invalid_argument("moser_chain: needs dimension >= 2");
  if (j_max < 0 || j_max > 8)
    throw std::invalid_argument("moser_chain: j_max must be in [0, 8]");
  if (!(u.values.minCoeff() > 0.0))
    throw std::invalid_argument("moser_chain: field must be strictly positive");

  const double nu = 2.0 * dom.dim() / (dom.dim() - 1.0);
  Vector logs = u.values.array().log();
  const double log_w = std::log(dom.quad_weight());

  // log integral of u^q by a log-sum-exp over the grid
  auto log_int = [&](double q) {
    const double peak = q * logs.maxCoeff();
    double sum = 0.0;
    for (std::int64_t i = 0; i < logs.size(); ++i)
      sum += std::exp(q * logs[i] - peak);
    return log_w + peak + std::log(sum);
  };

  MoserChain chain;
  double s = 0.5 * (nu - p + 1.0);
  for (int j = 0; j <= j_max; ++j) {
    const double q_mass = p - 1.0 + 2.0 * s;
    const double lm = log_int(q_mass);
    const double ls = log_int(s * nu);
    if (lm > 700.0 || ls > 700.0 || (2.0 / nu) * ls > 700.0) {
      chain.truncated = true;
      break;
    }
    chain.s.push_back(s);
    chain.mass.push_back(std::exp(lm));
    chain.lhs.push_back(std::exp((2.0 / nu) * ls));
    chain.chain_const.push_back(chain.lhs.back() /
                                (s * std::pow(eps, -0.5) * chain.mass.back()));
    chain.sup_proxy.push_back(std::exp(ls / (s * nu)));
    s = 0.5 * (nu * s - p + 1.0);
  }
  return chain;
}

UniformBoundReport uniform_bound_report(const std::vector<SweepRecord>& records) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& r : records)
    if (r.status == "converged") pts.emplace_back(r.eps, r.sup_u);
  if (pts.size() < 4)
    throw std::runtime_error("uniform_bound_report: need >= 4 records");
  std::sort(pts.begin(), pts.end());
  UniformBoundReport rep;
  for (auto& [e, s] : pts) rep.max_sup = std::max(rep.max_sup, s);
  rep.drift_ratio = pts.front().second / pts.back().second;
  rep.drifting = rep.drift_ratio > 5.0 || rep.drift_ratio < 0.2;
  return rep;
}

double epsilon_star_estimate(double p, double c_sup, double c1, double c2) {
  if (!(c1 > 0.0) || !(c2 > 0.0))
    throw std::invalid_argument("epsilon_star_estimate: constants must be > 0");
  const double numerator = p * std::pow(c_sup, p - 1.0) - 1.0;
  if (numerator <= 0.0) return 0.0;
  const double root = numerator / (c1 * c2);
  return root * root;
}

NormEquivalenceFit fit_norm_equivalence(const DomainPtr& dom, int corpus,
                                        std::uint64_t seed) {
  if (corpus < 2)
    throw std::invalid_argument("fit_norm_equivalence: corpus too small");
  NormEquivalenceFit fit;
  fit.ratio_lo = std::numeric_limits<double>::infinity();
  fit.ratio_hi = 0.0;
  const int band = std::min(16, dom->cutoff(0));
  const double sigma = band / 3.0;
  for (int i = 0; i < corpus; ++i) {
    SpectralField u = random_bandlimited(dom, band, seed + 1000003ull * i);
    u.coeff[0] = 0.0;
    for (std::int64_t f = 0; f < dom->mode_count(); ++f) {
      if (u.coeff[f] == 0.0) continue;
      const auto k = dom->unflatten_mode(f);
      double k2 = 0.0;
      for (int a = 0; a < dom->dim(); ++a) k2 += double(k[a]) * k[a];
      u.coeff[f] *= std::exp(-0.5 * k2 / (sigma * sigma));
    }
    const double spectral = spectral_half_seminorm_sq(u);
    const double gagliardo = gagliardo_seminorm_sq(to_nodal(u));
    if (!(gagliardo > 0.0) || !(spectral > 0.0)) continue;
    const double ratio = spectral / gagliardo;
    fit.ratio_lo = std::min(fit.ratio_lo, ratio);
    fit.ratio_hi = std::max(fit.ratio_hi, ratio);
  }
  fit.c1 = fit.ratio_lo;
  fit.c2 = std::sqrt(dom->lambda_first()) / fit.ratio_hi;
  return fit;
}

TransitionScan locate_transition(const SemilinearConfig& base, double lo,
                                 double hi, int points, int starts) {
  if (!(lo > 0.0) || !(hi > lo) || points < 2)
    throw std::invalid_argument("locate_transition: bad scan range");
  TransitionScan scan;
  const double step = std::pow(hi / lo, 1.0 / (points - 1));
  const double e_const =
      constant_solution_energy(base.p, base.domain->volume());
  double eps = hi;
  for (int i = 0; i < points; ++i, eps /= step) {
    SemilinearConfig cfg = base;
    cfg.eps = eps;
    bool nonconstant = false;
    for (const auto& rep : perturbed_restart_scan(cfg, starts)) {
      if (rep.accepted() && !rep.is_constant && rep.energy < e_const) {
        nonconstant = true;
        break;
      }
    }
    scan.tested.push_back(eps);
    scan.found_nonconstant.push_back(nonconstant);
    if (nonconstant && scan.transition_eps == 0.0) scan.transition_eps = eps;
  }
  return scan;
}

double KSParams::implied_eps() const {
  const double ratio = d2 / a;
  return mapping == KsMapping::linear ? ratio : ratio * ratio;
}

void KSParams::validate(int dim) const {
  if (!(d1 > 0.0) || !(d2 > 0.0) || !(chi > 0.0) || !(a > 0.0) || !(b > 0.0))
    throw std::invalid_argument("KSParams: coefficients must be > 0");
  if (!(mean_density > 0.0))
    throw std::invalid_argument("KSParams: prescribed mean must be > 0");
  const double p = exponent();
  const double p_max =
      (dim > 1) ? (dim + 1.0) / (dim - 1.0) : std::numeric_limits<double>::infinity();
  if (!(p > 1.0) || !(p < p_max))
    throw std::invalid_argument("KSParams: chi/D1 outside the subcritical range");
}

KsReconstruction keller_segel_reconstruct(const SpectralField& u,
                                          const KSParams& ks, int oversample) {
  ks.validate(u.domain->dim());
  const double q = ks.exponent();

  // Mean of u^q on the dealiased grid, matching the solver's nonlinearity.
  DomainPtr os = u.domain;
  if (oversample > 1) {
    std::vector<double> lengths(u.domain->dim());
    std::vector<int> grid(u.domain->dim()), cut(u.domain->dim());
    for (int a = 0; a < u.domain->dim(); ++a) {
      lengths[a] = u.domain->length(a);
      grid[a] = oversample * u.domain->grid_size(a);
      cut[a] = u.domain->cutoff(a);
    }
    os = RectDomain::build(u.domain->dim(), lengths, grid, cut);
  }
  const NodalField u_os = to_nodal(resample(u, os));
  const double mean_uq = integral_plus_pow(u_os, q) / u.domain->volume();
  if (!(mean_uq > 0.0))
    throw std::runtime_error("keller_segel_reconstruct: u^q carries no mass");

  KsReconstruction rec;
  rec.beta = (ks.b / ks.a) * ks.mean_density / mean_uq;
  rec.lambda = (ks.a / ks.b) * std::pow(rec.beta, 1.0 - q);

  SpectralField c_spec = u;
  c_spec.coeff *= rec.beta;
  rec.chem = to_nodal(c_spec);
  rec.rho = rec.chem;
  for (std::int64_t i = 0; i < rec.rho.values.size(); ++i) {
    const double c = rec.chem.values[i];
    rec.rho.values[i] = (c > 0.0) ? rec.lambda * std::pow(c, q) : 0.0;
  }

  // Chemical steady equation, spectral residual with rho dealiased the same
  // way the solver treats u_+^p.
  NodalField c_os = to_nodal(resample(c_spec, os));
  NodalField rho_os = c_os;
  for (std::int64_t i = 0; i < rho_os.values.size(); ++i) {
    const double c = c_os.values[i];
    rho_os.values[i] = (c > 0.0) ? rec.lambda * std::pow(c, q) : 0.0;
  }
  SpectralField rho_spec = resample(to_spectral(rho_os), u.domain);
  double rsq = 0.0;
  for (std::int64_t i = 0; i < c_spec.coeff.size(); ++i) {
    const double root = std::sqrt(u.domain->lambda_flat(i));
    const double r = ks.d2 * root * c_spec.coeff[i] + ks.a * c_spec.coeff[i] -
                     ks.b * rho_spec.coeff[i];
    rsq += r * r;
  }
  rec.chemical_residual = std::sqrt(rsq);

  // Flux identity D1 grad rho = chi rho grad log c, an algebraic identity
  // for rho = lambda c^{chi/D1}; measured nodally where c > 0, relative to
  // the flux magnitude so "zero to round-off" is meaningful for steep
  // spikes.
  double flux = 0.0, scale = 0.0;
  for (int axis = 0; axis < u.domain->dim(); ++axis) {
    NodalField dc = grad_nodal(c_spec, axis);
    for (std::int64_t i = 0; i < dc.values.size(); ++i) {
      const double c = rec.chem.values[i];
      if (!(c > 0.0)) continue;
      const double drho = rec.lambda * q * std::pow(c, q - 1.0) * dc.values[i];
      const double adv = ks.chi * rec.rho.values[i] * dc.values[i] / c;
      flux = std::max(flux, std::abs(ks.d1 * drho - adv));
      scale = std::max({scale, std::abs(ks.d1 * drho), std::abs(adv)});
    }
  }
  rec.flux_residual = (scale > 0.0) ? flux / scale : flux;
  return rec;
}

}  // namespace spikebox
