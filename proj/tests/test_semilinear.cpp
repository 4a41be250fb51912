#include "spikebox/semilinear.hpp"

#include "spikebox/operators.hpp"

#include <doctest.h>

#include <cmath>

using namespace spikebox;

namespace {

SpectralField constant_field(const DomainPtr& dom, double value) {
  SpectralField u = SpectralField::zero(dom);
  u.coeff[0] = value * std::sqrt(dom->volume());
  return u;
}

}  // namespace

TEST_CASE("energy values") {
  auto dom = RectDomain::unit_box(2, 32);

  SUBCASE("constant one, p = 3") {
    SpectralField one = constant_field(dom, 1.0);
    CHECK(energy(one, 0.7, 3.0) == doctest::Approx(0.25).epsilon(1e-14));
  }
  SUBCASE("zero field") {
    CHECK(energy(SpectralField::zero(dom), 0.7, 2.0) == 0.0);
  }
  SUBCASE("constant branch energy does not see eps") {
    SpectralField one = constant_field(dom, 1.0);
    CHECK(energy(one, 1e-3, 2.0) == doctest::Approx(energy(one, 50.0, 2.0)));
    CHECK(energy(one, 1e-3, 2.0) ==
          doctest::Approx(constant_solution_energy(2.0, dom->volume())));
  }
  SUBCASE("negative mode sees only its positive part") {
    SpectralField u = unit_mode(dom, std::vector<int>{1, 0});
    u.coeff *= -1.0;
    const double eps = 1.0;
    const double p = 2.0;
    // oracle: quadrature of max(-phi,0)^3 on a refined grid
    auto fine = RectDomain::unit_box(2, 256);
    NodalField phi = eigenfunction_nodal(fine, std::vector<int>{1, 0});
    phi.values *= -1.0;
    const double mass = integral_plus_pow(phi, 3.0);
    // frozen: 4 sqrt(2) / (3 pi)
    CHECK(mass == doctest::Approx(0.6002108774380708).epsilon(1e-9));
    const double lam = dom->lambda(std::vector<int>{1, 0});
    const double expected = 0.5 * (1.0 + std::sqrt(eps * lam)) - mass / 3.0;
    CHECK(energy(u, eps, p) == doctest::Approx(expected).epsilon(1e-6));
  }
}

TEST_CASE("euler-lagrange residual") {
  auto dom = RectDomain::unit_box(2, 32);
  const double p = 2.0;

  CHECK(euler_lagrange_residual(constant_field(dom, 1.0), 0.8, p).coeff.norm() <
        1e-12);
  CHECK(euler_lagrange_residual(SpectralField::zero(dom), 0.8, p).coeff.norm() ==
        0.0);
}

TEST_CASE("gradient is the H_eps representative of the derivative") {
  auto dom = RectDomain::unit_box(2, 24);
  const double eps = 0.31, p = 2.0;

  CHECK(grad_energy(constant_field(dom, 1.0), eps, p).coeff.norm() < 1e-13);
  CHECK(grad_energy(SpectralField::zero(dom), eps, p).coeff.norm() == 0.0);

  for (int i = 0; i < 6; ++i) {
    SpectralField u = random_bandlimited(dom, 8, 60 + i);
    SpectralField w = random_bandlimited(dom, 8, 760 + i);
    const double inner = h_eps_inner(grad_energy(u, eps, p), w, eps);
    auto fd = [&](double d) {
      SpectralField up = u, um = u;
      up.coeff += d * w.coeff;
      um.coeff -= d * w.coeff;
      return (energy(up, eps, p) - energy(um, eps, p)) / (2.0 * d);
    };
    const double e3 = std::abs(fd(1e-3) - inner);
    const double e4 = std::abs(fd(1e-4) - inner);
    // second order: shrinking delta tenfold cuts the error a hundredfold
    CHECK(e4 < 0.05 * e3 + 1e-14);
  }
}

TEST_CASE("nehari projection") {
  auto dom = RectDomain::unit_box(2, 24);
  const double eps = 0.5, p = 2.0;

  SUBCASE("constant one is already projected") {
    CHECK(nehari_scale(constant_field(dom, 1.0), eps, p) ==
          doctest::Approx(1.0).epsilon(1e-13));
  }
  SUBCASE("scaled field reprojects to the manifold") {
    SpectralField u = random_bandlimited(dom, 6, 17);
    u.coeff[0] = 3.0;
    const double t = nehari_scale(u, eps, p);
    SpectralField v = u;
    v.coeff *= t;
    const double h = h_eps_norm_sq(v, eps);
    // the constraint is posed with the dealiased nonlinearity, so measure
    // the mass on the same twice-oversampled grid
    auto os = RectDomain::build(2, {1.0, 1.0}, {48, 48}, {24, 24});
    const double mass = integral_plus_pow(to_nodal(resample(v, os)), p + 1.0);
    CHECK(std::abs(h - mass) / h < 1e-10);
  }
  SUBCASE("fields with no positive part cannot project") {
    SpectralField u = constant_field(dom, -1.0);
    CHECK_THROWS_AS(nehari_scale(u, eps, p), std::domain_error);
  }
}

TEST_CASE("tent initializer") {
  auto dom = RectDomain::unit_box(2, 64);
  const double eps = 0.01;
  SpectralField tent = tent_initializer(dom, eps);
  CHECK(tent.mean() > 0.0);
  NodalField tn = to_nodal(tent);
  std::int64_t arg = 0;
  tn.values.maxCoeff(&arg);
  const auto peak = dom->node_point(arg);
  CHECK(std::abs(peak[0] - 0.5) < 0.1);
  CHECK(peak[1] < 0.1);  // spike seeded at the boundary midpoint
}

TEST_CASE("small-eps solve produces a positive nonconstant critical point") {
  SemilinearConfig cfg;
  cfg.domain = RectDomain::unit_box(2, 48);
  cfg.eps = 0.05;
  cfg.p = 2.0;
  SolutionReport rep = solve(cfg);

  REQUIRE(rep.accepted());
  CHECK(!rep.is_constant);
  CHECK(rep.residual_norm < 1e-8);
  CHECK(rep.nehari_defect < 1e-8 * h_eps_norm_sq(rep.u, cfg.eps));
  CHECK(rep.inf_u > 0.0);
  CHECK(rep.energy <
        constant_solution_energy(cfg.p, cfg.domain->volume()));

  SUBCASE("doubling breaks criticality") {
    SpectralField doubled = rep.u;
    doubled.coeff *= 2.0;
    CHECK(euler_lagrange_residual(doubled, cfg.eps, cfg.p).coeff.norm() > 1e-3);
  }
}

TEST_CASE("large-eps solve lands on the constant") {
  SemilinearConfig cfg;
  cfg.domain = RectDomain::unit_box(2, 32);
  cfg.eps = 100.0;
  cfg.p = 2.0;
  SolutionReport rep = solve(cfg);
  REQUIRE(rep.accepted());
  CHECK(rep.is_constant);
  CHECK(rep.sup_u == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(rep.inf_u == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("restart scan is deterministic under a fixed seed") {
  SemilinearConfig cfg;
  cfg.domain = RectDomain::unit_box(2, 24);
  cfg.eps = 0.2;
  cfg.p = 2.0;
  cfg.seed = 31;
  auto a = perturbed_restart_scan(cfg, 3);
  auto b = perturbed_restart_scan(cfg, 3);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK((a[i].u.coeff - b[i].u.coeff).norm() == 0.0);
    CHECK(a[i].energy == b[i].energy);
  }
}

TEST_CASE("dense and matrix-free Newton agree") {
  // same problem squeezed under and over the dense-solve threshold
  SemilinearConfig small;
  small.domain = RectDomain::build(2, {1.0, 1.0}, {48, 48}, {48, 48});
  small.eps = 0.1;
  small.p = 2.0;
  SolutionReport a = solve(small);  // 2304 modes: dense path

  SemilinearConfig big = small;
  big.domain = RectDomain::build(2, {1.0, 1.0}, {80, 80}, {80, 80});
  SolutionReport b = solve(big);  // 6400 modes: iterative path

  REQUIRE(a.accepted());
  REQUIRE(b.accepted());
  CHECK(a.energy == doctest::Approx(b.energy).epsilon(5e-3));
}

TEST_CASE("three dimensional spike below the bifurcation threshold") {
  // nonconstant solutions in 3d bifurcate at eps = (p-1)^2 / lambda_1
  SemilinearConfig cfg;
  cfg.domain = RectDomain::unit_box(3, 44);
  cfg.p = 1.6;
  cfg.eps = 0.02;
  cfg.tent_center = {0.0, 0.0, 0.0};
  SolutionReport rep = solve(cfg);
  REQUIRE(rep.accepted());
  CHECK(!rep.is_constant);
  CHECK(rep.inf_u > 0.0);
  CHECK(rep.sup_u > 2.0);
  CHECK(rep.energy < constant_solution_energy(cfg.p, cfg.domain->volume()));
  CHECK(rep.residual_norm < 1e-8);
}

TEST_CASE("config validation") {
  SemilinearConfig cfg;
  cfg.domain = RectDomain::unit_box(2, 16);
  cfg.eps = 0.1;
  cfg.p = 3.0;  // critical trace exponent in 2d, rejected
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.p = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.p = 2.0;
  cfg.eps = -1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
