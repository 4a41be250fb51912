#include "spikebox/extension.hpp"

#include "spikebox/operators.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace spikebox;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("single-mode lift decays at the symbol rate") {
  auto dom = RectDomain::unit_box(2, 16);
  SpectralField u = unit_mode(dom, std::vector<int>{1, 0});
  ExtensionField v = extend(u, 1.0, {0.0, 0.5, 1.0});
  const auto flat = dom->flatten_mode(std::vector<int>{1, 0});
  CHECK(v.slab_coeff[0].coeff[flat] == doctest::Approx(1.0));
  CHECK(v.slab_coeff[1].coeff[flat] ==
        doctest::Approx(std::exp(-0.5 * kPi)).epsilon(1e-14));
  CHECK(v.slab_coeff[2].coeff[flat] ==
        doctest::Approx(std::exp(-kPi)).epsilon(1e-14));
}

TEST_CASE("constants persist through every level") {
  auto dom = RectDomain::unit_box(2, 16);
  SpectralField c = SpectralField::zero(dom);
  c.coeff[0] = 2.5;
  ExtensionField v = extend(c, 0.3, {0.0, 1.0, 4.0});
  for (const auto& slab : v.slabs)
    for (std::int64_t i = 0; i < slab.values.size(); ++i)
      CHECK(slab.values[i] == doctest::Approx(2.5 / std::sqrt(dom->volume()) *
                                              std::sqrt(dom->volume()))
                                  .epsilon(1e-13));
}

TEST_CASE("dirichlet energy closed form and cross-checks") {
  auto dom = RectDomain::unit_box(2, 32);

  SUBCASE("single mode") {
    SpectralField u = unit_mode(dom, std::vector<int>{1, 0});
    ExtensionField v = extend(u, 1.0, {0.0});
    CHECK(dirichlet_energy(v) == doctest::Approx(kPi).epsilon(1e-14));
  }
  SUBCASE("constants carry no energy") {
    SpectralField c = SpectralField::zero(dom);
    c.coeff[0] = 7.0;
    ExtensionField v = extend(c, 1.0, {0.0});
    CHECK(dirichlet_energy(v) == 0.0);
  }
  SUBCASE("truncated-cylinder quadrature within one percent") {
    SpectralField u = random_bandlimited(dom, 8, 31);
    u.coeff[0] = 0.0;
    const double eps = 0.4;
    const double y_max = 8.0 / std::sqrt(eps * dom->lambda_first());
    ExtensionField v = extend(u, eps, graded_levels(y_max, 160));
    const double quad = dirichlet_energy_quadrature(v);
    const double closed = dirichlet_energy(v);
    CHECK(quad == doctest::Approx(closed).epsilon(0.01));
  }
  SUBCASE("energy identity against the quarter power norm") {
    SpectralField u = random_bandlimited(dom, 12, 8);
    u.coeff[0] = 1.0;
    const double eps = 2.3;
    ExtensionField v = extend(u, eps, {0.0});
    const double quarter = frac_apply(u, eps, 0.25).l2_norm_sq();
    CHECK(dirichlet_energy(v) == doctest::Approx(quarter).epsilon(1e-10));
  }
}

TEST_CASE("difference quotient realizes the half power at first order") {
  auto dom = RectDomain::unit_box(2, 24);

  SUBCASE("scalar Taylor bound per mode") {
    SpectralField u = unit_mode(dom, std::vector<int>{3, 1});
    const double eps = 0.8;
    const double lam = dom->lambda(std::vector<int>{3, 1});
    const double h = 1e-3;
    const double res = dtn_residual(u, eps, h);
    CHECK(res <= 0.5 * h * eps * lam + 1e-12);
  }
  SUBCASE("constants have zero residual") {
    SpectralField c = SpectralField::zero(dom);
    c.coeff[0] = 1.0;
    CHECK(dtn_residual(c, 1.0, 1e-3) == 0.0);
  }
  SUBCASE("Richardson halving") {
    SpectralField u = random_bandlimited(dom, 6, 12);
    const double eps = 0.5;
    const double r1 = dtn_residual(u, eps, 5e-4);
    const double r2 = dtn_residual(u, eps, 1e-3);
    CHECK(r1 / r2 == doctest::Approx(0.5).epsilon(0.05));
  }
}

TEST_CASE("trace inequality gap") {
  auto dom = RectDomain::unit_box(2, 24);
  SpectralField u = random_bandlimited(dom, 6, 5);
  u.coeff[0] = 0.7;
  const double eps = 0.9;
  ExtensionField v = extend(u, eps, {0.0});

  SUBCASE("exact lifts sit at equality") {
    CHECK(std::abs(trace_inequality_gap(v)) < 1e-10);
  }
  SUBCASE("zero-trace bumps add energy") {
    ZeroTraceBump bump;
    bump.shape = unit_mode(dom, std::vector<int>{2, 0});
    bump.height = 2.0;
    bump.scale = 0.5;
    const double gap = trace_inequality_gap(v, bump);
    CHECK(gap > 0.0);
    CHECK(gap == doctest::Approx(bump_energy(bump, eps)).epsilon(1e-6));
  }
  SUBCASE("one-parameter scan is minimized at zero") {
    ZeroTraceBump bump;
    bump.shape = unit_mode(dom, std::vector<int>{0, 3});
    bump.height = 1.0;
    double best_t = -1.0, best = 1e300;
    for (double t = -1.0; t <= 1.0001; t += 0.125) {
      ZeroTraceBump b = bump;
      b.scale = t;
      const double g = trace_inequality_gap(v, b);
      CHECK(g >= -1e-12);
      if (g < best) {
        best = g;
        best_t = t;
      }
    }
    CHECK(best_t == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("minimality among competitors with the same trace") {
  auto dom = RectDomain::unit_box(2, 16);
  SpectralField u = random_bandlimited(dom, 5, 99);
  const double eps = 0.6;
  ExtensionField v = extend(u, eps, {0.0});
  const double base = dirichlet_energy(v);
  for (int i = 0; i < 10; ++i) {
    ZeroTraceBump bump;
    bump.shape = random_bandlimited(dom, 6, 300 + i);
    bump.height = 0.5 + 0.2 * i;
    bump.scale = 0.3;
    // competitor energy = gap + trace seminorm; must dominate the lift
    const double competitor = trace_inequality_gap(v, bump) + base;
    CHECK(competitor >= base - 1e-12);
  }
}

TEST_CASE("subordination route for the lift") {
  auto dom = RectDomain::unit_box(2, 24);
  SpectralField u = random_bandlimited(dom, 8, 44);
  u.coeff[0] = 1.1;
  const double eps = 0.7;
  for (double y : {0.05, 0.3, 1.5}) {
    SpectralField via_heat = extension_via_heat_quadrature(u, eps, y);
    SpectralField direct = u;
    for (std::int64_t i = 0; i < direct.coeff.size(); ++i) {
      const double lam = dom->lambda_flat(i);
      if (lam > 0.0) direct.coeff[i] *= std::exp(-y * std::sqrt(eps * lam));
    }
    const double rel =
        (via_heat.coeff - direct.coeff).norm() / direct.coeff.norm();
    CHECK(rel < 1e-6);
  }
}

TEST_CASE("mean invariance and slab monotonicity") {
  auto dom = RectDomain::unit_box(2, 16);
  SpectralField u = random_bandlimited(dom, 8, 3);
  u.coeff[0] = 2.0;
  ExtensionField v = extend(u, 0.5, graded_levels(6.0, 24));
  double prev = 1e300;
  for (std::size_t j = 0; j < v.slab_coeff.size(); ++j) {
    CHECK(v.slab_coeff[j].mean() == doctest::Approx(u.mean()).epsilon(1e-13));
    const double zm =
        v.slab_coeff[j].l2_norm_sq() -
        v.slab_coeff[j].coeff[0] * v.slab_coeff[j].coeff[0];
    CHECK(zm <= prev + 1e-13);
    prev = zm;
  }
}
