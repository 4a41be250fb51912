#include "spikebox/domain.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>

using namespace spikebox;

namespace {

constexpr double kPi = std::numbers::pi;

// Independent oracle: midpoint-cell finite-difference Neumann Laplacian on
// [0, len]; eigenvalues converge at second order to (pi k / len)^2.
double fd_neumann_eigenvalue(double len, int cells, int which) {
  const double h = len / cells;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(cells, cells);
  for (int i = 0; i < cells; ++i) {
    if (i > 0) {
      a(i, i) += 1.0;
      a(i, i - 1) -= 1.0;
    }
    if (i + 1 < cells) {
      a(i, i) += 1.0;
      a(i, i + 1) -= 1.0;
    }
  }
  a /= h * h;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  return es.eigenvalues()[which];
}

}  // namespace

TEST_CASE("eigenvalues of the unit square") {
  auto dom = RectDomain::unit_box(2, 8);
  CHECK(dom->lambda(std::vector<int>{1, 0}) == doctest::Approx(kPi * kPi).epsilon(1e-14));
  CHECK(dom->lambda(std::vector<int>{0, 0}) == 0.0);
  // phi_0 = 1/sqrt(|Omega|), constant
  NodalField phi0 = eigenfunction_nodal(dom, std::vector<int>{0, 0});
  for (int i = 0; i < phi0.values.size(); ++i)
    CHECK(phi0.values[i] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("anisotropic box eigenvalue against finite differences") {
  auto dom = RectDomain::build(2, {2.0, 1.0}, {16, 16}, {16, 16});
  const double lam = dom->lambda(std::vector<int>{1, 0});
  // frozen analytic value pi^2/4
  CHECK(lam == doctest::Approx(2.4674011002723395).epsilon(1e-14));

  const double fd_small = fd_neumann_eigenvalue(2.0, 200, 1);
  const double fd_large = fd_neumann_eigenvalue(2.0, 400, 1);
  CHECK(fd_large == doctest::Approx(lam).epsilon(1e-4));
  // second-order convergence of the oracle itself
  const double err_small = std::abs(fd_small - lam);
  const double err_large = std::abs(fd_large - lam);
  CHECK(err_small / err_large == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("transforms are exact on band-limited data") {
  auto dom = RectDomain::unit_box(2, 16);

  SUBCASE("constant maps to the zero mode") {
    NodalField f = sample(dom, [](std::span<const double>) { return 3.25; });
    SpectralField u = to_spectral(f);
    CHECK(u.coeff[0] == doctest::Approx(3.25 * std::sqrt(dom->volume())).epsilon(1e-14));
    for (std::int64_t i = 1; i < u.coeff.size(); ++i)
      CHECK(std::abs(u.coeff[i]) < 1e-13);
  }

  SUBCASE("sampled eigenfunction has a unit coefficient") {
    NodalField f = eigenfunction_nodal(dom, std::vector<int>{1, 0});
    SpectralField u = to_spectral(f);
    const auto flat = dom->flatten_mode(std::vector<int>{1, 0});
    CHECK(u.coeff[flat] == doctest::Approx(1.0).epsilon(1e-13));
    for (std::int64_t i = 0; i < u.coeff.size(); ++i)
      if (i != flat) CHECK(std::abs(u.coeff[i]) < 1e-12);
  }

  SUBCASE("round trip and unitarity on random band-limited fields") {
    for (int trial = 0; trial < 5; ++trial) {
      SpectralField u = random_bandlimited(dom, 16, 100 + trial);
      NodalField f = to_nodal(u);
      SpectralField back = to_spectral(f);
      const double rel = (back.coeff - u.coeff).norm() / u.coeff.norm();
      CHECK(rel < 1e-12);
      const double l2_quad = std::sqrt(quad_integral(f, 2.0));
      const double l2_spec = std::sqrt(u.l2_norm_sq());
      CHECK(l2_quad == doctest::Approx(l2_spec).epsilon(1e-12));
    }
  }
}

TEST_CASE("discrete second differences recover the eigenvalue at rate 2") {
  const std::vector<int> k{2, 1};
  auto residual_at = [&](int n) {
    auto dom = RectDomain::unit_box(2, n);
    NodalField phi = eigenfunction_nodal(dom, k);
    const double lam = dom->lambda(k);
    // -Delta by 5-point differences with reflecting ghosts, max residual
    double worst = 0.0;
    const int nx = dom->grid_size(0), ny = dom->grid_size(1);
    const double h = dom->spacing(0);
    auto at = [&](int i, int j) {
      i = std::clamp(i, -1, nx);
      j = std::clamp(j, -1, ny);
      const int ii = (i < 0) ? 0 : (i >= nx ? nx - 1 : i);
      const int jj = (j < 0) ? 0 : (j >= ny ? ny - 1 : j);
      return phi.values[ii * ny + jj];
    };
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < ny; ++j) {
        const double lap = (4.0 * at(i, j) - at(i - 1, j) - at(i + 1, j) -
                            at(i, j - 1) - at(i, j + 1)) /
                           (h * h);
        worst = std::max(worst, std::abs(lap - lam * at(i, j)));
      }
    return worst;
  };
  const double r1 = residual_at(32);
  const double r2 = residual_at(64);
  CHECK(r1 / r2 == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("quadrature") {
  auto dom = RectDomain::unit_box(2, 32);

  SUBCASE("constant cube") {
    NodalField f = sample(dom, [](std::span<const double>) { return 1.0; });
    CHECK(quad_integral(f, 3.0) == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("cosine square integrates to one half") {
    NodalField f = sample(dom, [](std::span<const double> x) {
      return std::cos(kPi * x[0]);
    });
    CHECK(quad_integral(f, 2.0) == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("normalized eigenfunction against a refined grid") {
    NodalField f = eigenfunction_nodal(dom, std::vector<int>{1, 1});
    const double coarse = quad_integral(f, 2.0);
    auto fine = RectDomain::unit_box(2, 512);
    NodalField g = eigenfunction_nodal(fine, std::vector<int>{1, 1});
    const double refined = quad_integral(g, 2.0);
    CHECK(coarse == doctest::Approx(refined).epsilon(1e-10));
    CHECK(coarse == doctest::Approx(1.0).epsilon(1e-10));
  }
  SUBCASE("positive-part convention for fractional exponents") {
    // kinked integrand: evaluate on a fine grid where the midpoint rule has
    // converged through the |.|^{3/2} crease
    auto fine = RectDomain::unit_box(2, 512);
    NodalField f = sample(fine, [](std::span<const double> x) {
      return std::cos(kPi * x[0]);
    });
    const double val = quad_integral(f, 1.5);
    CHECK(val > 0.0);
    // analytic: int_0^{1/2} cos(pi x)^{3/2} dx
    CHECK(val == doctest::Approx(0.27820894722196393).epsilon(1e-5));
  }
}

TEST_CASE("mean extraction matches the quadrature average") {
  auto dom = RectDomain::build(2, {2.0, 3.0}, {24, 24}, {24, 24});
  SpectralField u = random_bandlimited(dom, 10, 17);
  u.coeff[0] = 4.2;
  NodalField f = to_nodal(u);
  CHECK(u.mean() ==
        doctest::Approx(quad_integral(f) / dom->volume()).epsilon(1e-12));
}

TEST_CASE("lowest modes are ordered by eigenvalue") {
  auto dom = RectDomain::unit_box(2, 16);
  auto modes = dom->lowest_modes(20);
  double prev = -1.0;
  for (const auto& k : modes) {
    const double lam = dom->lambda(k);
    CHECK(lam >= prev);
    prev = lam;
  }
  CHECK(modes.front() == std::vector<int>{0, 0});
}

TEST_CASE("build_domain rejects bad input") {
  CHECK_THROWS_AS(RectDomain::build(2, {1.0, -1.0}, {8, 8}, {8, 8}),
                  std::invalid_argument);
  CHECK_THROWS_AS(RectDomain::build(2, {1.0, 1.0}, {8}, {8, 8}),
                  std::invalid_argument);
  CHECK_THROWS_AS(RectDomain::build(2, {1.0, 1.0}, {8, 8}, {9, 8}),
                  std::invalid_argument);
  CHECK_THROWS_AS(RectDomain::build(2, {1.0, 1.0}, {1, 8}, {1, 8}),
                  std::invalid_argument);
}

TEST_CASE("three dimensional round trip") {
  auto dom = RectDomain::build(3, {1.0, 1.5, 0.5}, {10, 12, 8}, {10, 12, 8});
  SpectralField u = random_bandlimited(dom, 6, 3);
  SpectralField back = to_spectral(to_nodal(u));
  CHECK((back.coeff - u.coeff).norm() / u.coeff.norm() < 1e-12);
}

TEST_CASE("partial cutoff keeps the retained band exact") {
  auto dom = RectDomain::build(2, {1.0, 1.0}, {32, 32}, {12, 10});
  SpectralField u = random_bandlimited(dom, 10, 21);
  SpectralField back = to_spectral(to_nodal(u));
  CHECK((back.coeff - u.coeff).norm() / u.coeff.norm() < 1e-12);
  // synthesis on the finer grid agrees with the coarse-cutoff field
  auto full = RectDomain::unit_box(2, 32);
  NodalField wide = to_nodal(resample(u, full));
  NodalField narrow = to_nodal(u);
  CHECK((wide.values - narrow.values).cwiseAbs().maxCoeff() < 1e-12);
}
