#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace spikebox {

using Vector = Eigen::VectorXd;

/// Separable box domain with closed-form Neumann eigendata.
///
/// Grid nodes are midpoints x_j = L*(j+1/2)/N so the per-axis cosine
/// transform is exactly unitary on the retained modes. Eigenpairs of the
/// Neumann Laplacian are tensor cosines with
///   lambda_k = pi^2 * sum_i k_i^2 / L_i^2,  lambda_0 = 0, phi_0 = 1/sqrt(|Omega|).
///
/// Immutable after construction; safe to share across threads.
class RectDomain {
public:
  static std::shared_ptr<const RectDomain> build(int dim,
                                                 std::vector<double> lengths,
                                                 std::vector<int> grid_sizes,
                                                 std::vector<int> cutoffs);

  /// Convenience: cube [0,L]^dim with uniform grid and full cutoff.
  static std::shared_ptr<const RectDomain> unit_box(int dim, int n,
                                                    double length = 1.0);

  int dim() const { return dim_; }
  double length(int axis) const { return lengths_[axis]; }
  int grid_size(int axis) const { return grid_[axis]; }
  int cutoff(int axis) const { return cutoff_[axis]; }
  double volume() const { return volume_; }
  std::int64_t node_count() const { return n_nodes_; }
  std::int64_t mode_count() const { return n_modes_; }

  double node(int axis, int j) const {
    return lengths_[axis] * (j + 0.5) / grid_[axis];
  }
  double spacing(int axis) const { return lengths_[axis] / grid_[axis]; }
  /// Uniform midpoint quadrature weight per node, prod_i L_i/N_i.
  double quad_weight() const { return quad_weight_; }

  double lambda1d(int axis, int k) const;
  /// Eigenvalue of a multi-index.
  double lambda(std::span<const int> k) const;
  /// Eigenvalue of the flat (row-major over cutoffs) mode index.
  double lambda_flat(std::int64_t flat) const { return lambda_table_[flat]; }
  /// Smallest nonzero eigenvalue.
  double lambda_first() const { return lambda_first_; }

  std::int64_t flatten_mode(std::span<const int> k) const;
  std::vector<int> unflatten_mode(std::int64_t flat) const;
  std::vector<int> unflatten_node(std::int64_t flat) const;
  /// Coordinates of a flat node index.
  std::vector<double> node_point(std::int64_t flat) const;

  /// 1D orthonormal eigenfunction factor, c_k cos(pi k x / L).
  double basis1d(int axis, int k, double x) const;
  /// phi_k(x) for multi-index k at an arbitrary point.
  double eigenfunction(std::span<const int> k, std::span<const double> x) const;

  /// Analysis matrix per axis (cutoff x grid): quadrature-weighted cosine
  /// transform rows. Exactly inverts synthesis on band-limited data.
  const Eigen::MatrixXd& analysis(int axis) const { return analysis_[axis]; }
  /// Synthesis matrix per axis (grid x cutoff).
  const Eigen::MatrixXd& synthesis(int axis) const { return synthesis_[axis]; }
  /// d/dx of the synthesis basis, for nodal gradients of spectral fields.
  const Eigen::MatrixXd& dsynthesis(int axis) const { return dsynthesis_[axis]; }

  /// Lowest `count` multi-indices ordered by eigenvalue (ties by index).
  std::vector<std::vector<int>> lowest_modes(int count) const;

  bool same_layout(const RectDomain& other) const;

private:
  RectDomain() = default;

  int dim_ = 0;
  std::vector<double> lengths_;
  std::vector<int> grid_;
  std::vector<int> cutoff_;
  double volume_ = 0.0;
  double quad_weight_ = 0.0;
  std::int64_t n_nodes_ = 0;
  std::int64_t n_modes_ = 0;
  double lambda_first_ = 0.0;
  std::vector<double> lambda_table_;
  std::vector<Eigen::MatrixXd> analysis_, synthesis_, dsynthesis_;
};

using DomainPtr = std::shared_ptr<const RectDomain>;

/// Function sampled at the midpoint grid nodes, flat row-major storage.
struct NodalField {
  DomainPtr domain;
  Vector values;

  NodalField() = default;
  NodalField(DomainPtr dom, Vector v);
  static NodalField zero(DomainPtr dom);
};

/// Function represented by coefficients on the cosine eigenbasis.
/// coeff[0] carries the mean: u_Omega = coeff[0] / sqrt(|Omega|).
struct SpectralField {
  DomainPtr domain;
  Vector coeff;

  SpectralField() = default;
  SpectralField(DomainPtr dom, Vector c);
  static SpectralField zero(DomainPtr dom);

  double mean() const;
  double l2_norm_sq() const { return coeff.squaredNorm(); }
};

SpectralField to_spectral(const NodalField& f);
NodalField to_nodal(const SpectralField& u);

/// Midpoint-rule integral of f^q (integer q, signed) or of the positive
/// part f_+^q (non-integer q). Requires q > 0.
double quad_integral(const NodalField& f, double exponent);

/// Plain midpoint integral of f.
double quad_integral(const NodalField& f);

/// Midpoint integral of the positive part, int f_+^q, for any q > 0.
double integral_plus_pow(const NodalField& f, double q);

/// Sample a callable over the grid.
template <typename F>
NodalField sample(const DomainPtr& dom, F&& f) {
  Vector v(dom->node_count());
  std::vector<double> x(dom->dim());
  std::vector<int> idx(dom->dim(), 0);
  for (std::int64_t flat = 0; flat < dom->node_count(); ++flat) {
    for (int a = 0; a < dom->dim(); ++a) x[a] = dom->node(a, idx[a]);
    v[flat] = f(std::span<const double>(x));
    for (int a = dom->dim() - 1; a >= 0; --a) {
      if (++idx[a] < dom->grid_size(a)) break;
      idx[a] = 0;
    }
  }
  return NodalField(dom, std::move(v));
}

/// Spectral field with a single unit coefficient at multi-index k.
SpectralField unit_mode(const DomainPtr& dom, std::span<const int> k);

/// phi_k sampled on the grid.
NodalField eigenfunction_nodal(const DomainPtr& dom, std::span<const int> k);

/// Seeded random field with i.i.d. normal coefficients on modes with
/// k_i < band per axis, zero elsewhere. Deterministic for a fixed seed.
SpectralField random_bandlimited(const DomainPtr& dom, int band,
                                 std::uint64_t seed, double amplitude = 1.0);

/// Copy coefficients into a field on `target` (same lengths and dim);
/// modes outside the target cutoff are dropped, missing ones are zero.
SpectralField resample(const SpectralField& u, const DomainPtr& target);

/// Nodal values of d(u)/dx_axis, exact for retained modes.
NodalField grad_nodal(const SpectralField& u, int axis);

/// Pointwise synthesis at an arbitrary point (O(modes * dim)).
double evaluate(const SpectralField& u, std::span<const double> x);

/// Quadrature L^p norm; p = infinity gives the nodal max of |f|.
double lp_norm(const NodalField& f, double p);

namespace detail {
/// Contract a flat row-major tensor with a matrix along one axis.
Vector apply_along_axis(const Eigen::MatrixXd& m, const Vector& data,
                        std::span<const int> shape, int axis);
}  // namespace detail

}  // namespace spikebox
