#include "spikebox/domain.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace spikebox {

namespace {
constexpr double kPi = std::numbers::pi;
}

std::shared_ptr<const RectDomain> RectDomain::build(int dim,
                                                    std::vector<double> lengths,
                                                    std::vector<int> grid_sizes,
                                                    std::vector<int> cutoffs) {
  if (dim < 1) throw std::invalid_argument("RectDomain: dim must be >= 1");
  if (static_cast<int>(lengths.size()) != dim ||
      static_cast<int>(grid_sizes.size()) != dim ||
      static_cast<int>(cutoffs.size()) != dim)
    throw std::invalid_argument("RectDomain: lengths/grid/cutoff size mismatch");
  for (int a = 0; a < dim; ++a) {
    if (!(lengths[a] > 0.0))
      throw std::invalid_argument("RectDomain: non-positive side length");
    if (grid_sizes[a] < 2)
      throw std::invalid_argument("RectDomain: grid size must be >= 2");
    if (cutoffs[a] < 1 || cutoffs[a] > grid_sizes[a])
      throw std::invalid_argument("RectDomain: cutoff must be in [1, grid size]");
  }

  auto dom = std::shared_ptr<RectDomain>(new RectDomain());
  dom->dim_ = dim;
  dom->lengths_ = std::move(lengths);
  dom->grid_ = std::move(grid_sizes);
  dom->cutoff_ = std::move(cutoffs);

  dom->volume_ = 1.0;
  dom->n_nodes_ = 1;
  dom->n_modes_ = 1;
  for (int a = 0; a < dim; ++a) {
    dom->volume_ *= dom->lengths_[a];
    dom->n_nodes_ *= dom->grid_[a];
    dom->n_modes_ *= dom->cutoff_[a];
  }
  dom->quad_weight_ = dom->volume_ / static_cast<double>(dom->n_nodes_);

  dom->analysis_.resize(dim);
  dom->synthesis_.resize(dim);
  dom->dsynthesis_.resize(dim);
  for (int a = 0; a < dim; ++a) {
    const int n = dom->grid_[a];
    const int m = dom->cutoff_[a];
    const double len = dom->lengths_[a];
    Eigen::MatrixXd syn(n, m), dsyn(n, m);
    for (int j = 0; j < n; ++j) {
      const double x = dom->node(a, j);
      for (int k = 0; k < m; ++k) {
        const double c = (k == 0) ? std::sqrt(1.0 / len) : std::sqrt(2.0 / len);
        const double w = kPi * k / len;
        syn(j, k) = c * std::cos(w * x);
        dsyn(j, k) = -c * w * std::sin(w * x);
      }
    }
    dom->synthesis_[a] = syn;
    dom->dsynthesis_[a] = dsyn;
    dom->analysis_[a] = (len / n) * syn.transpose();
  }

  dom->lambda_table_.resize(dom->n_modes_);
  std::vector<int> k(dim, 0);
  double lam_first = std::numeric_limits<double>::infinity();
  for (std::int64_t flat = 0; flat < dom->n_modes_; ++flat) {
    double lam = 0.0;
    for (int a = 0; a < dim; ++a) lam += dom->lambda1d(a, k[a]);
    dom->lambda_table_[flat] = lam;
    if (lam > 0.0) lam_first = std::min(lam_first, lam);
    for (int a = dim - 1; a >= 0; --a) {
      if (++k[a] < dom->cutoff_[a]) break;
      k[a] = 0;
    }
  }
  dom->lambda_first_ = std::isfinite(lam_first) ? lam_first : 0.0;
  return dom;
}

std::shared_ptr<const RectDomain> RectDomain::unit_box(int dim, int n,
                                                       double length) {
  return build(dim, std::vector<double>(dim, length), std::vector<int>(dim, n),
               std::vector<int>(dim, n));
}

double RectDomain::lambda1d(int axis, int k) const {
  const double w = kPi * k / lengths_[axis];
  return w * w;
}

double RectDomain::lambda(std::span<const int> k) const {
  double lam = 0.0;
  for (int a = 0; a < dim_; ++a) lam += lambda1d(a, k[a]);
  return lam;
}

std::int64_t RectDomain::flatten_mode(std::span<const int> k) const {
  std::int64_t flat = 0;
  for (int a = 0; a < dim_; ++a) {
    if (k[a] < 0 || k[a] >= cutoff_[a])
      throw std::out_of_range("flatten_mode: index outside cutoff");
    flat = flat * cutoff_[a] + k[a];
  }
  return flat;
}

std::vector<int> RectDomain::unflatten_mode(std::int64_t flat) const {
  std::vector<int> k(dim_);
  for (int a = dim_ - 1; a >= 0; --a) {
    k[a] = static_cast<int>(flat % cutoff_[a]);
    flat /= cutoff_[a];
  }
  return k;
}

std::vector<int> RectDomain::unflatten_node(std::int64_t flat) const {
  std::vector<int> j(dim_);
  for (int a = dim_ - 1; a >= 0; --a) {
    j[a] = static_cast<int>(flat % grid_[a]);
    flat /= grid_[a];
  }
  return j;
}

std::vector<double> RectDomain::node_point(std::int64_t flat) const {
  auto j = unflatten_node(flat);
  std::vector<double> x(dim_);
  for (int a = 0; a < dim_; ++a) x[a] = node(a, j[a]);
  return x;
}

double RectDomain::basis1d(int axis, int k, double x) const {
  const double len = lengths_[axis];
  const double c = (k == 0) ? std::sqrt(1.0 / len) : std::sqrt(2.0 / len);
  return c * std::cos(kPi * k * x / len);
}

double RectDomain::eigenfunction(std::span<const int> k,
                                 std::span<const double> x) const {
  double v = 1.0;
  for (int a = 0; a < dim_; ++a) v *= basis1d(a, k[a], x[a]);
  return v;
}

std::vector<std::vector<int>> RectDomain::lowest_modes(int count) const {
  std::vector<std::int64_t> order(n_modes_);
  for (std::int64_t i = 0; i < n_modes_; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::int64_t a, std::int64_t b) {
                     return lambda_table_[a] < lambda_table_[b];
                   });
  count = std::min<std::int64_t>(count, n_modes_);
  std::vector<std::vector<int>> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) out.push_back(unflatten_mode(order[i]));
  return out;
}

bool RectDomain::same_layout(const RectDomain& other) const {
  return dim_ == other.dim_ && lengths_ == other.lengths_ &&
         grid_ == other.grid_ && cutoff_ == other.cutoff_;
}

NodalField::NodalField(DomainPtr dom, Vector v)
    : domain(std::move(dom)), values(std::move(v)) {
  if (values.size() != domain->node_count())
    throw std::invalid_argument("NodalField: value count != node count");
}

NodalField NodalField::zero(DomainPtr dom) {
  Vector v = Vector::Zero(dom->node_count());
  return NodalField(std::move(dom), std::move(v));
}

SpectralField::SpectralField(DomainPtr dom, Vector c)
    : domain(std::move(dom)), coeff(std::move(c)) {
  if (coeff.size() != domain->mode_count())
    throw std::invalid_argument("SpectralField: coeff count != mode count");
}

SpectralField SpectralField::zero(DomainPtr dom) {
  Vector c = Vector::Zero(dom->mode_count());
  return SpectralField(std::move(dom), std::move(c));
}

double SpectralField::mean() const {
  return coeff[0] / std::sqrt(domain->volume());
}

namespace detail {

Vector apply_along_axis(const Eigen::MatrixXd& m, const Vector& data,
                        std::span<const int> shape, int axis) {
  const int in = static_cast<int>(m.cols());
  const int out = static_cast<int>(m.rows());
  std::int64_t pre = 1, post = 1;
  for (int a = 0; a < axis; ++a) pre *= shape[a];
  for (int a = axis + 1; a < static_cast<int>(shape.size()); ++a)
    post *= shape[a];

  Vector result(pre * out * post);
  using RowMat =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  for (std::int64_t p = 0; p < pre; ++p) {
    Eigen::Map<const RowMat> src(data.data() + p * in * post, in, post);
    Eigen::Map<RowMat> dst(result.data() + p * out * post, out, post);
    dst.noalias() = m * src;
  }
  return result;
}

}  // namespace detail

SpectralField to_spectral(const NodalField& f) {
  const auto& dom = *f.domain;
  std::vector<int> shape(dom.dim());
  for (int a = 0; a < dom.dim(); ++a) shape[a] = dom.grid_size(a);
  Vector data = f.values;
  for (int a = 0; a < dom.dim(); ++a) {
    data = detail::apply_along_axis(dom.analysis(a), data, shape, a);
    shape[a] = dom.cutoff(a);
  }
  return SpectralField(f.domain, std::move(data));
}

NodalField to_nodal(const SpectralField& u) {
  const auto& dom = *u.domain;
  std::vector<int> shape(dom.dim());
  for (int a = 0; a < dom.dim(); ++a) shape[a] = dom.cutoff(a);
  Vector data = u.coeff;
  for (int a = 0; a < dom.dim(); ++a) {
    data = detail::apply_along_axis(dom.synthesis(a), data, shape, a);
    shape[a] = dom.grid_size(a);
  }
  return NodalField(u.domain, std::move(data));
}

double quad_integral(const NodalField& f, double exponent) {
  if (!(exponent > 0.0)) throw std::invalid_argument("quad_integral: q <= 0");
  const double w = f.domain->quad_weight();
  double sum = 0.0;
  const double rounded = std::round(exponent);
  const bool integer_q = std::abs(exponent - rounded) < 1e-12;
  if (integer_q) {
    const int q = static_cast<int>(rounded);
    for (std::int64_t i = 0; i < f.values.size(); ++i) {
      double acc = 1.0;
      for (int j = 0; j < q; ++j) acc *= f.values[i];
      sum += acc;
    }
  } else {
    // Positive-part convention for fractional powers.
    for (std::int64_t i = 0; i < f.values.size(); ++i) {
      const double v = f.values[i];
      if (v > 0.0) sum += std::pow(v, exponent);
    }
  }
  return w * sum;
}

double quad_integral(const NodalField& f) {
  return f.domain->quad_weight() * f.values.sum();
}

double integral_plus_pow(const NodalField& f, double q) {
  if (!(q > 0.0)) throw std::invalid_argument("integral_plus_pow: q <= 0");
  double sum = 0.0;
  for (std::int64_t i = 0; i < f.values.size(); ++i)
    if (f.values[i] > 0.0) sum += std::pow(f.values[i], q);
  return f.domain->quad_weight() * sum;
}

SpectralField unit_mode(const DomainPtr& dom, std::span<const int> k) {
  SpectralField u = SpectralField::zero(dom);
  u.coeff[dom->flatten_mode(k)] = 1.0;
  return u;
}

NodalField eigenfunction_nodal(const DomainPtr& dom, std::span<const int> k) {
  return to_nodal(unit_mode(dom, k));
}

SpectralField random_bandlimited(const DomainPtr& dom, int band,
                                 std::uint64_t seed, double amplitude) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  SpectralField u = SpectralField::zero(dom);
  for (std::int64_t flat = 0; flat < dom->mode_count(); ++flat) {
    auto k = dom->unflatten_mode(flat);
    bool inside = true;
    for (int a = 0; a < dom->dim(); ++a) inside = inside && k[a] < band;
    if (inside) u.coeff[flat] = amplitude * gauss(rng);
  }
  return u;
}

SpectralField resample(const SpectralField& u, const DomainPtr& target) {
  const auto& src = *u.domain;
  if (src.dim() != target->dim())
    throw std::invalid_argument("resample: dimension mismatch");
  for (int a = 0; a < src.dim(); ++a)
    if (src.length(a) != target->length(a))
      throw std::invalid_argument("resample: side lengths differ");
  SpectralField out = SpectralField::zero(target);
  for (std::int64_t flat = 0; flat < src.mode_count(); ++flat) {
    auto k = src.unflatten_mode(flat);
    bool fits = true;
    for (int a = 0; a < src.dim(); ++a) fits = fits && k[a] < target->cutoff(a);
    if (fits) out.coeff[target->flatten_mode(k)] = u.coeff[flat];
  }
  return out;
}

double evaluate(const SpectralField& u, std::span<const double> x) {
  const auto& dom = *u.domain;
  double sum = 0.0;
  std::vector<int> k(dom.dim(), 0);
  for (std::int64_t flat = 0; flat < dom.mode_count(); ++flat) {
    if (u.coeff[flat] != 0.0) {
      double basis = 1.0;
      for (int a = 0; a < dom.dim(); ++a) basis *= dom.basis1d(a, k[a], x[a]);
      sum += u.coeff[flat] * basis;
    }
    for (int a = dom.dim() - 1; a >= 0; --a) {
      if (++k[a] < dom.cutoff(a)) break;
      k[a] = 0;
    }
  }
  return sum;
}

double lp_norm(const NodalField& f, double p) {
  if (std::isinf(p)) return f.values.cwiseAbs().maxCoeff();
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be >= 1");
  const double w = f.domain->quad_weight();
  double sum = 0.0;
  for (std::int64_t i = 0; i < f.values.size(); ++i)
    sum += std::pow(std::abs(f.values[i]), p);
  return std::pow(w * sum, 1.0 / p);
}

NodalField grad_nodal(const SpectralField& u, int axis) {
  const auto& dom = *u.domain;
  std::vector<int> shape(dom.dim());
  for (int a = 0; a < dom.dim(); ++a) shape[a] = dom.cutoff(a);
  Vector data = u.coeff;
  for (int a = 0; a < dom.dim(); ++a) {
    const auto& m = (a == axis) ? dom.dsynthesis(a) : dom.synthesis(a);
    data = detail::apply_along_axis(m, data, shape, a);
    shape[a] = dom.grid_size(a);
  }
  return NodalField(u.domain, std::move(data));
}

}  // namespace spikebox
