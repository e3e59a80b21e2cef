#include "phase2vec/lattice.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "phase2vec/errors.hpp"

namespace p2v {

namespace {
using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void validate(const Lattice& l) {
  if (l.q != 2 && l.q != 3) throw config_error("lattice: q must be 2 or 3");
  if (l.n < 2) throw config_error("lattice: n must be >= 2");
  for (int a = 0; a < l.q; ++a)
    if (!(l.bounds[static_cast<std::size_t>(a)][0] < l.bounds[static_cast<std::size_t>(a)][1]))
      throw config_error("lattice: bounds must satisfy lo < hi");
}
}  // namespace

Lattice::Lattice(int q_, int n_) : q(q_), n(n_) { validate(*this); }

Lattice::Lattice(int q_, int n_, std::array<std::array<double, 2>, 3> bounds_)
    : q(q_), n(n_), bounds(bounds_) {
  validate(*this);
}

std::int64_t Lattice::points() const {
  std::int64_t p = 1;
  for (int a = 0; a < q; ++a) p *= n;
  return p;
}

double Lattice::coord(int axis, int i) const {
  const auto& b = bounds[static_cast<std::size_t>(axis)];
  return b[0] + (b[1] - b[0]) * static_cast<double>(i) / static_cast<double>(n - 1);
}

void Lattice::point_at(std::int64_t idx, std::span<double> out) const {
  for (int a = q - 1; a >= 0; --a) {
    out[static_cast<std::size_t>(a)] = coord(a, static_cast<int>(idx % n));
    idx /= n;
  }
}

std::int64_t Lattice::cell_of(std::span<const double> x) const {
  std::int64_t idx = 0;
  for (int a = 0; a < q; ++a) {
    const auto& b = bounds[static_cast<std::size_t>(a)];
    const double u = (x[static_cast<std::size_t>(a)] - b[0]) / (b[1] - b[0]);
    if (u < 0.0 || u > 1.0) return -1;
    std::int64_t i = static_cast<std::int64_t>(std::floor(u * n));
    if (i >= n) i = n - 1;  // x exactly at the upper bound
    idx = idx * n + i;
  }
  return idx;
}

bool Lattice::operator==(const Lattice& o) const {
  if (q != o.q || n != o.n) return false;
  for (int a = 0; a < q; ++a)
    if (bounds[static_cast<std::size_t>(a)] != o.bounds[static_cast<std::size_t>(a)]) return false;
  return true;
}

bool VectorField::all_finite() const {
  for (double v : velocities)
    if (!std::isfinite(v)) return false;
  return true;
}

double VectorField::component_stddev() const {
  const std::size_t n = velocities.size();
  if (n == 0) return 0.0;
  double mean = 0.0;
  for (double v : velocities) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : velocities) var += (v - mean) * (v - mean);
  return std::sqrt(var / static_cast<double>(n));
}

Tensor dictionary_matrix(const MonomialDictionary& dict, const Lattice& lattice) {
  if (dict.q != lattice.q) throw dimension_error("dictionary/lattice dimension mismatch");
  const std::int64_t N = lattice.points();
  const int p = dict.size();
  Tensor phi({N, p});
  std::vector<double> x(static_cast<std::size_t>(lattice.q));
  for (std::int64_t i = 0; i < N; ++i) {
    lattice.point_at(i, x);
    const std::vector<double> row = eval_dictionary(dict, x);
    for (int j = 0; j < p; ++j) phi[i * p + j] = row[static_cast<std::size_t>(j)];
  }
  return phi;
}

VectorField eval_on_lattice(const CoefficientMatrix& coeffs, const Tensor& phi,
                            const Lattice& lattice) {
  const std::int64_t N = lattice.points();
  if (phi.dim(0) != N || phi.dim(1) != coeffs.p)
    throw dimension_error("dictionary matrix does not match lattice/coefficients");
  if (coeffs.q != lattice.q) throw dimension_error("coefficients/lattice dimension mismatch");
  VectorField f(lattice);
  Eigen::Map<const MatRM> Phi(phi.data(), N, coeffs.p);
  Eigen::Map<const MatRM> Xi(coeffs.values.data(), coeffs.p, coeffs.q);
  Eigen::Map<MatRM> V(f.velocities.data(), N, coeffs.q);
  V.noalias() = Phi * Xi;
  return f;
}

VectorField eval_on_lattice(const PolynomialSystem& system, const Lattice& lattice) {
  if (system.dict.q != lattice.q) throw dimension_error("system/lattice dimension mismatch");
  const Tensor phi = dictionary_matrix(system.dict, lattice);
  return eval_on_lattice(system.coefficients, phi, lattice);
}

}  // namespace p2v
