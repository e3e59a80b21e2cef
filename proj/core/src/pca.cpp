#include "phase2vec/pca.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "phase2vec/errors.hpp"

namespace p2v {

namespace {
using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
}

PcaBasis pca_fit(const std::vector<const VectorField*>& fields, int d) {
  if (d < 1) throw config_error("pca_fit: d must be >= 1");
  const std::int64_t N = static_cast<std::int64_t>(fields.size());
  if (N < d + 1)
    throw config_error("pca_fit: need at least d+1 = " + std::to_string(d + 1) + " fields, got " +
                       std::to_string(N));
  const std::int64_t D = static_cast<std::int64_t>(fields[0]->velocities.size());
  for (const VectorField* f : fields)
    if (static_cast<std::int64_t>(f->velocities.size()) != D)
      throw dimension_error("pca_fit: fields have mixed sizes");

  PcaBasis basis;
  basis.mean.assign(static_cast<std::size_t>(D), 0.0);
  for (const VectorField* f : fields)
    for (std::int64_t i = 0; i < D; ++i) basis.mean[static_cast<std::size_t>(i)] += f->velocities[static_cast<std::size_t>(i)];
  for (double& m : basis.mean) m /= static_cast<double>(N);

  // Centered data, sample-major.
  MatRM X(N, D);
  for (std::int64_t s = 0; s < N; ++s)
    for (std::int64_t i = 0; i < D; ++i)
      X(s, i) = fields[static_cast<std::size_t>(s)]->velocities[static_cast<std::size_t>(i)] -
                basis.mean[static_cast<std::size_t>(i)];

  // Feature dimension is large (q * n^q) while the sample count is moderate,
  // so eigendecompose the N x N Gram matrix and map back.
  MatRM G = X * X.transpose();
  Eigen::SelfAdjointEigenSolver<MatRM> solver(G);
  if (solver.info() != Eigen::Success) throw config_error("pca_fit: eigendecomposition failed");
  const auto& evals = solver.eigenvalues();   // ascending
  const auto& evecs = solver.eigenvectors();  // columns

  basis.components = Tensor({d, D});
  basis.variances.resize(static_cast<std::size_t>(d));
  const double scale_ref = std::max(std::abs(evals(N - 1)), 1.0);
  int rank = 0;
  for (int k = 0; k < d; ++k) {
    const std::int64_t src = N - 1 - k;  // descending order
    const double lambda = evals(src);
    if (lambda <= 1e-12 * scale_ref) break;
    Eigen::VectorXd v = X.transpose() * evecs.col(src) / std::sqrt(lambda);
    for (std::int64_t i = 0; i < D; ++i) basis.components[static_cast<std::int64_t>(k) * D + i] = v(i);
    basis.variances[static_cast<std::size_t>(k)] = lambda / static_cast<double>(N - 1);
    ++rank;
  }

  // Data of rank below d (e.g. fields of a linear family): complete the basis
  // with a deterministic orthonormal complement carrying zero variance.
  if (rank < d) {
    Eigen::Map<MatRM> C(basis.components.data(), d, D);
    int filled = rank;
    for (std::int64_t e = 0; e < D && filled < d; ++e) {
      Eigen::VectorXd v = Eigen::VectorXd::Zero(D);
      v(e) = 1.0;
      for (int r = 0; r < filled; ++r) {
        const double dot = C.row(r).dot(v.transpose());
        v -= dot * C.row(r).transpose();
      }
      const double norm = v.norm();
      if (norm < 1e-8) continue;
      v /= norm;
      // Second orthogonalization pass keeps the Gram matrix at identity.
      for (int r = 0; r < filled; ++r) {
        const double dot = C.row(r).dot(v.transpose());
        v -= dot * C.row(r).transpose();
      }
      v /= v.norm();
      C.row(filled) = v.transpose();
      basis.variances[static_cast<std::size_t>(filled)] = 0.0;
      ++filled;
    }
    if (filled < d) throw config_error("pca_fit: could not complete an orthonormal basis");
  }
  return basis;
}

std::vector<double> pca_transform(const PcaBasis& basis, const VectorField& field) {
  const std::int64_t D = basis.feature_dim();
  if (static_cast<std::int64_t>(field.velocities.size()) != D)
    throw dimension_error("pca_transform: field size does not match the basis");
  std::vector<double> z(static_cast<std::size_t>(basis.d()), 0.0);
  for (int k = 0; k < basis.d(); ++k) {
    double acc = 0.0;
    const double* row = basis.components.data() + static_cast<std::int64_t>(k) * D;
    for (std::int64_t i = 0; i < D; ++i)
      acc += row[i] * (field.velocities[static_cast<std::size_t>(i)] - basis.mean[static_cast<std::size_t>(i)]);
    z[static_cast<std::size_t>(k)] = acc;
  }
  return z;
}

std::vector<double> pca_inverse(const PcaBasis& basis, std::span<const double> z) {
  if (static_cast<int>(z.size()) != basis.d())
    throw dimension_error("pca_inverse: coordinate count does not match the basis");
  const std::int64_t D = basis.feature_dim();
  std::vector<double> x(basis.mean);
  for (int k = 0; k < basis.d(); ++k) {
    const double* row = basis.components.data() + static_cast<std::int64_t>(k) * D;
    for (std::int64_t i = 0; i < D; ++i) x[static_cast<std::size_t>(i)] += z[static_cast<std::size_t>(k)] * row[i];
  }
  return x;
}

}  // namespace p2v
