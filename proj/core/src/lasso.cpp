#include "phase2vec/lasso.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "phase2vec/errors.hpp"

namespace p2v {

namespace {
using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
}

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

LassoWorkspace make_lasso_workspace(const MonomialDictionary& dict, const Lattice& lattice) {
  LassoWorkspace ws;
  ws.dict = dict;
  ws.lattice = lattice;
  ws.phi = dictionary_matrix(dict, lattice);
  const std::int64_t N = ws.phi.dim(0);
  const int p = dict.size();
  ws.gram.resize(static_cast<std::size_t>(p) * p);
  Eigen::Map<const MatRM> Phi(ws.phi.data(), N, p);
  Eigen::Map<MatRM> G(ws.gram.data(), p, p);
  G.noalias() = Phi.transpose() * Phi / static_cast<double>(N);
  return ws;
}

LassoResult lasso_fit(const VectorField& field, const LassoWorkspace& ws, const LassoConfig& cfg) {
  if (!(field.lattice == ws.lattice))
    throw dimension_error("lasso_fit: field lattice does not match the workspace");
  if (cfg.beta < 0.0) throw config_error("lasso_fit: beta must be >= 0");
  if (cfg.tolerance <= 0.0) throw config_error("lasso_fit: tolerance must be > 0");
  const int p = ws.dict.size();
  const int q = ws.dict.q;
  const std::int64_t N = ws.phi.dim(0);

  // c[j] column = Phi^T y_j / N, and the constant part of the objective.
  std::vector<std::vector<double>> c(static_cast<std::size_t>(q),
                                     std::vector<double>(static_cast<std::size_t>(p), 0.0));
  std::vector<double> y_sq(static_cast<std::size_t>(q), 0.0);
  for (std::int64_t i = 0; i < N; ++i)
    for (int j = 0; j < q; ++j) {
      const double y = field.at(i, j);
      y_sq[static_cast<std::size_t>(j)] += y * y;
      for (int k = 0; k < p; ++k)
        c[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] += ws.phi[i * p + k] * y;
    }
  for (int j = 0; j < q; ++j) {
    for (int k = 0; k < p; ++k) c[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] /= static_cast<double>(N);
    y_sq[static_cast<std::size_t>(j)] /= static_cast<double>(N);
  }

  const double* G = ws.gram.data();
  LassoResult result;
  result.coefficients = CoefficientMatrix(p, q);
  std::vector<std::vector<double>> xi(static_cast<std::size_t>(q),
                                      std::vector<double>(static_cast<std::size_t>(p), 0.0));

  auto objective = [&]() {
    double f = 0.0;
    for (int j = 0; j < q; ++j) {
      const auto& x = xi[static_cast<std::size_t>(j)];
      double quad = 0.0, lin = 0.0, l1 = 0.0;
      for (int a = 0; a < p; ++a) {
        lin += c[static_cast<std::size_t>(j)][static_cast<std::size_t>(a)] * x[static_cast<std::size_t>(a)];
        l1 += std::abs(x[static_cast<std::size_t>(a)]);
        for (int b = 0; b < p; ++b)
          quad += x[static_cast<std::size_t>(a)] * G[a * p + b] * x[static_cast<std::size_t>(b)];
      }
      f += 0.5 * quad - lin + 0.5 * y_sq[static_cast<std::size_t>(j)] + cfg.beta * l1;
    }
    return f;
  };

  for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (int j = 0; j < q; ++j) {
      auto& x = xi[static_cast<std::size_t>(j)];
      for (int k = 0; k < p; ++k) {
        double gx = 0.0;
        for (int l = 0; l < p; ++l) gx += G[k * p + l] * x[static_cast<std::size_t>(l)];
        const double rho =
            c[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] - gx + G[k * p + k] * x[static_cast<std::size_t>(k)];
        const double updated = soft_threshold(rho, cfg.beta) / G[k * p + k];
        max_change = std::max(max_change, std::abs(updated - x[static_cast<std::size_t>(k)]));
        x[static_cast<std::size_t>(k)] = updated;
      }
    }
    result.objective_history.push_back(objective());
    result.sweeps = sweep + 1;
    if (max_change < cfg.tolerance) {
      result.converged = true;
      break;
    }
  }
  for (int k = 0; k < p; ++k)
    for (int j = 0; j < q; ++j) result.coefficients.at(k, j) = xi[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
  return result;
}

LassoResult lasso_fit(const VectorField& field, const MonomialDictionary& dict,
                      const LassoConfig& cfg) {
  return lasso_fit(field, make_lasso_workspace(dict, field.lattice), cfg);
}

}  // namespace p2v
