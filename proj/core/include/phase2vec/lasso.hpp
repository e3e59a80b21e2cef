#pragma once

#include <vector>

#include "phase2vec/lattice.hpp"
#include "phase2vec/poly.hpp"

namespace p2v {

struct LassoConfig {
  double beta = 1e-3;       // L1 weight
  int max_sweeps = 1000;
  double tolerance = 1e-8;  // max coefficient change per sweep
};

/// Shared per-lattice data: dictionary values and the Gram matrix
/// Phi^T Phi / N, read-only across fits.
struct LassoWorkspace {
  MonomialDictionary dict;
  Tensor phi;                // [N, p]
  std::vector<double> gram;  // [p, p]
  Lattice lattice;
};

LassoWorkspace make_lasso_workspace(const MonomialDictionary& dict, const Lattice& lattice);

struct LassoResult {
  CoefficientMatrix coefficients;
  bool converged = false;
  int sweeps = 0;
  /// Objective value after each sweep, summed over output dimensions;
  /// nonincreasing by construction (exact coordinate minimization).
  std::vector<double> objective_history;
};

/// Per-dimension LASSO via cyclic coordinate descent with soft thresholding:
/// minimizes (1/2N)|Phi xi_j - y_j|^2 + beta |xi_j|_1 for each component j,
/// coordinates visited in dictionary order.
LassoResult lasso_fit(const VectorField& field, const LassoWorkspace& ws, const LassoConfig& cfg);
LassoResult lasso_fit(const VectorField& field, const MonomialDictionary& dict,
                      const LassoConfig& cfg);

/// Soft-thresholding operator sign(z) * max(|z| - t, 0).
double soft_threshold(double z, double t);

}  // namespace p2v
