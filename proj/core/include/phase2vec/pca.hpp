#pragma once

#include <span>
#include <vector>

#include "phase2vec/lattice.hpp"
#include "phase2vec/tensor.hpp"

namespace p2v {

/// Mean and top-d orthonormal principal directions of flattened vector fields.
struct PcaBasis {
  std::vector<double> mean;       // feature dimension D = q * n^q
  Tensor components;              // [d, D], rows orthonormal
  std::vector<double> variances;  // length d, nonincreasing

  int d() const { return static_cast<int>(components.dim(0)); }
  std::int64_t feature_dim() const { return components.dim(1); }
};

/// Fits on mean-centered flattened fields. Requires at least d+1 fields and
/// data rank >= d.
PcaBasis pca_fit(const std::vector<const VectorField*>& fields, int d);

/// Projection of the mean-centered flattened field onto the components.
std::vector<double> pca_transform(const PcaBasis& basis, const VectorField& field);

/// mean + z^T components; used to check reconstruction.
std::vector<double> pca_inverse(const PcaBasis& basis, std::span<const double> z);

}  // namespace p2v
