#pragma once

#include <cstdint>
#include <string>

#include "phase2vec/lattice.hpp"
#include "phase2vec/rng.hpp"

namespace p2v {

/// One corruption applied to test data.
struct NoiseSpec {
  enum class Kind { gaussian, mask, trajectory, parameter };
  Kind kind = Kind::gaussian;
  /// sigma_rel, proportion, n_traj (rounded) or sigma_param depending on kind.
  double magnitude = 0.0;
  std::uint64_t seed = 0;
};

const char* noise_kind_name(NoiseSpec::Kind kind);
NoiseSpec::Kind noise_kind_from_name(const std::string& name);

/// Adds N(0, (sigma_rel*sigma_true)^2) per component, where sigma_true is the
/// standard deviation over all components of `field`. sigma_rel = 0 or a
/// constant field returns the input unchanged.
VectorField add_gaussian(const VectorField& field, double sigma_rel, Rng& rng);

/// Zeroes all q components of floor(proportion * n^q) grid points chosen
/// uniformly without replacement.
VectorField mask_zeros(const VectorField& field, double proportion, Rng& rng);

/// Each coefficient perturbed independently by N(0, sigma_param^2).
CoefficientMatrix perturb_parameters(const CoefficientMatrix& coeffs, double sigma_param, Rng& rng);

}  // namespace p2v
