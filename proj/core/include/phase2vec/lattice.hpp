#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "phase2vec/poly.hpp"
#include "phase2vec/tensor.hpp"

namespace p2v {

/// Evenly spaced phase-space grid: n points per axis including both
/// endpoints, row-major enumeration with axis 1 slowest.
struct Lattice {
  int q = 2;
  int n = 64;
  std::array<std::array<double, 2>, 3> bounds{{{-1.0, 1.0}, {-1.0, 1.0}, {-1.0, 1.0}}};

  Lattice() = default;
  Lattice(int q_, int n_);
  Lattice(int q_, int n_, std::array<std::array<double, 2>, 3> bounds_);

  std::int64_t points() const;
  double coord(int axis, int i) const;
  /// Coordinates of grid point `idx` (row-major, axis 1 slowest).
  void point_at(std::int64_t idx, std::span<double> out) const;
  /// Index of the equal-width bin containing `x`, or -1 if outside the box.
  std::int64_t cell_of(std::span<const double> x) const;
  bool operator==(const Lattice& o) const;
};

/// Velocities on a lattice, point-major: velocities[point*q + component].
struct VectorField {
  Lattice lattice;
  std::vector<double> velocities;

  VectorField() = default;
  explicit VectorField(const Lattice& l)
      : lattice(l), velocities(static_cast<std::size_t>(l.points()) * l.q, 0.0) {}

  double& at(std::int64_t point, int component) {
    return velocities[static_cast<std::size_t>(point) * lattice.q + component];
  }
  double at(std::int64_t point, int component) const {
    return velocities[static_cast<std::size_t>(point) * lattice.q + component];
  }
  bool all_finite() const;
  /// Population standard deviation over all q*n^q components.
  double component_stddev() const;
};

/// Dictionary values at every grid point: Tensor [n^q, p].
Tensor dictionary_matrix(const MonomialDictionary& dict, const Lattice& lattice);

/// Velocity at each grid point X is Phi(X) * Xi.
VectorField eval_on_lattice(const PolynomialSystem& system, const Lattice& lattice);

/// As above but reusing a cached dictionary matrix for this lattice.
VectorField eval_on_lattice(const CoefficientMatrix& coeffs, const Tensor& phi,
                            const Lattice& lattice);

}  // namespace p2v
