#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "phase2vec/lattice.hpp"
#include "phase2vec/poly.hpp"

namespace p2v {

/// The catalog of classical real-world systems used as held-out test data.
enum class Family {
  saddle_node,
  pitchfork,
  transcritical,
  simple_oscillator,
  lotka_volterra,
  homoclinic,
  van_der_pol,
  selkov,
  fitzhugh_nagumo,
  saddle_node_3d,
  lorenz,
};

struct FamilyInfo {
  Family family;
  const char* name;
  int q;
  int arity;
  std::array<std::array<double, 2>, 4> param_ranges;  // first `arity` used
  bool has_labels;  // 3-d families carry no class labels
};

const std::vector<FamilyInfo>& family_catalog();
const FamilyInfo& family_info(Family f);
Family family_from_name(const std::string& name);

/// One member of a family: the family identifier plus its parameter vector.
struct ClassicalSystem {
  Family family;
  std::vector<double> params;

  ClassicalSystem(Family f, std::vector<double> p);
  int q() const { return family_info(family).q; }
};

/// Affine map from lattice coordinates u in [-1,1]^q to the family's physical
/// coordinates, x_i = center_i + half_i * u_i. Identity except for Lorenz,
/// whose attractor box [-20,20]x[-30,30]x[0,50] is rescaled onto [-1,1]^3.
struct AffineFrame {
  std::array<double, 3> center{0.0, 0.0, 0.0};
  std::array<double, 3> half{1.0, 1.0, 1.0};
};
AffineFrame recentering(Family f);

/// Right-hand side in physical coordinates.
std::vector<double> classical_rhs(const ClassicalSystem& sys, std::span<const double> x);

/// Velocity field on the lattice, in lattice coordinates (recentered
/// velocities are rescaled by the same per-axis factors as positions).
VectorField classical_field(const ClassicalSystem& sys, const Lattice& lattice);

/// Exact dictionary coefficients in lattice coordinates; nullopt for the
/// simple oscillator, which is treated as having no closed polynomial form.
std::optional<CoefficientMatrix> exact_coefficients(const ClassicalSystem& sys,
                                                    const MonomialDictionary& dict);

/// Table class label (0..15); throws config_error for unlabeled 3-d families.
int classical_label(const ClassicalSystem& sys);

/// Nonzero-coefficient pattern (p*q bools, monomial-major) of a family over
/// generic parameter values; used to exclude classical functional forms from
/// training data. Empty for the simple oscillator.
std::vector<bool> family_support(Family f, const MonomialDictionary& dict);

/// Substitute x_j = center_j + half_j * u_j into a polynomial and expand.
Poly substitute_affine(const Poly& g, const AffineFrame& frame);

}  // namespace p2v
