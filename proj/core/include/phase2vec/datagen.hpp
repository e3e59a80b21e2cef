#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "phase2vec/lattice.hpp"
#include "phase2vec/poly.hpp"
#include "phase2vec/rng.hpp"
#include "phase2vec/systems.hpp"

namespace p2v {

/// Classification tasks and their class counts.
enum class ClassTask { conservativity, incompressibility, linear_stability, classical_id };
int class_count(ClassTask task);
const char* class_task_name(ClassTask task);
ClassTask class_task_from_name(const std::string& name);

/// The five non-degenerate planar linear behaviors.
enum class StabilityClass {
  stable_node = 0,
  unstable_node = 1,
  stable_spiral = 2,
  unstable_spiral = 3,
  saddle = 4,
};

struct LabeledSample {
  VectorField field;
  std::optional<CoefficientMatrix> coefficients;
  int label = 0;
  std::string family;
  std::vector<double> params;
};

/// Collection of (field, coefficients, label) triples sharing one lattice.
struct LabeledDataset {
  Lattice lattice;
  int c = 3;
  int label_set = 0;  // see dataset_io.hpp for ids
  std::string split = "train";
  std::uint64_t seed = 0;
  std::vector<LabeledSample> samples;

  std::size_t size() const { return samples.size(); }
  void add(LabeledSample s);
};

/// Training coefficient law: each entry is 0 with probability 0.75, otherwise
/// Uniform[-3, 3].
double sample_coefficient(Rng& rng);
PolynomialSystem sample_random_polynomial(Rng& rng, int q, int c);

/// Gradient of a scalar polynomial drawn from the training law (q = 2).
PolynomialSystem sample_conservative(Rng& rng, const MonomialDictionary& dict);

/// Training-law sample rejected until its curl polynomial is nonzero.
PolynomialSystem sample_nonconservative(Rng& rng, const MonomialDictionary& dict);

/// Gradient of the harmonic real part of a random complex polynomial of
/// degree <= c; has identically zero divergence (q = 2).
PolynomialSystem sample_incompressible(Rng& rng, const MonomialDictionary& dict);

/// Training-law sample rejected until its divergence polynomial is nonzero.
PolynomialSystem sample_compressible(Rng& rng, const MonomialDictionary& dict);

/// Stability class from trace/determinant, or nullopt for a degenerate matrix
/// (|det| <= tol; or det > 0 with |tr| <= tol or |tr^2-4det| <= tol).
std::optional<StabilityClass> classify_linear(const std::array<double, 4>& A, double tol = 1e-9);

/// Draws A entries Uniform[-3,3] until each class holds exactly `per_class`
/// fields of dx = Ax. Ground-truth coefficients have only the linear rows set.
LabeledDataset sample_linear_stability_dataset(Rng& rng, int per_class, const Lattice& lattice);

/// Parameters uniform over the family's catalog ranges, with its class label
/// (-1 for unlabeled 3-d families).
ClassicalSystem sample_classical(Rng& rng, Family family);

/// Balanced two-class sets: property-positive class labeled 1, counter class
/// (training-law samples with the property analytically violated) labeled 0.
LabeledDataset sample_conservativity_dataset(Rng& rng, int per_class, const Lattice& lattice);
LabeledDataset sample_incompressibility_dataset(Rng& rng, int per_class, const Lattice& lattice);

/// Labeled draws across all 2-d families (classical_id task), `per_family`
/// draws each.
LabeledDataset sample_classical_dataset(Rng& rng, int per_family, const Lattice& lattice);

/// `count` training-law systems evaluated on the lattice. Any draw whose
/// support pattern exactly equals a catalog family's polynomial support is
/// redrawn, so classical functional forms never appear in training data.
LabeledDataset build_training_set(Rng& rng, int count, const Lattice& lattice, int c = 3);

}  // namespace p2v
