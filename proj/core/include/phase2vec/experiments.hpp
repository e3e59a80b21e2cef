#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "phase2vec/datagen.hpp"
#include "phase2vec/lasso.hpp"
#include "phase2vec/logistic.hpp"
#include "phase2vec/metrics.hpp"
#include "phase2vec/model.hpp"
#include "phase2vec/noise.hpp"

namespace p2v {

// ---------------------------------------------------------------------------
// Reconstruction table (per-family parameter and reconstruction errors).

struct ReconTableConfig {
  /// Parameter draws per family; defaults follow the table layout (1 per
  /// family, 2 for selkov, 4 for fitzhugh-nagumo) plus 20 held-out random
  /// polynomials.
  std::map<std::string, int> family_counts;
  int polynomial_count = 20;
  LassoConfig lasso;
  double eps_norm = 1e-5;
  std::uint64_t seed = 0;

  static ReconTableConfig defaults(int q);
};

struct ReconComparison {
  MetricsReport phase2vec;
  MetricsReport lasso;
};

ReconComparison recon_table(const Phase2VecModel& model, const ReconTableConfig& config);

// ---------------------------------------------------------------------------
// Noise robustness sweep (one noise kind, 20-point magnitude grid).

struct NoiseSweepConfig {
  NoiseSpec::Kind kind = NoiseSpec::Kind::gaussian;
  int steps = 20;
  double max_magnitude = 0.3;  // gaussian, mask, parameter
  int traj_min = 10;
  int traj_max = 2000;
  int per_family = 5;
  LassoConfig lasso;
  double eps_norm = 1e-5;
  std::uint64_t seed = 0;
};

struct NoiseSweepRow {
  double magnitude = 0.0;
  double phase2vec_error = 0.0;  // normalized recon error vs the clean field
  double lasso_error = 0.0;
};

std::vector<NoiseSweepRow> noise_sweep(const Phase2VecModel& model, const NoiseSweepConfig& config);

// ---------------------------------------------------------------------------
// Sparsity sweep: one model per beta on a log grid, P and S per Eq.-5 style
// metrics against noisy ground-truth parameters.

struct SparsitySweepConfig {
  int steps = 20;
  double beta_min = 1e-3;
  double beta_max = 1e-1;
  double sigma_param = 0.1;
  int per_family = 5;
  // Training scale for the per-beta models (reduced-epoch runs are expected).
  int n = 32;
  int train_count = 256;
  int epochs = 12;
  int batch_size = 16;
  double learning_rate = 1e-3;
  double eps_norm = 1e-5;
  std::uint64_t seed = 0;
};

struct SparsitySweepRow {
  double beta = 0.0;
  double param_error = 0.0;     // P against the unperturbed truth
  double sparsity_ratio = 0.0;  // S against the perturbed truth
  int excluded = 0;
};

struct SparsitySweepResult {
  std::vector<SparsitySweepRow> rows;
  /// P of the beta_min model on unperturbed inputs (sanity direction).
  double param_error_sigma0 = 0.0;
};

SparsitySweepResult sparsity_sweep(const SparsitySweepConfig& config);

// ---------------------------------------------------------------------------
// Homoclinic trajectory-divergence study (normalization ablation).

struct HomoclinicConfig {
  int xi_steps = 20;
  double xi_min = -1.2;
  double xi_max = -0.8645;
  int n_traj = 1000;
  double radius = 0.1;
  double dt = 0.01;
  int steps = 500;
  std::uint64_t seed = 0;
};

struct HomoclinicResult {
  std::vector<double> xi_values;
  /// Mean Euclidean deviation from the true trajectory per time step,
  /// averaged over initial conditions; [xi][t], t = 0..steps.
  std::vector<std::vector<double>> normalized_curves;
  std::vector<std::vector<double>> unnormalized_curves;
  double normalized_mean = 0.0;    // over xi, initial conditions and time
  double unnormalized_mean = 0.0;
};

HomoclinicResult homoclinic_divergence(const Phase2VecModel& normalized_model,
                                       const Phase2VecModel& unnormalized_model,
                                       const HomoclinicConfig& config);

// ---------------------------------------------------------------------------
// Pointwise loss landscape under a fixed perturbation (normalization study).
// Uses the normal-form saddle+node field (a - x1^2, -x2), whose zeros at
// (+-sqrt(a), 0) are genuine fixed points on the lattice.

struct LandscapeResult {
  std::vector<double> normalized_terms;
  std::vector<double> unnormalized_terms;
  std::int64_t argmax_normalized = 0;
  std::int64_t argmax_unnormalized = 0;
  std::vector<std::array<double, 2>> fixed_points;
  double cells_to_fixed_point_normalized = 0.0;
  double cells_to_fixed_point_unnormalized = 0.0;
};

LandscapeResult loss_landscape_study(const Lattice& lattice, double a, double noise_sigma,
                                     double eps, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Physics classification benchmark across representations.

struct ClassifyConfig {
  ClassTask task = ClassTask::linear_stability;
  int per_class = 200;   // two-class tasks default to 500 via defaults()
  int per_family = 10;   // classical-id task
  LogisticConfig logistic;
  std::uint64_t seed = 0;

  static ClassifyConfig defaults(ClassTask task);
};

struct RepresentationScore {
  std::string representation;  // phase2vec | parameters | pca
  F1Result f1;
  double accuracy = 0.0;
  double chosen_lambda = 0.0;
  int feature_dim = 0;
};

std::vector<RepresentationScore> classification_benchmark(const Phase2VecModel& model,
                                                          const ClassifyConfig& config);

// ---------------------------------------------------------------------------
// Resolution study: identically seeded training data at each lattice size.

struct ResolutionConfig {
  std::vector<int> resolutions{32, 64, 128};
  int train_count = 256;
  int epochs = 10;
  int batch_size = 16;
  double learning_rate = 1e-3;
  double beta = 1e-3;
  double eps_norm = 1e-5;
  double loss_threshold = 0.5;
  int test_count = 16;  // simple-oscillator draws scoring the test loss
  std::uint64_t seed = 0;
};

struct ResolutionRow {
  int n = 0;
  double final_train_loss = 0.0;
  double final_test_loss = 0.0;    // mean over the simple-oscillator test case
  int epochs_to_threshold = -1;    // -1 when the threshold is never reached
};

std::vector<ResolutionRow> resolution_study(const ResolutionConfig& config);

// ---------------------------------------------------------------------------
// Shared helpers.

/// Classical test draws for sweep experiments: every 2-d family, `per_family`
/// draws each (seeded); includes exact coefficients where they exist.
LabeledDataset classical_test_set(int per_family, const Lattice& lattice, std::uint64_t seed);

/// Per-sample reconstruction metrics of a model over a dataset.
MetricsReport model_recon_report(const Phase2VecModel& model, const LabeledDataset& dataset,
                                 double eps_norm, const std::string& experiment);

/// Same metrics for per-equation LASSO fits.
MetricsReport lasso_recon_report(const LabeledDataset& dataset, const LassoConfig& lasso,
                                 double eps_norm, const std::string& experiment);

}  // namespace p2v
