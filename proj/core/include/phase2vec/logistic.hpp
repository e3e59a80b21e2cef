#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "phase2vec/rng.hpp"
#include "phase2vec/tensor.hpp"

namespace p2v {

/// One-vs-rest logistic classifier with per-class weight vectors and biases.
struct ClassifierModel {
  std::vector<int> classes;  // label list, ascending
  Tensor weights;            // [K, D]
  std::vector<double> biases;
  double chosen_lambda = 0.0;

  int predict(std::span<const double> x) const;
};

struct LogisticConfig {
  /// L2 strengths searched by cross-validation; default 11 log-spaced values
  /// from 1e-5 to 1e5.
  std::vector<double> lambda_grid;
  double grad_tol = 1e-6;
  int max_iters = 200;
  double train_fraction = 0.8;     // stratified train/test split
  double cv_val_fraction = 0.25;   // of the training split, held for CV
  int loo_threshold = 300;         // above this, 5-fold CV replaces LOO
  int kfold = 5;
  std::uint64_t seed = 0;
};

std::vector<double> default_lambda_grid();

/// Fits all one-vs-rest binary problems at a fixed lambda by damped Newton
/// iterations until the full gradient norm drops below tol. `warm`, when
/// given, seeds the solve.
ClassifierModel fit_ovr(const std::vector<std::vector<double>>& features,
                        const std::vector<int>& labels, double lambda, double tol, int max_iters,
                        const ClassifierModel* warm = nullptr);

struct F1Result {
  double macro = 0.0;
  double stddev = 0.0;  // population std across classes
  std::vector<double> per_class;
  std::vector<int> classes;
};

/// Per-class F1 (0 when precision+recall is 0) over the union of observed
/// label values, with the macro mean and across-class standard deviation.
F1Result f1_macro(const std::vector<int>& predictions, const std::vector<int>& labels);

struct ClassifierReport {
  ClassifierModel model;
  F1Result test_f1;
  double test_accuracy = 0.0;
  std::vector<double> cv_accuracy;  // per lambda grid entry
};

/// The full protocol: stratified 80/20 split, L2 strength selected by
/// leave-one-out cross-validation on a validation subset of the training
/// split (k-fold fallback for large sets), refit, test-set scores.
ClassifierReport fit_classifier(const std::vector<std::vector<double>>& features,
                                const std::vector<int>& labels, const LogisticConfig& config);

}  // namespace p2v
