#include "phase2vec/logistic.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "phase2vec/errors.hpp"
#include "phase2vec/parallel.hpp"

namespace p2v {

namespace {

double softplus(double s) {
  if (s > 30.0) return s;
  if (s < -30.0) return std::exp(s);
  return std::log1p(std::exp(s));
}

double sigmoid(double s) {
  if (s >= 0.0) {
    const double e = std::exp(-s);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(s);
  return e / (1.0 + e);
}

struct BinaryProblem {
  const std::vector<std::vector<double>>* features;
  const std::vector<char>* positive;  // y_i in {0,1}
  const std::vector<int>* subset;     // indices used; nullptr = all
  int exclude = -1;                   // index skipped (LOO)
  double lambda = 0.0;

  template <typename Fn>
  void for_each(Fn&& fn) const {
    if (subset) {
      for (int i : *subset)
        if (i != exclude) fn(static_cast<std::size_t>(i));
    } else {
      for (std::size_t i = 0; i < features->size(); ++i)
        if (static_cast<int>(i) != exclude) fn(i);
    }
  }
};

// Damped Newton on the regularized binary logistic objective.
void fit_binary(const BinaryProblem& prob, double tol, int max_iters, Eigen::VectorXd& theta) {
  const std::size_t D = (*prob.features)[0].size();
  auto objective = [&](const Eigen::VectorXd& th) {
    double J = 0.0;
    prob.for_each([&](std::size_t i) {
      const auto& x = (*prob.features)[i];
      double s = th(static_cast<Eigen::Index>(D));
      for (std::size_t d = 0; d < D; ++d) s += th(static_cast<Eigen::Index>(d)) * x[d];
      J += softplus(s) - ((*prob.positive)[i] ? s : 0.0);
    });
    for (std::size_t d = 0; d < D; ++d) J += 0.5 * prob.lambda * th(static_cast<Eigen::Index>(d)) * th(static_cast<Eigen::Index>(d));
    return J;
  };

  Eigen::VectorXd grad(D + 1);
  Eigen::MatrixXd hess(D + 1, D + 1);
  for (int iter = 0; iter < max_iters; ++iter) {
    grad.setZero();
    hess.setZero();
    prob.for_each([&](std::size_t i) {
      const auto& x = (*prob.features)[i];
      double s = theta(static_cast<Eigen::Index>(D));
      for (std::size_t d = 0; d < D; ++d) s += theta(static_cast<Eigen::Index>(d)) * x[d];
      const double pr = sigmoid(s);
      const double resid = pr - ((*prob.positive)[i] ? 1.0 : 0.0);
      const double wgt = std::max(pr * (1.0 - pr), 1e-12);
      for (std::size_t a = 0; a < D; ++a) {
        grad(static_cast<Eigen::Index>(a)) += resid * x[a];
        for (std::size_t b = a; b < D; ++b)
          hess(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) += wgt * x[a] * x[b];
        hess(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(D)) += wgt * x[a];
      }
      grad(static_cast<Eigen::Index>(D)) += resid;
      hess(static_cast<Eigen::Index>(D), static_cast<Eigen::Index>(D)) += wgt;
    });
    for (std::size_t d = 0; d < D; ++d) {
      grad(static_cast<Eigen::Index>(d)) += prob.lambda * theta(static_cast<Eigen::Index>(d));
      hess(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)) += prob.lambda;
    }
    if (grad.norm() < tol) return;
    hess = hess.selfadjointView<Eigen::Upper>();
    Eigen::VectorXd step = hess.ldlt().solve(-grad);
    // Backtracking keeps the iteration safe on separable data.
    const double J0 = objective(theta);
    const double slope = grad.dot(step);
    double t = 1.0;
    for (int ls = 0; ls < 50; ++ls) {
      if (objective(theta + t * step) <= J0 + 1e-4 * t * slope) break;
      t *= 0.5;
    }
    theta += t * step;
  }
}

ClassifierModel fit_ovr_impl(const std::vector<std::vector<double>>& features,
                             const std::vector<int>& labels, double lambda, double tol,
                             int max_iters, const ClassifierModel* warm,
                             const std::vector<int>* subset, int exclude) {
  if (features.empty() || features.size() != labels.size())
    throw dimension_error("fit_ovr: features and labels must align");
  std::set<int> label_set;
  if (subset) {
    for (int i : *subset)
      if (i != exclude) label_set.insert(labels[static_cast<std::size_t>(i)]);
  } else {
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (static_cast<int>(i) != exclude) label_set.insert(labels[i]);
  }
  if (label_set.size() < 2) throw config_error("fit_ovr: need at least two classes");

  ClassifierModel model;
  model.classes.assign(label_set.begin(), label_set.end());
  model.chosen_lambda = lambda;
  const std::size_t D = features[0].size();
  const int K = static_cast<int>(model.classes.size());
  model.weights = Tensor({K, static_cast<std::int64_t>(D)});
  model.biases.assign(static_cast<std::size_t>(K), 0.0);

  parallel_for_grain(static_cast<std::size_t>(K), 1, [&](std::size_t k0, std::size_t k1) {
    for (std::size_t k = k0; k < k1; ++k) {
      std::vector<char> positive(labels.size(), 0);
      for (std::size_t i = 0; i < labels.size(); ++i)
        positive[i] = labels[i] == model.classes[k] ? 1 : 0;
      BinaryProblem prob{&features, &positive, subset, exclude, lambda};
      Eigen::VectorXd theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(D + 1));
      if (warm) {
        const auto it = std::find(warm->classes.begin(), warm->classes.end(), model.classes[k]);
        if (it != warm->classes.end() &&
            warm->weights.dim(1) == static_cast<std::int64_t>(D)) {
          const std::size_t wk = static_cast<std::size_t>(it - warm->classes.begin());
          for (std::size_t d = 0; d < D; ++d)
            theta(static_cast<Eigen::Index>(d)) =
                warm->weights[static_cast<std::int64_t>(wk * D + d)];
          theta(static_cast<Eigen::Index>(D)) = warm->biases[wk];
        }
      }
      fit_binary(prob, tol, max_iters, theta);
      for (std::size_t d = 0; d < D; ++d)
        model.weights[static_cast<std::int64_t>(k * D + d)] = theta(static_cast<Eigen::Index>(d));
      model.biases[k] = theta(static_cast<Eigen::Index>(D));
    }
  });
  return model;
}

}  // namespace

int ClassifierModel::predict(std::span<const double> x) const {
  const std::int64_t D = weights.dim(1);
  if (static_cast<std::int64_t>(x.size()) != D)
    throw dimension_error("predict: feature length does not match the classifier");
  int best = 0;
  double best_score = -1e300;
  for (std::size_t k = 0; k < classes.size(); ++k) {
    double s = biases[k];
    const double* row = weights.data() + static_cast<std::int64_t>(k) * D;
    for (std::int64_t d = 0; d < D; ++d) s += row[d] * x[static_cast<std::size_t>(d)];
    if (s > best_score) {
      best_score = s;
      best = classes[k];
    }
  }
  return best;
}

std::vector<double> default_lambda_grid() {
  std::vector<double> grid;
  for (int i = 0; i < 11; ++i) grid.push_back(std::pow(10.0, -5.0 + i));
  return grid;
}

ClassifierModel fit_ovr(const std::vector<std::vector<double>>& features,
                        const std::vector<int>& labels, double lambda, double tol, int max_iters,
                        const ClassifierModel* warm) {
  return fit_ovr_impl(features, labels, lambda, tol, max_iters, warm, nullptr, -1);
}

F1Result f1_macro(const std::vector<int>& predictions, const std::vector<int>& labels) {
  if (predictions.size() != labels.size())
    throw dimension_error("f1_macro: prediction and label counts differ");
  std::set<int> class_set(labels.begin(), labels.end());
  class_set.insert(predictions.begin(), predictions.end());
  F1Result r;
  r.classes.assign(class_set.begin(), class_set.end());
  for (int cls : r.classes) {
    std::int64_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const bool is_pred = predictions[i] == cls;
      const bool is_true = labels[i] == cls;
      if (is_pred && is_true) ++tp;
      if (is_pred && !is_true) ++fp;
      if (!is_pred && is_true) ++fn;
    }
    const double precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    const double recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    const double f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    r.per_class.push_back(f1);
  }
  double mean = 0.0;
  for (double f : r.per_class) mean += f;
  mean /= static_cast<double>(r.per_class.size());
  double var = 0.0;
  for (double f : r.per_class) var += (f - mean) * (f - mean);
  r.macro = mean;
  r.stddev = std::sqrt(var / static_cast<double>(r.per_class.size()));
  return r;
}

ClassifierReport fit_classifier(const std::vector<std::vector<double>>& features,
                                const std::vector<int>& labels, const LogisticConfig& config) {
  if (features.size() != labels.size() || features.empty())
    throw dimension_error("fit_classifier: features and labels must align");
  std::map<int, std::vector<int>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(static_cast<int>(i));
  if (by_class.size() < 2) throw config_error("fit_classifier: need at least two classes");
  const std::vector<double> grid =
      config.lambda_grid.empty() ? default_lambda_grid() : config.lambda_grid;

  // Stratified train/test split.
  Rng rng(config.seed);
  std::vector<int> train_idx, test_idx;
  for (auto& [cls, idx] : by_class) {
    shuffle(idx, rng);
    std::size_t n_train = static_cast<std::size_t>(
        std::floor(config.train_fraction * static_cast<double>(idx.size())));
    n_train = std::max<std::size_t>(1, n_train);
    for (std::size_t i = 0; i < idx.size(); ++i)
      (i < n_train ? train_idx : test_idx).push_back(idx[i]);
  }

  // Validation subset of the training split, stratified.
  std::vector<int> val_subset;
  {
    std::map<int, std::vector<int>> train_by_class;
    for (int i : train_idx) train_by_class[labels[static_cast<std::size_t>(i)]].push_back(i);
    for (auto& [cls, idx] : train_by_class) {
      if (idx.size() < 2) continue;
      std::size_t n_val = static_cast<std::size_t>(
          std::floor(config.cv_val_fraction * static_cast<double>(idx.size())));
      n_val = std::max<std::size_t>(1, n_val);
      for (std::size_t i = 0; i < n_val; ++i) val_subset.push_back(idx[i]);
    }
  }

  ClassifierReport report;
  report.cv_accuracy.assign(grid.size(), 0.0);
  const bool use_loo = static_cast<int>(val_subset.size()) <= config.loo_threshold;

  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    const double lambda = grid[gi];
    std::int64_t correct = 0, total = 0;
    if (use_loo) {
      // Leave-one-out over the validation points: each fit uses the whole
      // training split minus one held-out point, warm-started from the full
      // fit.
      ClassifierModel base =
          fit_ovr_impl(features, labels, lambda, config.grad_tol, config.max_iters, nullptr,
                       &train_idx, -1);
      std::vector<char> hits(val_subset.size(), 0);
      parallel_for_grain(val_subset.size(), 1, [&](std::size_t v0, std::size_t v1) {
        for (std::size_t v = v0; v < v1; ++v) {
          const int held = val_subset[v];
          ClassifierModel m = fit_ovr_impl(features, labels, lambda, config.grad_tol,
                                           config.max_iters, &base, &train_idx, held);
          hits[v] = m.predict(features[static_cast<std::size_t>(held)]) ==
                            labels[static_cast<std::size_t>(held)]
                        ? 1
                        : 0;
        }
      });
      for (char h : hits) correct += h;
      total = static_cast<std::int64_t>(val_subset.size());
    } else {
      // Stratified k-fold over the training split.
      std::map<int, std::vector<int>> train_by_class;
      for (int i : train_idx) train_by_class[labels[static_cast<std::size_t>(i)]].push_back(i);
      for (int fold = 0; fold < config.kfold; ++fold) {
        std::vector<int> fold_train, fold_val;
        for (auto& [cls, idx] : train_by_class)
          for (std::size_t i = 0; i < idx.size(); ++i)
            (static_cast<int>(i % static_cast<std::size_t>(config.kfold)) == fold ? fold_val
                                                                                  : fold_train)
                .push_back(idx[i]);
        if (fold_val.empty() || fold_train.empty()) continue;
        std::set<int> fold_classes;
        for (int i : fold_train) fold_classes.insert(labels[static_cast<std::size_t>(i)]);
        if (fold_classes.size() < 2) continue;
        ClassifierModel m = fit_ovr_impl(features, labels, lambda, config.grad_tol,
                                         config.max_iters, nullptr, &fold_train, -1);
        for (int i : fold_val) {
          correct += m.predict(features[static_cast<std::size_t>(i)]) ==
                             labels[static_cast<std::size_t>(i)]
                         ? 1
                         : 0;
          ++total;
        }
      }
    }
    report.cv_accuracy[gi] = total > 0 ? static_cast<double>(correct) / static_cast<double>(total)
                                       : 0.0;
  }

  std::size_t best = 0;
  for (std::size_t gi = 1; gi < grid.size(); ++gi)
    if (report.cv_accuracy[gi] > report.cv_accuracy[best]) best = gi;

  report.model = fit_ovr_impl(features, labels, grid[best], config.grad_tol, config.max_iters,
                              nullptr, &train_idx, -1);
  report.model.chosen_lambda = grid[best];

  std::vector<int> preds, truth;
  for (int i : test_idx) {
    preds.push_back(report.model.predict(features[static_cast<std::size_t>(i)]));
    truth.push_back(labels[static_cast<std::size_t>(i)]);
  }
  if (!preds.empty()) {
    report.test_f1 = f1_macro(preds, truth);
    std::int64_t ok = 0;
    for (std::size_t i = 0; i < preds.size(); ++i)
      if (preds[i] == truth[i]) ++ok;
    report.test_accuracy = static_cast<double>(ok) / static_cast<double>(preds.size());
  }
  return report;
}

}  // namespace p2v
