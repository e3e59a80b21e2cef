#include "phase2vec/experiments.hpp"

#include <algorithm>
#include <cmath>

#include "phase2vec/errors.hpp"
#include "phase2vec/integrate.hpp"
#include "phase2vec/parallel.hpp"
#include "phase2vec/pca.hpp"

namespace p2v {

namespace {

// One shared reconstruction path so magnitude-0 sweep rows are bitwise equal
// to standalone clean evaluations.
std::vector<CoefficientMatrix> reconstruct_batch(const Phase2VecModel& model,
                                                 const std::vector<const VectorField*>& fields) {
  return decode_embeddings(model, encode_batch(model, fields));
}

std::vector<const VectorField*> field_ptrs(const LabeledDataset& ds) {
  std::vector<const VectorField*> out;
  out.reserve(ds.size());
  for (const auto& s : ds.samples) out.push_back(&s.field);
  return out;
}

}  // namespace

LabeledDataset classical_test_set(int per_family, const Lattice& lattice, std::uint64_t seed) {
  Rng rng(seed);
  LabeledDataset ds = sample_classical_dataset(rng, per_family, lattice);
  ds.split = "test";
  ds.seed = seed;
  return ds;
}

MetricsReport model_recon_report(const Phase2VecModel& model, const LabeledDataset& dataset,
                                 double eps_norm, const std::string& experiment) {
  MetricsReport report;
  report.experiment = experiment;
  const MonomialDictionary dict = build_dictionary(model.config.q, model.config.c);
  const Tensor phi = dictionary_matrix(dict, dataset.lattice);
  const std::vector<CoefficientMatrix> recon = reconstruct_batch(model, field_ptrs(dataset));
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    const auto& s = dataset.samples[i];
    const VectorField rf = eval_on_lattice(recon[i], phi, dataset.lattice);
    SampleRecord rec;
    rec.family = s.family;
    rec.index = static_cast<int>(i);
    rec.param_error =
        s.coefficients ? parameter_error(recon[i], *s.coefficients) : std::nan("");
    rec.norm_recon = normalized_recon_loss(s.field, rf, eps_norm);
    rec.unnorm_recon = unnormalized_recon_loss(s.field, rf);
    rec.sparsity = std::nan("");
    report.records.push_back(std::move(rec));
  }
  return report;
}

MetricsReport lasso_recon_report(const LabeledDataset& dataset, const LassoConfig& lasso,
                                 double eps_norm, const std::string& experiment) {
  MetricsReport report;
  report.experiment = experiment;
  const MonomialDictionary dict = build_dictionary(dataset.lattice.q, dataset.c);
  const LassoWorkspace ws = make_lasso_workspace(dict, dataset.lattice);
  std::vector<SampleRecord> records(dataset.size());
  parallel_for_grain(dataset.size(), 1, [&](std::size_t i0, std::size_t i1) {
    for (std::size_t i = i0; i < i1; ++i) {
      const auto& s = dataset.samples[i];
      const LassoResult fit = lasso_fit(s.field, ws, lasso);
      const VectorField rf = eval_on_lattice(fit.coefficients, ws.phi, dataset.lattice);
      SampleRecord rec;
      rec.family = s.family;
      rec.index = static_cast<int>(i);
      rec.param_error =
          s.coefficients ? parameter_error(fit.coefficients, *s.coefficients) : std::nan("");
      rec.norm_recon = normalized_recon_loss(s.field, rf, eps_norm);
      rec.unnorm_recon = unnormalized_recon_loss(s.field, rf);
      rec.sparsity = std::nan("");
      records[i] = std::move(rec);
    }
  });
  report.records = std::move(records);
  return report;
}

ReconTableConfig ReconTableConfig::defaults(int q) {
  ReconTableConfig cfg;
  if (q == 2) {
    cfg.family_counts = {{"saddle-node", 1},   {"pitchfork", 1},       {"transcritical", 1},
                         {"simple-oscillator", 1}, {"lotka-volterra", 1}, {"homoclinic", 1},
                         {"van-der-pol", 1},   {"selkov", 2},          {"fitzhugh-nagumo", 4}};
    cfg.polynomial_count = 20;
  } else {
    cfg.family_counts = {{"saddle-node-3d", 1}, {"lorenz", 3}};
    cfg.polynomial_count = 0;
  }
  return cfg;
}

ReconComparison recon_table(const Phase2VecModel& model, const ReconTableConfig& config) {
  const Lattice lattice(model.config.q, model.config.n);
  const MonomialDictionary dict = build_dictionary(model.config.q, model.config.c);
  const Tensor phi = dictionary_matrix(dict, lattice);
  Rng rng(config.seed);
  LabeledDataset ds;
  ds.lattice = lattice;
  ds.c = model.config.c;
  ds.split = "test";
  ds.seed = config.seed;
  for (const auto& info : family_catalog()) {
    const auto it = config.family_counts.find(info.name);
    if (it == config.family_counts.end() || info.q != model.config.q) continue;
    for (int i = 0; i < it->second; ++i) {
      const ClassicalSystem sys = sample_classical(rng, info.family);
      LabeledSample s;
      s.field = classical_field(sys, lattice);
      auto coeffs = exact_coefficients(sys, dict);
      if (coeffs) s.coefficients = std::move(*coeffs);
      s.label = info.has_labels ? classical_label(sys) : -1;
      s.family = info.name;
      s.params = sys.params;
      ds.add(std::move(s));
    }
  }
  for (int i = 0; i < config.polynomial_count; ++i) {
    const PolynomialSystem sys = sample_random_polynomial(rng, model.config.q, model.config.c);
    LabeledSample s;
    s.field = eval_on_lattice(sys.coefficients, phi, lattice);
    s.coefficients = sys.coefficients;
    s.label = -1;
    s.family = "polynomial";
    ds.add(std::move(s));
  }
  ReconComparison cmp;
  cmp.phase2vec = model_recon_report(model, ds, config.eps_norm, "recon-table/phase2vec");
  cmp.lasso = lasso_recon_report(ds, config.lasso, config.eps_norm, "recon-table/lasso");
  return cmp;
}

std::vector<NoiseSweepRow> noise_sweep(const Phase2VecModel& model,
                                       const NoiseSweepConfig& config) {
  if (config.steps < 2) throw config_error("noise_sweep: need at least 2 grid points");
  const Lattice lattice(model.config.q, model.config.n);
  LabeledDataset test = classical_test_set(config.per_family, lattice, config.seed);
  const MonomialDictionary dict = build_dictionary(model.config.q, model.config.c);
  const Tensor phi = dictionary_matrix(dict, lattice);
  const LassoWorkspace ws = make_lasso_workspace(dict, lattice);
  const Rng base(config.seed);

  // The parameter kind needs ground-truth coefficients; the trajectory kind
  // needs integrable true dynamics. Build per-sample classical handles once.
  std::vector<ClassicalSystem> systems;
  for (const auto& s : test.samples)
    systems.emplace_back(family_from_name(s.family), s.params);

  std::vector<NoiseSweepRow> rows;
  for (int k = 0; k < config.steps; ++k) {
    double magnitude;
    if (config.kind == NoiseSpec::Kind::trajectory) {
      magnitude = std::round(static_cast<double>(config.traj_min) +
                             static_cast<double>(k) *
                                 static_cast<double>(config.traj_max - config.traj_min) /
                                 static_cast<double>(config.steps - 1));
    } else {
      magnitude = static_cast<double>(k) * config.max_magnitude /
                  static_cast<double>(config.steps - 1);
    }

    std::vector<VectorField> corrupted;
    std::vector<const VectorField*> corrupted_ptr;
    std::vector<std::size_t> used;  // indices of samples this kind applies to
    for (std::size_t i = 0; i < test.samples.size(); ++i) {
      const auto& s = test.samples[i];
      Rng rng = base.fork((static_cast<std::uint64_t>(config.kind) + 1) * 1000000ull +
                          static_cast<std::uint64_t>(k) * 1000ull + i);
      switch (config.kind) {
        case NoiseSpec::Kind::gaussian:
          corrupted.push_back(add_gaussian(s.field, magnitude, rng));
          break;
        case NoiseSpec::Kind::mask:
          corrupted.push_back(mask_zeros(s.field, magnitude, rng));
          break;
        case NoiseSpec::Kind::trajectory:
          corrupted.push_back(
              trajectory_field(rhs_of(systems[i]), static_cast<int>(magnitude), lattice, rng));
          break;
        case NoiseSpec::Kind::parameter: {
          if (!s.coefficients) continue;  // no closed polynomial form
          const CoefficientMatrix pert = perturb_parameters(*s.coefficients, magnitude, rng);
          corrupted.push_back(eval_on_lattice(pert, phi, lattice));
          break;
        }
      }
      used.push_back(i);
    }
    for (const auto& f : corrupted) corrupted_ptr.push_back(&f);

    const std::vector<CoefficientMatrix> recon = reconstruct_batch(model, corrupted_ptr);
    std::vector<double> lasso_errors(corrupted.size());
    parallel_for_grain(corrupted.size(), 1, [&](std::size_t i0, std::size_t i1) {
      for (std::size_t i = i0; i < i1; ++i) {
        const LassoResult fit = lasso_fit(corrupted[i], ws, config.lasso);
        const VectorField rf = eval_on_lattice(fit.coefficients, ws.phi, lattice);
        lasso_errors[i] =
            normalized_recon_loss(test.samples[used[i]].field, rf, config.eps_norm);
      }
    });

    NoiseSweepRow row;
    row.magnitude = magnitude;
    double p2v_acc = 0.0, lasso_acc = 0.0;
    for (std::size_t i = 0; i < corrupted.size(); ++i) {
      const VectorField rf = eval_on_lattice(recon[i], phi, lattice);
      p2v_acc += normalized_recon_loss(test.samples[used[i]].field, rf, config.eps_norm);
      lasso_acc += lasso_errors[i];
    }
    row.phase2vec_error = p2v_acc / static_cast<double>(corrupted.size());
    row.lasso_error = lasso_acc / static_cast<double>(corrupted.size());
    rows.push_back(row);
  }
  return rows;
}

namespace {

// Classical polynomial-family draws with ground-truth coefficients (the
// simple oscillator is excluded: P and S need an exact Xi).
LabeledDataset polynomial_classical_set(int per_family, const Lattice& lattice,
                                        std::uint64_t seed) {
  Rng rng(seed);
  const MonomialDictionary dict = build_dictionary(2, 3);
  LabeledDataset ds;
  ds.lattice = lattice;
  ds.c = 3;
  ds.split = "test";
  ds.seed = seed;
  for (const auto& info : family_catalog()) {
    if (info.q != 2 || info.family == Family::simple_oscillator) continue;
    for (int i = 0; i < per_family; ++i) {
      const ClassicalSystem sys = sample_classical(rng, info.family);
      LabeledSample s;
      s.field = classical_field(sys, lattice);
      s.coefficients = *exact_coefficients(sys, dict);
      s.label = classical_label(sys);
      s.family = info.name;
      s.params = sys.params;
      ds.add(std::move(s));
    }
  }
  return ds;
}

Phase2VecModel train_sweep_model(const LabeledDataset& data, int n, double beta, double lr,
                                 int epochs, int batch, double eps_norm, std::uint64_t seed,
                                 NormMode mode = NormMode::pointwise) {
  EncoderConfig enc;
  enc.q = 2;
  enc.n = n;
  Rng init_rng(seed ^ 0xabcdef12345ull);
  Phase2VecModel model = init_model(enc, init_rng);
  TrainConfig cfg;
  cfg.learning_rate = lr;
  cfg.epochs = epochs;
  cfg.batch_size = batch;
  cfg.beta = beta;
  cfg.eps_norm = eps_norm;
  cfg.norm_mode = mode;
  cfg.val_fraction = 0.0;
  cfg.seed = seed;
  train(model, data, cfg);
  return model;
}

}  // namespace

SparsitySweepResult sparsity_sweep(const SparsitySweepConfig& config) {
  if (config.steps < 2) throw config_error("sparsity_sweep: need at least 2 grid points");
  const Lattice lattice(2, config.n);
  Rng data_rng(config.seed);
  const LabeledDataset train_data = build_training_set(data_rng, config.train_count, lattice);
  LabeledDataset test = polynomial_classical_set(config.per_family, lattice, config.seed + 1);
  const MonomialDictionary dict = build_dictionary(2, 3);
  const Tensor phi = dictionary_matrix(dict, lattice);

  // Perturbed inputs, fixed across the beta grid.
  std::vector<CoefficientMatrix> pert;
  std::vector<VectorField> pert_fields;
  for (std::size_t i = 0; i < test.samples.size(); ++i) {
    Rng rng = Rng(config.seed).fork(7000 + i);
    pert.push_back(perturb_parameters(*test.samples[i].coefficients, config.sigma_param, rng));
    pert_fields.push_back(eval_on_lattice(pert.back(), phi, lattice));
  }

  SparsitySweepResult result;
  const double log_min = std::log10(config.beta_min);
  const double log_max = std::log10(config.beta_max);
  for (int k = 0; k < config.steps; ++k) {
    const double beta = std::pow(
        10.0, log_min + (log_max - log_min) * static_cast<double>(k) /
                            static_cast<double>(config.steps - 1));
    Phase2VecModel model =
        train_sweep_model(train_data, config.n, beta, config.learning_rate, config.epochs,
                          config.batch_size, config.eps_norm, config.seed);
    std::vector<const VectorField*> inputs;
    for (const auto& f : pert_fields) inputs.push_back(&f);
    const std::vector<CoefficientMatrix> recon = reconstruct_batch(model, inputs);

    SparsitySweepRow row;
    row.beta = beta;
    double p_acc = 0.0;
    std::vector<const CoefficientMatrix*> recon_ptr, pert_ptr;
    for (std::size_t i = 0; i < recon.size(); ++i) {
      p_acc += parameter_error(recon[i], *test.samples[i].coefficients);
      recon_ptr.push_back(&recon[i]);
      pert_ptr.push_back(&pert[i]);
    }
    row.param_error = p_acc / static_cast<double>(recon.size());
    const RatioStat s = mean_sparsity_ratio(recon_ptr, pert_ptr);
    row.sparsity_ratio = s.mean;
    row.excluded = s.excluded;
    result.rows.push_back(row);

    if (k == 0) {
      // Sanity direction: the beta_min model scored on unperturbed inputs.
      std::vector<const VectorField*> clean;
      for (const auto& smp : test.samples) clean.push_back(&smp.field);
      const std::vector<CoefficientMatrix> clean_recon = reconstruct_batch(model, clean);
      double acc = 0.0;
      for (std::size_t i = 0; i < clean_recon.size(); ++i)
        acc += parameter_error(clean_recon[i], *test.samples[i].coefficients);
      result.param_error_sigma0 = acc / static_cast<double>(clean_recon.size());
    }
  }
  return result;
}

HomoclinicResult homoclinic_divergence(const Phase2VecModel& normalized_model,
                                       const Phase2VecModel& unnormalized_model,
                                       const HomoclinicConfig& config) {
  if (normalized_model.config.q != 2 || unnormalized_model.config.q != 2)
    throw config_error("homoclinic study requires 2-d models");
  const Lattice lattice(2, normalized_model.config.n);
  const MonomialDictionary dict = build_dictionary(2, 3);

  HomoclinicResult result;
  double norm_acc = 0.0, unnorm_acc = 0.0;
  std::int64_t acc_count = 0;
  for (int xi_i = 0; xi_i < config.xi_steps; ++xi_i) {
    const double xi = config.xi_min + (config.xi_max - config.xi_min) * static_cast<double>(xi_i) /
                                          static_cast<double>(config.xi_steps - 1);
    result.xi_values.push_back(xi);
    const ClassicalSystem truth(Family::homoclinic, {xi});
    const VectorField field = classical_field(truth, lattice);

    const Reconstruction rn = reconstruct(normalized_model, field);
    const Reconstruction ru = reconstruct(unnormalized_model, field);
    const PolynomialSystem sys_n(dict, rn.coefficients);
    const PolynomialSystem sys_u(dict, ru.coefficients);
    const Rhs rhs_true = rhs_of(truth);
    const Rhs rhs_n = rhs_of(sys_n);
    const Rhs rhs_u = rhs_of(sys_u);

    Rng angle_rng = Rng(config.seed).fork(900 + static_cast<std::uint64_t>(xi_i));
    std::vector<double> angles(static_cast<std::size_t>(config.n_traj));
    for (double& a : angles) a = angle_rng.uniform(0.0, 2.0 * M_PI);

    const std::size_t T = static_cast<std::size_t>(config.steps) + 1;
    std::vector<double> dev_n(T, 0.0), dev_u(T, 0.0);
    std::vector<std::vector<double>> dev_n_parts(angles.size()), dev_u_parts(angles.size());
    parallel_for_grain(angles.size(), 8, [&](std::size_t i0, std::size_t i1) {
      for (std::size_t i = i0; i < i1; ++i) {
        const double x0[2] = {config.radius * std::cos(angles[i]),
                              config.radius * std::sin(angles[i])};
        const Trajectory tt =
            integrate(rhs_true, x0, config.dt, config.steps, IntegrationMethod::rk4, &lattice);
        const Trajectory tn =
            integrate(rhs_n, x0, config.dt, config.steps, IntegrationMethod::rk4, &lattice);
        const Trajectory tu =
            integrate(rhs_u, x0, config.dt, config.steps, IntegrationMethod::rk4, &lattice);
        auto state_at = [](const Trajectory& tr, std::size_t t) {
          const std::int64_t idx = std::min<std::int64_t>(static_cast<std::int64_t>(t), tr.rows() - 1);
          return tr.state(idx);
        };
        dev_n_parts[i].resize(T);
        dev_u_parts[i].resize(T);
        for (std::size_t t = 0; t < T; ++t) {
          const auto st = state_at(tt, t);
          const auto sn = state_at(tn, t);
          const auto su = state_at(tu, t);
          dev_n_parts[i][t] = std::hypot(sn[0] - st[0], sn[1] - st[1]);
          dev_u_parts[i][t] = std::hypot(su[0] - st[0], su[1] - st[1]);
        }
      }
    });
    for (std::size_t i = 0; i < angles.size(); ++i)
      for (std::size_t t = 0; t < T; ++t) {
        dev_n[t] += dev_n_parts[i][t];
        dev_u[t] += dev_u_parts[i][t];
      }
    for (std::size_t t = 0; t < T; ++t) {
      dev_n[t] /= static_cast<double>(angles.size());
      dev_u[t] /= static_cast<double>(angles.size());
      norm_acc += dev_n[t];
      unnorm_acc += dev_u[t];
      ++acc_count;
    }
    result.normalized_curves.push_back(std::move(dev_n));
    result.unnormalized_curves.push_back(std::move(dev_u));
  }
  result.normalized_mean = norm_acc / static_cast<double>(acc_count);
  result.unnormalized_mean = unnorm_acc / static_cast<double>(acc_count);
  return result;
}

LandscapeResult loss_landscape_study(const Lattice& lattice, double a, double noise_sigma,
                                     double eps, std::uint64_t seed) {
  if (lattice.q != 2) throw config_error("loss landscape study requires q = 2");
  // Normal-form saddle+node pair: dx1 = a - x1^2, dx2 = -x2; zeros at
  // (+-sqrt(a), 0).
  VectorField truth(lattice);
  std::vector<double> x(2);
  for (std::int64_t i = 0; i < lattice.points(); ++i) {
    lattice.point_at(i, x);
    truth.at(i, 0) = a - x[0] * x[0];
    truth.at(i, 1) = -x[1];
  }
  Rng rng(seed);
  const VectorField noisy = add_gaussian(truth, noise_sigma, rng);

  LandscapeResult result;
  result.normalized_terms = pointwise_loss_terms(truth, noisy, eps, true);
  result.unnormalized_terms = pointwise_loss_terms(truth, noisy, eps, false);
  result.fixed_points = {{std::sqrt(a), 0.0}, {-std::sqrt(a), 0.0}};

  auto argmax = [](const std::vector<double>& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
      if (v[i] > v[best]) best = i;
    return static_cast<std::int64_t>(best);
  };
  result.argmax_normalized = argmax(result.normalized_terms);
  result.argmax_unnormalized = argmax(result.unnormalized_terms);

  auto cell_distance = [&](std::int64_t idx) {
    std::vector<double> pt(2);
    lattice.point_at(idx, pt);
    double best = 1e300;
    for (const auto& fp : result.fixed_points) {
      double acc = 0.0;
      for (int axisi = 0; axisi < 2; ++axisi) {
        const auto& b = lattice.bounds[static_cast<std::size_t>(axisi)];
        const double h = (b[1] - b[0]) / static_cast<double>(lattice.n - 1);
        const double d = (pt[static_cast<std::size_t>(axisi)] - fp[static_cast<std::size_t>(axisi)]) / h;
        acc += d * d;
      }
      best = std::min(best, std::sqrt(acc));
    }
    return best;
  };
  result.cells_to_fixed_point_normalized = cell_distance(result.argmax_normalized);
  result.cells_to_fixed_point_unnormalized = cell_distance(result.argmax_unnormalized);
  return result;
}

ClassifyConfig ClassifyConfig::defaults(ClassTask task) {
  ClassifyConfig cfg;
  cfg.task = task;
  switch (task) {
    case ClassTask::linear_stability:
      cfg.per_class = 200;
      break;
    case ClassTask::conservativity:
    case ClassTask::incompressibility:
      cfg.per_class = 500;
      break;
    case ClassTask::classical_id:
      cfg.per_family = 30;
      break;
  }
  return cfg;
}

std::vector<RepresentationScore> classification_benchmark(const Phase2VecModel& model,
                                                          const ClassifyConfig& config) {
  const Lattice lattice(model.config.q, model.config.n);
  Rng rng(config.seed);
  LabeledDataset ds;
  switch (config.task) {
    case ClassTask::conservativity:
      ds = sample_conservativity_dataset(rng, config.per_class, lattice);
      break;
    case ClassTask::incompressibility:
      ds = sample_incompressibility_dataset(rng, config.per_class, lattice);
      break;
    case ClassTask::linear_stability:
      ds = sample_linear_stability_dataset(rng, config.per_class, lattice);
      break;
    case ClassTask::classical_id:
      ds = sample_classical_dataset(rng, config.per_family, lattice);
      break;
  }
  std::vector<int> labels;
  for (const auto& s : ds.samples) labels.push_back(s.label);

  std::vector<RepresentationScore> scores;
  auto run = [&](const std::string& name, const std::vector<std::vector<double>>& features) {
    LogisticConfig lc = config.logistic;
    lc.seed = config.seed;  // identical split across representations
    const ClassifierReport rep = fit_classifier(features, labels, lc);
    RepresentationScore score;
    score.representation = name;
    score.f1 = rep.test_f1;
    score.accuracy = rep.test_accuracy;
    score.chosen_lambda = rep.model.chosen_lambda;
    score.feature_dim = static_cast<int>(features[0].size());
    scores.push_back(std::move(score));
  };

  {
    const std::vector<Embedding> zs = encode_batch(model, field_ptrs(ds));
    std::vector<std::vector<double>> feats(zs.begin(), zs.end());
    run("phase2vec", feats);
  }
  {
    const int dim = static_cast<int>(binomial(2 + ds.c, ds.c)) * 2;
    std::vector<std::vector<double>> feats;
    for (const auto& s : ds.samples) {
      if (s.coefficients)
        feats.push_back(s.coefficients->values);
      else
        feats.emplace_back(static_cast<std::size_t>(dim), 0.0);  // no closed form
    }
    run("parameters", feats);
  }
  {
    const int d = std::min<int>(model.config.d(), static_cast<int>(ds.size()) - 1);
    const PcaBasis basis = pca_fit(field_ptrs(ds), d);
    std::vector<std::vector<double>> feats;
    for (const auto& s : ds.samples) feats.push_back(pca_transform(basis, s.field));
    run("pca", feats);
  }
  return scores;
}

std::vector<ResolutionRow> resolution_study(const ResolutionConfig& config) {
  std::vector<ResolutionRow> rows;
  for (int n : config.resolutions) {
    const Lattice lattice(2, n);
    Rng data_rng(config.seed);  // identical systems at every resolution
    const LabeledDataset train_data = build_training_set(data_rng, config.train_count, lattice);

    EncoderConfig enc;
    enc.q = 2;
    enc.n = n;
    Rng init_rng(config.seed ^ 0x5151511ull);
    Phase2VecModel model = init_model(enc, init_rng);
    TrainConfig tc;
    tc.learning_rate = config.learning_rate;
    tc.epochs = config.epochs;
    tc.batch_size = config.batch_size;
    tc.beta = config.beta;
    tc.eps_norm = config.eps_norm;
    tc.val_fraction = 0.0;
    tc.seed = config.seed;
    const TrainResult tr = train(model, train_data, tc);

    ResolutionRow row;
    row.n = n;
    row.final_train_loss = tr.history.back().train_loss;
    row.epochs_to_threshold = -1;
    for (const auto& rec : tr.history)
      if (rec.train_loss < config.loss_threshold) {
        row.epochs_to_threshold = rec.epoch + 1;
        break;
      }

    // Simple-oscillator test case, same parameter draws at every resolution.
    Rng test_rng(config.seed + 99);
    double acc = 0.0;
    const MonomialDictionary dict = build_dictionary(2, 3);
    const Tensor phi = dictionary_matrix(dict, lattice);
    for (int i = 0; i < config.test_count; ++i) {
      const ClassicalSystem sys = sample_classical(test_rng, Family::simple_oscillator);
      const VectorField field = classical_field(sys, lattice);
      const Reconstruction r = reconstruct(model, field);
      acc += normalized_recon_loss(field, r.field, config.eps_norm) +
             config.beta * sparsity_loss(r.coefficients);
    }
    row.final_test_loss = acc / static_cast<double>(config.test_count);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace p2v
