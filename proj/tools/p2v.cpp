// phase2vec command-line tool: dataset generation, training, embedding,
// reconstruction, the LASSO baseline and the evaluation experiments.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "phase2vec/checkpoint_io.hpp"
#include "phase2vec/dataset_io.hpp"
#include "phase2vec/errors.hpp"
#include "phase2vec/experiments.hpp"
#include "phase2vec/metrics.hpp"
#include "phase2vec/model.hpp"
#include "phase2vec/parallel.hpp"
#include "phase2vec/run_config.hpp"

namespace fs = std::filesystem;
using namespace p2v;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string output = ".";
  std::uint64_t seed = 0;
  bool seed_set = false;
  double beta = 0.0;
  bool beta_set = false;
  bool no_fp_norm = false;
  int threads = -1;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "key = value configuration file");
  cmd->add_option("--output", opts.output, "output directory");
  cmd->add_option("--seed", opts.seed, "seed override")->each([&](const std::string&) {
    opts.seed_set = true;
  });
  cmd->add_option("--beta", opts.beta, "sparsity weight override")->each([&](const std::string&) {
    opts.beta_set = true;
  });
  cmd->add_flag("--no-fp-norm", opts.no_fp_norm, "disable fixed-point loss normalization");
  cmd->add_option("--threads", opts.threads, "worker threads (0 = all cores)");
}

RunConfig resolve_config(const CommonOpts& opts) {
  RunConfig cfg = opts.config_path.empty() ? RunConfig() : RunConfig::from_file(opts.config_path);
  if (opts.seed_set) cfg.set("seed", std::to_string(opts.seed));
  if (opts.beta_set) {
    std::ostringstream os;
    os.precision(17);
    os << opts.beta;
    cfg.set("beta", os.str());
    cfg.set("lasso_beta", os.str());
  }
  if (opts.no_fp_norm) cfg.set("norm_mode", "none");
  if (opts.threads >= 0) {
    cfg.set("threads", std::to_string(opts.threads));
  } else if (const char* env = std::getenv("P2V_THREADS")) {
    cfg.set("threads", env);
  }
  set_thread_count(static_cast<int>(cfg.get_int("threads")));
  return cfg;
}

fs::path ensure_output(const CommonOpts& opts) {
  fs::path dir(opts.output);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw io_error("cannot write " + tmp.string());
    out << text;
  }
  fs::rename(tmp, path);
}

NormMode norm_mode_of(const RunConfig& cfg) {
  const std::string& m = cfg.get("norm_mode");
  if (m == "pointwise") return NormMode::pointwise;
  if (m == "global") return NormMode::global_ratio;
  if (m == "none") return NormMode::none;
  throw config_error("norm_mode must be pointwise, global or none, got '" + m + "'");
}

EncoderConfig encoder_config_of(const RunConfig& cfg) {
  EncoderConfig e;
  e.q = static_cast<int>(cfg.get_int("q"));
  e.n = static_cast<int>(cfg.get_int("n"));
  e.conv_layers = static_cast<int>(cfg.get_int("conv_layers"));
  e.channels = static_cast<int>(cfg.get_int("channels"));
  e.kernel = static_cast<int>(cfg.get_int("kernel"));
  e.stride = static_cast<int>(cfg.get_int("stride"));
  e.embedding_dim = static_cast<int>(cfg.get_int("embedding_dim"));
  e.mlp_hidden = static_cast<int>(cfg.get_int("mlp_hidden"));
  e.dropout_rate = cfg.get_double("dropout");
  e.c = static_cast<int>(cfg.get_int("c"));
  e.bn_momentum = cfg.get_double("bn_momentum");
  e.bn_eps = cfg.get_double("bn_eps");
  return e;
}

TrainConfig train_config_of(const RunConfig& cfg) {
  TrainConfig t;
  t.learning_rate = cfg.get_double("lr");
  t.epochs = static_cast<int>(cfg.get_int("epochs"));
  t.batch_size = static_cast<int>(cfg.get_int("batch_size"));
  t.beta = cfg.get_double("beta");
  t.eps_norm = cfg.get_double("eps_norm");
  t.norm_mode = norm_mode_of(cfg);
  t.val_fraction = cfg.get_double("val_fraction");
  t.seed = cfg.get_u64("seed");
  t.save_interval = static_cast<int>(cfg.get_int("save_interval"));
  return t;
}

LassoConfig lasso_config_of(const RunConfig& cfg) {
  LassoConfig l;
  l.beta = cfg.get_double("lasso_beta");
  l.max_sweeps = static_cast<int>(cfg.get_int("lasso_max_sweeps"));
  l.tolerance = cfg.get_double("lasso_tol");
  return l;
}

LogisticConfig logistic_config_of(const RunConfig& cfg) {
  LogisticConfig l;
  l.train_fraction = cfg.get_double("train_fraction");
  l.cv_val_fraction = cfg.get_double("cv_val_fraction");
  l.loo_threshold = static_cast<int>(cfg.get_int("cv_loo_threshold"));
  l.kfold = static_cast<int>(cfg.get_int("cv_kfold"));
  l.seed = cfg.get_u64("seed");
  return l;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

// ---------------------------------------------------------------------------

int cmd_generate(const CommonOpts& opts) {
  const RunConfig cfg = resolve_config(opts);
  const fs::path dir = ensure_output(opts);
  const std::uint64_t seed = cfg.get_u64("seed");
  const Lattice lattice(static_cast<int>(cfg.get_int("q")), static_cast<int>(cfg.get_int("n")));
  Rng rng(seed);

  const std::string& gen = cfg.get("generator");
  LabeledDataset ds;
  if (gen == "train-polynomial") {
    ds = build_training_set(rng, static_cast<int>(cfg.get_int("count")), lattice,
                            static_cast<int>(cfg.get_int("c")));
  } else if (gen == "classical") {
    ds = sample_classical_dataset(rng, static_cast<int>(cfg.get_int("per_family")), lattice);
  } else if (gen == "conservative") {
    ds = sample_conservativity_dataset(rng, static_cast<int>(cfg.get_int("per_class")), lattice);
  } else if (gen == "incompressible") {
    ds = sample_incompressibility_dataset(rng, static_cast<int>(cfg.get_int("per_class")), lattice);
  } else if (gen == "linear-stability") {
    ds = sample_linear_stability_dataset(rng, static_cast<int>(cfg.get_int("per_class")), lattice);
  } else {
    throw config_error("unknown generator '" + gen + "'");
  }
  ds.seed = seed;

  const fs::path out = dir / "dataset.p2vd";
  write_dataset(ds, out.string());
  cfg.write_echo((dir / "config.echo.txt").string());

  std::map<int, int> histogram;
  for (const auto& s : ds.samples) histogram[s.label] += 1;
  std::cout << "wrote " << ds.size() << " samples to " << out.string() << "\n";
  std::cout << "class histogram:";
  for (const auto& [label, n] : histogram) std::cout << " " << label << ":" << n;
  std::cout << "\n";
  return 0;
}

void save_checkpoint_files(const fs::path& dir, const Phase2VecModel& model,
                           const TrainConfig& tc, const AdamState& adam, int epoch,
                           std::vector<EpochRecord>& pending_history) {
  Checkpoint ckpt{model, tc, adam, static_cast<std::uint32_t>(epoch)};
  write_checkpoint(ckpt, (dir / "checkpoint.p2vc").string());
  const fs::path hist = dir / "loss_history.tsv";
  const bool fresh = !fs::exists(hist);
  std::ofstream out(hist, std::ios::app);
  if (fresh) out << "epoch\ttrain_loss\tval_loss\n";
  for (const auto& rec : pending_history)
    out << rec.epoch << "\t" << fmt(rec.train_loss) << "\t" << fmt(rec.val_loss) << "\n";
  pending_history.clear();
}

int cmd_train(const CommonOpts& opts, const std::string& dataset_path,
              const std::string& resume_path) {
  const RunConfig cfg = resolve_config(opts);
  const fs::path dir = ensure_output(opts);
  const LabeledDataset ds = read_dataset(dataset_path);

  Phase2VecModel model;
  TrainConfig tc;
  AdamState adam;
  int start_epoch = 0;
  if (!resume_path.empty()) {
    Checkpoint ckpt = read_checkpoint(resume_path);
    model = std::move(ckpt.model);
    tc = ckpt.train_config;
    adam = std::move(ckpt.adam);
    start_epoch = static_cast<int>(ckpt.epoch);
    tc.epochs = static_cast<int>(cfg.get_int("epochs"));  // total target
  } else {
    EncoderConfig enc = encoder_config_of(cfg);
    enc.q = ds.lattice.q;
    enc.n = ds.lattice.n;
    tc = train_config_of(cfg);
    Rng init_rng(tc.seed ^ 0xabcdef12345ull);
    model = init_model(enc, init_rng);
    adam = AdamState::init(model.params, tc.learning_rate);
  }
  if (ds.lattice.q != model.config.q || ds.lattice.n != model.config.n)
    throw dimension_error("dataset lattice does not match the model configuration");
  if (resume_path.empty()) {
    // A fresh run starts a fresh history file.
    std::error_code ec;
    fs::remove(dir / "loss_history.tsv", ec);
  }

  cfg.write_echo((dir / "config.echo.txt").string());
  std::vector<EpochRecord> pending;
  const int save_every = tc.save_interval;
  try {
    train(model, ds, tc, adam, start_epoch, tc.epochs, [&](const EpochRecord& rec) {
      pending.push_back(rec);
      std::cout << "epoch " << rec.epoch << " train " << fmt(rec.train_loss);
      if (!std::isnan(rec.val_loss)) std::cout << " val " << fmt(rec.val_loss);
      std::cout << "\n";
      if (save_every > 0 && (rec.epoch + 1) % save_every == 0)
        save_checkpoint_files(dir, model, tc, adam, rec.epoch + 1, pending);
    });
  } catch (const training_diverged& e) {
    std::cerr << "error: " << e.what() << "\n";
    save_checkpoint_files(dir, model, tc, adam, e.epoch, pending);
    std::cerr << "partial checkpoint written to " << (dir / "checkpoint.p2vc").string() << "\n";
    return 3;
  }
  save_checkpoint_files(dir, model, tc, adam, tc.epochs, pending);
  std::cout << "checkpoint: " << (dir / "checkpoint.p2vc").string() << "\n";
  return 0;
}

int cmd_embed(const CommonOpts& opts, const std::string& ckpt_path, const std::string& dataset_path) {
  const RunConfig cfg = resolve_config(opts);
  const fs::path dir = ensure_output(opts);
  const Checkpoint ckpt = read_checkpoint(ckpt_path);
  const LabeledDataset ds = read_dataset(dataset_path);
  if (ds.lattice.q != ckpt.model.config.q || ds.lattice.n != ckpt.model.config.n)
    throw dimension_error("dataset lattice does not match the checkpoint");
  std::vector<const VectorField*> fields;
  for (const auto& s : ds.samples) fields.push_back(&s.field);
  const std::vector<Embedding> zs = encode_batch(ckpt.model, fields);
  write_embeddings(zs, (dir / "embeddings.p2ve").string());
  cfg.write_echo((dir / "config.echo.txt").string());
  std::cout << "wrote " << zs.size() << " embeddings of dimension " << zs[0].size() << "\n";
  return 0;
}

void write_error_sidecar(const fs::path& path, const MetricsReport& report) {
  std::ostringstream os;
  os << "index\tparam_error\tnorm_recon_error\tunnorm_recon_error\n";
  for (const auto& r : report.records)
    os << r.index << "\t" << fmt(r.param_error) << "\t" << fmt(r.norm_recon) << "\t"
       << fmt(r.unnorm_recon) << "\n";
  write_text(path, os.str());
}

LabeledDataset reconstruction_dataset(const LabeledDataset& src,
                                      const std::vector<CoefficientMatrix>& coeffs,
                                      const Tensor& phi) {
  LabeledDataset out;
  out.lattice = src.lattice;
  out.c = src.c;
  out.label_set = src.label_set;
  out.split = src.split;
  out.seed = src.seed;
  for (std::size_t i = 0; i < src.samples.size(); ++i) {
    LabeledSample s;
    s.coefficients = coeffs[i];
    s.field = eval_on_lattice(coeffs[i], phi, src.lattice);
    s.label = src.samples[i].label;
    s.family = src.samples[i].family;
    out.add(std::move(s));
  }
  return out;
}

int cmd_reconstruct(const CommonOpts& opts, const std::string& ckpt_path,
                    const std::string& dataset_path) {
  const RunConfig cfg = resolve_config(opts);
  const fs::path dir = ensure_output(opts);
  const Checkpoint ckpt = read_checkpoint(ckpt_path);
  const LabeledDataset ds = read_dataset(dataset_path);
  if (ds.lattice.q != ckpt.model.config.q || ds.lattice.n != ckpt.model.config.n)
    throw dimension_error("dataset lattice does not match the checkpoint");

  const MonomialDictionary dict = build_dictionary(ds.lattice.q, ds.c);
  const Tensor phi = dictionary_matrix(dict, ds.lattice);
  std::vector<const VectorField*> fields;
  for (const auto& s : ds.samples) fields.push_back(&s.field);
  const std::vector<CoefficientMatrix> coeffs =
      decode_embeddings(ckpt.model, encode_batch(ckpt.model, fields));
  const MetricsReport report =
      model_recon_report(ckpt.model, ds, cfg.get_double("eps_norm"), "reconstruct");

  write_dataset(reconstruction_dataset(ds, coeffs, phi), (dir / "recon.p2vd").string());
  write_error_sidecar(dir / "errors.tsv", report);
  cfg.write_echo((dir / "config.echo.txt").string());
  std::cout << "wrote " << ds.size() << " reconstructions\n";
  return 0;
}

int cmd_lasso(const CommonOpts& opts, const std::string& dataset_path) {
  const RunConfig cfg = resolve_config(opts);
  const fs::path dir = ensure_output(opts);
  const LabeledDataset ds = read_dataset(dataset_path);
  const LassoConfig lasso = lasso_config_of(cfg);

  const MonomialDictionary dict = build_dictionary(ds.lattice.q, ds.c);
  const LassoWorkspace ws = make_lasso_workspace(dict, ds.lattice);
  std::vector<CoefficientMatrix> coeffs;
  for (const auto& s : ds.samples) coeffs.push_back(lasso_fit(s.field, ws, lasso).coefficients);
  const MetricsReport report = lasso_recon_report(ds, lasso, cfg.get_double("eps_norm"), "lasso");

  write_dataset(reconstruction_dataset(ds, coeffs, ws.phi), (dir / "recon.p2vd").string());
  write_error_sidecar(dir / "errors.tsv", report);
  cfg.write_echo((dir / "config.echo.txt").string());
  std::cout << "wrote " << ds.size() << " LASSO fits\n";
  return 0;
}

int cmd_eval(const CommonOpts& opts, const std::string& ckpt_path, const std::string& ckpt2_path,
             const std::string& experiment_flag) {
  RunConfig cfg = resolve_config(opts);
  if (!experiment_flag.empty()) cfg.set("experiment", experiment_flag);
  const fs::path dir = ensure_output(opts);
  const std::string experiment = cfg.get("experiment");
  const std::string hash = config_hash(cfg.echo());
  cfg.write_echo((dir / "config.echo.txt").string());

  auto load_model = [&]() {
    if (ckpt_path.empty()) throw config_error("experiment '" + experiment + "' needs a checkpoint");
    return read_checkpoint(ckpt_path).model;
  };

  if (experiment == "recon-table") {
    const Phase2VecModel model = load_model();
    ReconTableConfig rc = ReconTableConfig::defaults(model.config.q);
    rc.lasso = lasso_config_of(cfg);
    rc.eps_norm = cfg.get_double("eps_norm");
    rc.seed = cfg.get_u64("seed");
    const ReconComparison cmp = recon_table(model, rc);
    std::ostringstream os;
    os << "# config " << hash << "\n";
    os << "family\tcount\tpar_phase2vec\tpar_phase2vec_std\tpar_lasso\tpar_lasso_std"
          "\trecon_phase2vec\trecon_phase2vec_std\trecon_lasso\trecon_lasso_std\n";
    for (const auto& family : cmp.phase2vec.families()) {
      const GroupStat pp = cmp.phase2vec.family_stat(family, &SampleRecord::param_error);
      const GroupStat pl = cmp.lasso.family_stat(family, &SampleRecord::param_error);
      const GroupStat rp = cmp.phase2vec.family_stat(family, &SampleRecord::norm_recon);
      const GroupStat rl = cmp.lasso.family_stat(family, &SampleRecord::norm_recon);
      os << family << "\t" << rp.count << "\t" << fmt(pp.mean) << "\t" << fmt(pp.stddev) << "\t"
         << fmt(pl.mean) << "\t" << fmt(pl.stddev) << "\t" << fmt(rp.mean) << "\t"
         << fmt(rp.stddev) << "\t" << fmt(rl.mean) << "\t" << fmt(rl.stddev) << "\n";
    }
    write_text(dir / "recon_table.tsv", os.str());
  } else if (experiment == "noise-sweep") {
    const Phase2VecModel model = load_model();
    NoiseSweepConfig nc;
    nc.kind = noise_kind_from_name(cfg.get("noise_kind"));
    nc.steps = static_cast<int>(cfg.get_int("grid_steps"));
    nc.max_magnitude = cfg.get_double("noise_max");
    nc.traj_min = static_cast<int>(cfg.get_int("traj_min"));
    nc.traj_max = static_cast<int>(cfg.get_int("traj_max"));
    nc.per_family = static_cast<int>(cfg.get_int("per_family"));
    nc.lasso = lasso_config_of(cfg);
    nc.eps_norm = cfg.get_double("eps_norm");
    nc.seed = cfg.get_u64("seed");
    const auto rows = noise_sweep(model, nc);
    std::ostringstream os;
    os << "# config " << hash << "\n";
    os << "magnitude\tphase2vec_error\tlasso_error\n";
    for (const auto& r : rows)
      os << fmt(r.magnitude) << "\t" << fmt(r.phase2vec_error) << "\t" << fmt(r.lasso_error) << "\n";
    write_text(dir / (std::string("noise_") + cfg.get("noise_kind") + ".tsv"), os.str());
  } else if (experiment == "sparsity-sweep") {
    SparsitySweepConfig sc;
    sc.steps = static_cast<int>(cfg.get_int("grid_steps"));
    sc.beta_min = cfg.get_double("beta_min");
    sc.beta_max = cfg.get_double("beta_max");
    sc.sigma_param = cfg.get_double("sigma_param");
    sc.per_family = static_cast<int>(cfg.get_int("per_family"));
    sc.n = static_cast<int>(cfg.get_int("sweep_n"));
    sc.train_count = static_cast<int>(cfg.get_int("sweep_count"));
    sc.epochs = static_cast<int>(cfg.get_int("sweep_epochs"));
    sc.batch_size = static_cast<int>(cfg.get_int("sweep_batch"));
    sc.learning_rate = cfg.get_double("sweep_lr");
    sc.eps_norm = cfg.get_double("eps_norm");
    sc.seed = cfg.get_u64("seed");
    const SparsitySweepResult result = sparsity_sweep(sc);
    std::ostringstream os;
    os << "# config " << hash << "\n";
    os << "# param_error_sigma0_at_beta_min " << fmt(result.param_error_sigma0) << "\n";
    os << "beta\tparam_error\tsparsity_ratio\texcluded\n";
    for (const auto& r : result.rows)
      os << fmt(r.beta) << "\t" << fmt(r.param_error) << "\t" << fmt(r.sparsity_ratio) << "\t"
         << r.excluded << "\n";
    write_text(dir / "sparsity_sweep.tsv", os.str());
  } else if (experiment == "homoclinic") {
    if (ckpt2_path.empty())
      throw config_error("homoclinic needs --ckpt2 (the unnormalized model)");
    const Phase2VecModel normalized = load_model();
    const Phase2VecModel unnormalized = read_checkpoint(ckpt2_path).model;
    HomoclinicConfig hc;
    hc.xi_steps = static_cast<int>(cfg.get_int("xi_steps"));
    hc.xi_min = cfg.get_double("xi_min");
    hc.xi_max = cfg.get_double("xi_max");
    hc.n_traj = static_cast<int>(cfg.get_int("homoclinic_traj"));
    hc.radius = cfg.get_double("homoclinic_radius");
    hc.dt = cfg.get_double("homoclinic_dt");
    hc.steps = static_cast<int>(cfg.get_int("homoclinic_steps"));
    hc.seed = cfg.get_u64("seed");
    const HomoclinicResult result = homoclinic_divergence(normalized, unnormalized, hc);
    std::ostringstream os;
    os << "# config " << hash << "\n";
    os << "# normalized_mean " << fmt(result.normalized_mean) << "\n";
    os << "# unnormalized_mean " << fmt(result.unnormalized_mean) << "\n";
    os << "xi\tstep\tdeviation_normalized\tdeviation_unnormalized\n";
    for (std::size_t i = 0; i < result.xi_values.size(); ++i)
      for (std::size_t t = 0; t < result.normalized_curves[i].size(); ++t)
        os << fmt(result.xi_values[i]) << "\t" << t << "\t" << fmt(result.normalized_curves[i][t])
           << "\t" << fmt(result.unnormalized_curves[i][t]) << "\n";
    write_text(dir / "homoclinic.tsv", os.str());
  } else if (experiment == "classify") {
    const Phase2VecModel model = load_model();
    ClassifyConfig cc = ClassifyConfig::defaults(class_task_from_name(cfg.get("task")));
    cc.per_class = static_cast<int>(cfg.get_int("per_class"));
    cc.per_family = static_cast<int>(cfg.get_int("per_family"));
    cc.logistic = logistic_config_of(cfg);
    cc.seed = cfg.get_u64("seed");
    const auto scores = classification_benchmark(model, cc);
    std::ostringstream os;
    os << "# config " << hash << "\n";
    os << "representation\tfeature_dim\tmacro_f1\tf1_std\taccuracy\tlambda\n";
    for (const auto& s : scores)
      os << s.representation << "\t" << s.feature_dim << "\t" << fmt(s.f1.macro) << "\t"
         << fmt(s.f1.stddev) << "\t" << fmt(s.accuracy) << "\t" << fmt(s.chosen_lambda) << "\n";
    write_text(dir / "classify.tsv", os.str());
  } else if (experiment == "resolution") {
    ResolutionConfig rc;
    rc.resolutions.clear();
    std::stringstream ss(cfg.get("resolutions"));
    std::string item;
    while (std::getline(ss, item, ',')) rc.resolutions.push_back(std::stoi(item));
    rc.train_count = static_cast<int>(cfg.get_int("sweep_count"));
    rc.epochs = static_cast<int>(cfg.get_int("sweep_epochs"));
    rc.batch_size = static_cast<int>(cfg.get_int("sweep_batch"));
    rc.learning_rate = cfg.get_double("sweep_lr");
    rc.beta = cfg.get_double("beta");
    rc.eps_norm = cfg.get_double("eps_norm");
    rc.loss_threshold = cfg.get_double("resolution_threshold");
    rc.test_count = static_cast<int>(cfg.get_int("test_count"));
    rc.seed = cfg.get_u64("seed");
    const auto rows = resolution_study(rc);
    std::ostringstream os;
    os << "# config " << hash << "\n";
    os << "n\tfinal_train_loss\tfinal_test_loss\tepochs_to_threshold\n";
    for (const auto& r : rows)
      os << r.n << "\t" << fmt(r.final_train_loss) << "\t" << fmt(r.final_test_loss) << "\t"
         << r.epochs_to_threshold << "\n";
    write_text(dir / "resolution.tsv", os.str());
  } else {
    throw config_error("unknown experiment '" + experiment + "'");
  }
  std::cout << "experiment " << experiment << " written to " << dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"phase2vec: dynamical-systems embeddings from lattice vector fields"};
  app.require_subcommand(1);

  CommonOpts gen_opts, train_opts, embed_opts, recon_opts, lasso_opts, eval_opts;
  std::string train_dataset, train_resume;
  std::string embed_ckpt, embed_dataset;
  std::string recon_ckpt, recon_dataset;
  std::string lasso_dataset;
  std::string eval_ckpt, eval_ckpt2, eval_experiment;

  CLI::App* generate = app.add_subcommand("generate", "sample a dataset and write it to disk");
  add_common(generate, gen_opts);

  CLI::App* train_cmd = app.add_subcommand("train", "train a model on a dataset file");
  train_cmd->add_option("dataset", train_dataset, "dataset file")->required();
  train_cmd->add_option("--resume", train_resume, "checkpoint to continue from");
  add_common(train_cmd, train_opts);

  CLI::App* embed = app.add_subcommand("embed", "embed every field of a dataset");
  embed->add_option("checkpoint", embed_ckpt)->required();
  embed->add_option("dataset", embed_dataset)->required();
  add_common(embed, embed_opts);

  CLI::App* reconstruct_cmd =
      app.add_subcommand("reconstruct", "decode governing equations for a dataset");
  reconstruct_cmd->add_option("checkpoint", recon_ckpt)->required();
  reconstruct_cmd->add_option("dataset", recon_dataset)->required();
  add_common(reconstruct_cmd, recon_opts);

  CLI::App* lasso_cmd = app.add_subcommand("lasso", "per-equation LASSO baseline over a dataset");
  lasso_cmd->add_option("dataset", lasso_dataset)->required();
  add_common(lasso_cmd, lasso_opts);

  CLI::App* eval_cmd = app.add_subcommand("eval", "run an evaluation experiment");
  eval_cmd->add_option("checkpoint", eval_ckpt, "model checkpoint (when the experiment needs one)");
  eval_cmd->add_option("--ckpt2", eval_ckpt2, "second checkpoint (homoclinic ablation)");
  eval_cmd->add_option("--experiment", eval_experiment, "experiment name override");
  add_common(eval_cmd, eval_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) return cmd_generate(gen_opts);
    if (train_cmd->parsed()) return cmd_train(train_opts, train_dataset, train_resume);
    if (embed->parsed()) return cmd_embed(embed_opts, embed_ckpt, embed_dataset);
    if (reconstruct_cmd->parsed()) return cmd_reconstruct(recon_opts, recon_ckpt, recon_dataset);
    if (lasso_cmd->parsed()) return cmd_lasso(lasso_opts, lasso_dataset);
    if (eval_cmd->parsed()) return cmd_eval(eval_opts, eval_ckpt, eval_ckpt2, eval_experiment);
  } catch (const training_diverged& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
