#include "phase2vec/model.hpp"

#include <cmath>

#include "phase2vec/errors.hpp"

namespace p2v {

std::vector<int> EncoderConfig::feature_sizes() const {
  std::vector<int> sizes;
  int s = n;
  for (int layer = 0; layer < conv_layers; ++layer) {
    if (s < kernel)
      throw dimension_error("encoder: spatial extent " + std::to_string(s) +
                            " is smaller than the kernel at conv layer " + std::to_string(layer + 1));
    s = (s - kernel) / stride + 1;
    sizes.push_back(s);
  }
  return sizes;
}

std::int64_t EncoderConfig::flat_features() const {
  const std::vector<int> sizes = feature_sizes();
  std::int64_t flat = channels;
  for (int a = 0; a < q; ++a) flat *= sizes.back();
  return flat;
}

void EncoderConfig::validate() const {
  if (q != 2 && q != 3) throw config_error("encoder: q must be 2 or 3");
  if (n < 2) throw config_error("encoder: resolution must be >= 2");
  if (conv_layers < 1 || channels < 1 || kernel < 1 || stride < 1 || mlp_hidden < 1)
    throw config_error("encoder: layer sizes must be positive");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0)
    throw config_error("encoder: dropout rate must lie in [0, 1)");
  if (c < 1) throw config_error("encoder: dictionary degree must be >= 1");
  if (d() < 1) throw config_error("encoder: embedding dimension must be positive");
  feature_sizes();  // throws if the conv stack does not fit
}

void TrainConfig::validate() const {
  if (learning_rate <= 0.0) throw config_error("train: learning rate must be > 0");
  if (epochs < 1) throw config_error("train: epochs must be >= 1");
  if (batch_size < 1) throw config_error("train: batch size must be >= 1");
  if (beta < 0.0) throw config_error("train: sparsity weight must be >= 0");
  if (eps_norm <= 0.0) throw config_error("train: normalization epsilon must be > 0");
  if (val_fraction < 0.0 || val_fraction >= 1.0)
    throw config_error("train: validation fraction must lie in [0, 1)");
}

namespace {

std::string conv_prefix(int layer) { return "enc.conv" + std::to_string(layer + 1); }
std::string bn_prefix(int layer) { return "enc.bn" + std::to_string(layer + 1); }

Tensor he_uniform(std::vector<std::int64_t> shape, std::int64_t fan_in, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  return Tensor::uniform(std::move(shape), -bound, bound, rng);
}

}  // namespace

Phase2VecModel init_model(const EncoderConfig& config, Rng& rng) {
  config.validate();
  Phase2VecModel model;
  model.config = config;
  ParamSet& ps = model.params;

  std::int64_t kvol = 1;
  for (int a = 0; a < config.q; ++a) kvol *= config.kernel;

  for (int layer = 0; layer < config.conv_layers; ++layer) {
    const std::int64_t cin = layer == 0 ? config.q : config.channels;
    std::vector<std::int64_t> wshape{config.channels, cin};
    for (int a = 0; a < config.q; ++a) wshape.push_back(config.kernel);
    ps.add(conv_prefix(layer) + ".w", he_uniform(std::move(wshape), cin * kvol, rng));
    ps.add(conv_prefix(layer) + ".b", Tensor({config.channels}, 0.0));
    ps.add(bn_prefix(layer) + ".gamma", Tensor({config.channels}, 1.0));
    ps.add(bn_prefix(layer) + ".beta", Tensor({config.channels}, 0.0));
    ps.add(bn_prefix(layer) + ".rmean", Tensor({config.channels}, 0.0), /*trainable=*/false);
    ps.add(bn_prefix(layer) + ".rvar", Tensor({config.channels}, 1.0), /*trainable=*/false);
  }

  const std::int64_t flat = config.flat_features();
  ps.add("enc.fc.w", he_uniform({flat, config.d()}, flat, rng));
  ps.add("enc.fc.b", Tensor({config.d()}, 0.0));

  ps.add("dec.fc1.w", he_uniform({config.d(), config.mlp_hidden}, config.d(), rng));
  ps.add("dec.fc1.b", Tensor({config.mlp_hidden}, 0.0));
  ps.add("dec.bn.gamma", Tensor({config.mlp_hidden}, 1.0));
  ps.add("dec.bn.beta", Tensor({config.mlp_hidden}, 0.0));
  ps.add("dec.bn.rmean", Tensor({config.mlp_hidden}, 0.0), /*trainable=*/false);
  ps.add("dec.bn.rvar", Tensor({config.mlp_hidden}, 1.0), /*trainable=*/false);
  const std::int64_t out = static_cast<std::int64_t>(config.p()) * config.q;
  ps.add("dec.fc2.w", he_uniform({config.mlp_hidden, out}, config.mlp_hidden, rng));
  ps.add("dec.fc2.b", Tensor({out}, 0.0));
  return model;
}

Tensor field_to_channels(const VectorField& field) {
  const Lattice& l = field.lattice;
  const std::int64_t N = l.points();
  std::vector<std::int64_t> shape{l.q};
  for (int a = 0; a < l.q; ++a) shape.push_back(l.n);
  Tensor t(std::move(shape));
  for (std::int64_t i = 0; i < N; ++i)
    for (int j = 0; j < l.q; ++j) t[j * N + i] = field.at(i, j);
  return t;
}

namespace {

struct ForwardOut {
  Var embedding;
  Var xi;
  std::vector<Var> conv_outputs;
  std::vector<Var> trainable;
};

// Builds the encoder+decoder graph over a bound copy of the parameters.
// `params` is only mutated through batch-norm running buffers, and only when
// train_mode && update_running.
ForwardOut run_forward(Tape& tape, const EncoderConfig& cfg, ParamSet& params, Var input,
                       bool train_mode, Rng* dropout_rng, bool update_running) {
  std::vector<Var> trainable;
  std::vector<Var> bound(params.size());
  for (std::size_t i = 0; i < params.entries().size(); ++i) {
    const auto& e = params.entries()[i];
    if (!e.trainable) continue;
    bound[i] = tape.leaf(e.tensor);
    trainable.push_back(bound[i]);
  }
  auto var_of = [&](const std::string& name) -> Var {
    for (std::size_t i = 0; i < params.entries().size(); ++i)
      if (params.entries()[i].name == name) return bound[i];
    throw config_error("unbound parameter: " + name);
  };

  ForwardOut out;
  Var x = input;
  for (int layer = 0; layer < cfg.conv_layers; ++layer) {
    x = tape.conv(x, var_of(conv_prefix(layer) + ".w"), var_of(conv_prefix(layer) + ".b"),
                  cfg.stride);
    out.conv_outputs.push_back(x);
    x = tape.batch_norm(x, var_of(bn_prefix(layer) + ".gamma"), var_of(bn_prefix(layer) + ".beta"),
                        &params.get(bn_prefix(layer) + ".rmean"),
                        &params.get(bn_prefix(layer) + ".rvar"), train_mode, cfg.bn_momentum,
                        cfg.bn_eps, update_running);
    x = tape.relu(x);
  }
  const std::int64_t B = tape.value(input).dim(0);
  x = tape.reshape(x, {B, cfg.flat_features()});
  out.embedding = tape.linear(x, var_of("enc.fc.w"), var_of("enc.fc.b"));

  Var h = tape.linear(out.embedding, var_of("dec.fc1.w"), var_of("dec.fc1.b"));
  h = tape.batch_norm(h, var_of("dec.bn.gamma"), var_of("dec.bn.beta"), &params.get("dec.bn.rmean"),
                      &params.get("dec.bn.rvar"), train_mode, cfg.bn_momentum, cfg.bn_eps,
                      update_running);
  h = tape.relu(h);
  if (train_mode) {
    if (!dropout_rng) throw contract_error("train-mode forward requires a dropout generator");
    h = tape.dropout(h, cfg.dropout_rate, /*train=*/true, *dropout_rng);
  }
  out.xi = tape.linear(h, var_of("dec.fc2.w"), var_of("dec.fc2.b"));
  out.trainable = std::move(trainable);
  return out;
}

Tensor batch_input(const EncoderConfig& cfg, const std::vector<const VectorField*>& fields) {
  std::vector<std::int64_t> shape{static_cast<std::int64_t>(fields.size()), cfg.q};
  for (int a = 0; a < cfg.q; ++a) shape.push_back(cfg.n);
  Tensor t(std::move(shape));
  const std::int64_t per = t.numel() / static_cast<std::int64_t>(fields.size());
  for (std::size_t s = 0; s < fields.size(); ++s) {
    const Tensor chan = field_to_channels(*fields[s]);
    std::copy(chan.vec().begin(), chan.vec().end(), t.vec().begin() + static_cast<std::int64_t>(s) * per);
  }
  return t;
}

void check_field(const EncoderConfig& cfg, const VectorField& field) {
  if (field.lattice.q != cfg.q || field.lattice.n != cfg.n)
    throw dimension_error("field resolution " + std::to_string(field.lattice.n) + "^" +
                          std::to_string(field.lattice.q) + " does not match the model (" +
                          std::to_string(cfg.n) + "^" + std::to_string(cfg.q) + ")");
}

}  // namespace

BatchGraph build_batch_graph(Tape& tape, const Phase2VecModel& model, const Tensor& input,
                             const Tensor& truth, const Tensor& phi, const TrainConfig& config,
                             bool train_mode, Rng* dropout_rng, bool update_running) {
  ParamSet& params = const_cast<ParamSet&>(model.params);
  Var in = tape.constant(input);
  ForwardOut fwd =
      run_forward(tape, model.config, params, in, train_mode, dropout_rng, update_running);
  Var recon = tape.field_recon_loss(fwd.xi, truth, phi, model.config.q, config.eps_norm,
                                    config.norm_mode);
  BatchGraph g;
  if (config.beta != 0.0) {
    Var l1 = tape.l1_mean(fwd.xi);
    g.loss = tape.add_scaled(recon, 1.0, l1, config.beta);
  } else {
    g.loss = recon;
  }
  g.embedding = fwd.embedding;
  g.xi = fwd.xi;
  g.trainable = std::move(fwd.trainable);
  return g;
}

EncodeTrace encode_with_trace(const Phase2VecModel& model, const VectorField& field) {
  check_field(model.config, field);
  ParamSet& params = const_cast<ParamSet&>(model.params);  // eval path never writes
  Tape tape;
  Var in = tape.constant(batch_input(model.config, {&field}));
  ForwardOut fwd = run_forward(tape, model.config, params, in, /*train_mode=*/false, nullptr,
                               /*update_running=*/false);
  EncodeTrace trace;
  for (Var v : fwd.conv_outputs) {
    const auto& s = tape.value(v).shape();
    trace.activation_shapes.emplace_back(s.begin() + 1, s.end());  // drop batch dim
  }
  const Tensor& z = tape.value(fwd.embedding);
  trace.embedding.assign(z.data(), z.data() + z.numel());
  return trace;
}

Embedding encode(const Phase2VecModel& model, const VectorField& field) {
  return encode_with_trace(model, field).embedding;
}

std::vector<Embedding> encode_batch(const Phase2VecModel& model,
                                    const std::vector<const VectorField*>& fields, int batch_size) {
  ParamSet& params = const_cast<ParamSet&>(model.params);
  std::vector<Embedding> out;
  out.reserve(fields.size());
  for (std::size_t start = 0; start < fields.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(fields.size(), start + static_cast<std::size_t>(batch_size));
    std::vector<const VectorField*> chunk(fields.begin() + static_cast<std::ptrdiff_t>(start),
                                          fields.begin() + static_cast<std::ptrdiff_t>(end));
    for (const VectorField* f : chunk) check_field(model.config, *f);
    Tape tape;
    Var in = tape.constant(batch_input(model.config, chunk));
    ForwardOut fwd = run_forward(tape, model.config, params, in, false, nullptr, false);
    const Tensor& z = tape.value(fwd.embedding);
    const std::int64_t d = z.dim(1);
    for (std::size_t s = 0; s < chunk.size(); ++s)
      out.emplace_back(z.data() + static_cast<std::int64_t>(s) * d,
                       z.data() + static_cast<std::int64_t>(s + 1) * d);
  }
  return out;
}

namespace {

// Decoder-only eval graph for precomputed embeddings.
std::vector<CoefficientMatrix> decode_impl(const Phase2VecModel& model,
                                           const std::vector<Embedding>& zs) {
  ParamSet& params = const_cast<ParamSet&>(model.params);
  const EncoderConfig& cfg = model.config;
  const std::int64_t B = static_cast<std::int64_t>(zs.size());
  Tensor zt({B, cfg.d()});
  for (std::int64_t s = 0; s < B; ++s) {
    if (static_cast<int>(zs[static_cast<std::size_t>(s)].size()) != cfg.d())
      throw dimension_error("embedding length does not match the model");
    std::copy(zs[static_cast<std::size_t>(s)].begin(), zs[static_cast<std::size_t>(s)].end(),
              zt.vec().begin() + s * cfg.d());
  }
  Tape tape;
  Var z = tape.constant(std::move(zt));
  Var h = tape.linear(z, tape.leaf(params.get("dec.fc1.w")), tape.leaf(params.get("dec.fc1.b")));
  h = tape.batch_norm(h, tape.leaf(params.get("dec.bn.gamma")), tape.leaf(params.get("dec.bn.beta")),
                      &params.get("dec.bn.rmean"), &params.get("dec.bn.rvar"), /*train=*/false,
                      cfg.bn_momentum, cfg.bn_eps, /*update_running=*/false);
  h = tape.relu(h);
  Var xi = tape.linear(h, tape.leaf(params.get("dec.fc2.w")), tape.leaf(params.get("dec.fc2.b")));
  const Tensor& xv = tape.value(xi);
  std::vector<CoefficientMatrix> out;
  out.reserve(zs.size());
  const int p = cfg.p();
  for (std::int64_t s = 0; s < B; ++s) {
    CoefficientMatrix m(p, cfg.q);
    std::copy(xv.data() + s * p * cfg.q, xv.data() + (s + 1) * p * cfg.q, m.values.begin());
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace

CoefficientMatrix decode(const Phase2VecModel& model, const Embedding& z) {
  return decode_impl(model, {z})[0];
}

std::vector<CoefficientMatrix> decode_embeddings(const Phase2VecModel& model,
                                                 const std::vector<Embedding>& zs, int batch_size) {
  std::vector<CoefficientMatrix> out;
  out.reserve(zs.size());
  for (std::size_t start = 0; start < zs.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(zs.size(), start + static_cast<std::size_t>(batch_size));
    std::vector<Embedding> chunk(zs.begin() + static_cast<std::ptrdiff_t>(start),
                                 zs.begin() + static_cast<std::ptrdiff_t>(end));
    auto part = decode_impl(model, chunk);
    for (auto& m : part) out.push_back(std::move(m));
  }
  return out;
}

Reconstruction reconstruct(const Phase2VecModel& model, const VectorField& field) {
  Reconstruction r;
  r.coefficients = decode(model, encode(model, field));
  const MonomialDictionary dict = build_dictionary(model.config.q, model.config.c);
  r.field = eval_on_lattice(PolynomialSystem(dict, r.coefficients), field.lattice);
  return r;
}

std::vector<double> pointwise_loss_terms(const VectorField& truth, const VectorField& recon,
                                         double eps, bool normalized) {
  if (!(truth.lattice == recon.lattice))
    throw dimension_error("loss terms: fields live on different lattices");
  const std::int64_t N = truth.lattice.points();
  const int q = truth.lattice.q;
  std::vector<double> terms(static_cast<std::size_t>(N));
  for (std::int64_t i = 0; i < N; ++i) {
    double nr = 0.0, nt = 0.0;
    for (int j = 0; j < q; ++j) {
      const double r = truth.at(i, j) - recon.at(i, j);
      nr += r * r;
      nt += truth.at(i, j) * truth.at(i, j);
    }
    nr = std::sqrt(nr);
    terms[static_cast<std::size_t>(i)] = normalized ? nr / (std::sqrt(nt) + eps) : nr;
  }
  return terms;
}

double normalized_recon_loss(const VectorField& truth, const VectorField& recon, double eps) {
  const std::vector<double> terms = pointwise_loss_terms(truth, recon, eps, true);
  double acc = 0.0;
  for (double t : terms) acc += t;
  return acc / static_cast<double>(terms.size());
}

double unnormalized_recon_loss(const VectorField& truth, const VectorField& recon) {
  const std::vector<double> terms = pointwise_loss_terms(truth, recon, 0.0, false);
  double acc = 0.0;
  for (double t : terms) acc += t;
  return acc / static_cast<double>(terms.size());
}

double global_recon_ratio(const VectorField& truth, const VectorField& recon, double eps) {
  if (!(truth.lattice == recon.lattice))
    throw dimension_error("loss: fields live on different lattices");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < truth.velocities.size(); ++i) {
    const double r = truth.velocities[i] - recon.velocities[i];
    num += r * r;
    den += truth.velocities[i] * truth.velocities[i];
  }
  return std::sqrt(num) / (std::sqrt(den) + eps);
}

double sparsity_loss(const CoefficientMatrix& xi) { return xi.l1_norm(); }

namespace {

int degree_for(int q, int p) {
  for (int c = 1; c <= 12; ++c)
    if (binomial(q + c, c) == p) return c;
  throw dimension_error("no dictionary degree yields " + std::to_string(p) + " monomials for q = " +
                        std::to_string(q));
}

}  // namespace

double total_loss(const VectorField& truth, const CoefficientMatrix& xi, double beta, double eps,
                  NormMode mode) {
  const MonomialDictionary dict = build_dictionary(truth.lattice.q, degree_for(truth.lattice.q, xi.p));
  const VectorField recon = eval_on_lattice(PolynomialSystem(dict, xi), truth.lattice);
  double rec;
  switch (mode) {
    case NormMode::pointwise:
      rec = normalized_recon_loss(truth, recon, eps);
      break;
    case NormMode::none:
      rec = unnormalized_recon_loss(truth, recon);
      break;
    case NormMode::global_ratio:
      rec = global_recon_ratio(truth, recon, eps);
      break;
    default:
      throw config_error("unknown normalization mode");
  }
  return rec + beta * sparsity_loss(xi);
}

}  // namespace p2v
