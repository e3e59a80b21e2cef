#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "phase2vec/adam.hpp"
#include "phase2vec/datagen.hpp"
#include "phase2vec/lattice.hpp"
#include "phase2vec/tape.hpp"

namespace p2v {

/// Architecture of the conv encoder + MLP decoder.
struct EncoderConfig {
  int q = 2;
  int n = 64;
  int conv_layers = 3;
  int channels = 128;
  int kernel = 3;
  int stride = 2;
  int embedding_dim = 0;  // 0 resolves to 100 for q=2, 256 for q=3
  int mlp_hidden = 128;
  double dropout_rate = 0.1;
  int c = 3;  // dictionary degree
  double bn_momentum = 0.1;
  double bn_eps = 1e-5;

  int d() const { return embedding_dim != 0 ? embedding_dim : (q == 2 ? 100 : 256); }
  int p() const { return static_cast<int>(binomial(q + c, c)); }
  /// Spatial extent after each conv layer (valid convolution).
  std::vector<int> feature_sizes() const;
  /// Flattened encoder feature count: channels * (last extent)^q.
  std::int64_t flat_features() const;
  void validate() const;
};

/// Training hyperparameters.
struct TrainConfig {
  double learning_rate = 1e-4;
  int epochs = 200;
  int batch_size = 64;
  double beta = 1e-3;      // sparsity weight
  double eps_norm = 1e-5;  // loss normalization constant
  NormMode norm_mode = NormMode::pointwise;
  double val_fraction = 0.1;
  std::uint64_t seed = 0;
  int save_interval = 0;  // epochs between periodic checkpoints; 0 = final only

  void validate() const;
};

using Embedding = std::vector<double>;

/// Model = architecture + named parameter tensors (weights and batch-norm
/// buffers).
struct Phase2VecModel {
  EncoderConfig config;
  ParamSet params;
};

/// Fresh model with uniform fan-in-scaled weights, zero biases, identity
/// batch-norm.
Phase2VecModel init_model(const EncoderConfig& config, Rng& rng);

/// Velocities as q input channels over the spatial grid: [q, n, ...].
Tensor field_to_channels(const VectorField& field);

/// Eval-mode embedding of one field.
Embedding encode(const Phase2VecModel& model, const VectorField& field);

/// Eval-mode embedding plus every intermediate activation shape (for the
/// architecture checks).
struct EncodeTrace {
  std::vector<std::vector<std::int64_t>> activation_shapes;  // after each conv block
  Embedding embedding;
};
EncodeTrace encode_with_trace(const Phase2VecModel& model, const VectorField& field);

/// Eval-mode decode of one embedding into a p x q coefficient matrix.
CoefficientMatrix decode(const Phase2VecModel& model, const Embedding& z);

/// encode + decode + dictionary evaluation of the result on `field`'s lattice.
struct Reconstruction {
  CoefficientMatrix coefficients;
  VectorField field;
};
Reconstruction reconstruct(const Phase2VecModel& model, const VectorField& field);

/// Batched eval-mode paths used by the experiment sweeps.
std::vector<Embedding> encode_batch(const Phase2VecModel& model,
                                    const std::vector<const VectorField*>& fields,
                                    int batch_size = 64);
std::vector<CoefficientMatrix> decode_embeddings(const Phase2VecModel& model,
                                                 const std::vector<Embedding>& zs,
                                                 int batch_size = 64);

/// Per-grid-point loss terms |t - r| / (|t| + eps) (or plain |t - r| when
/// `normalized` is false).
std::vector<double> pointwise_loss_terms(const VectorField& truth, const VectorField& recon,
                                         double eps, bool normalized);
/// Mean of the normalized pointwise terms.
double normalized_recon_loss(const VectorField& truth, const VectorField& recon, double eps);
/// Mean of the plain pointwise terms.
double unnormalized_recon_loss(const VectorField& truth, const VectorField& recon);
/// Whole-field ratio |T - R|_F / (|T|_F + eps).
double global_recon_ratio(const VectorField& truth, const VectorField& recon, double eps);

/// Sum of absolute coefficient values.
double sparsity_loss(const CoefficientMatrix& xi);

/// Reconstruction loss of Phi*Xi against `truth` plus beta * |Xi|_1.
double total_loss(const VectorField& truth, const CoefficientMatrix& xi, double beta, double eps,
                  NormMode mode = NormMode::pointwise);

/// One recorded epoch. val_loss is NaN when no validation split exists.
struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = std::nan("");
};

struct TrainResult {
  std::vector<EpochRecord> history;
};

/// Mini-batch Adam on the physics loss. One iteration is one shuffled epoch
/// over the training split. Epochs [start_epoch, end_epoch) are run, so a
/// resumed call with the checkpointed Adam state continues the original
/// run bit-for-bit. Throws training_diverged on a non-finite loss.
TrainResult train(Phase2VecModel& model, const LabeledDataset& dataset, const TrainConfig& config,
                  AdamState& state, int start_epoch, int end_epoch,
                  const std::function<void(const EpochRecord&)>& on_epoch = nullptr);

/// Fresh training run over config.epochs epochs; returns the Adam state for
/// checkpointing.
TrainResult train(Phase2VecModel& model, const LabeledDataset& dataset, const TrainConfig& config,
                  AdamState* state_out = nullptr);

/// One batch of the full training graph: bound parameter leaves, the decoded
/// coefficient batch and the scalar loss. Exposed for the gradient checks;
/// `update_running` lets callers freeze batch-norm buffers while probing.
struct BatchGraph {
  Var loss;
  Var embedding;
  Var xi;
  std::vector<Var> trainable;  // aligned with the ParamSet trainable order
};
BatchGraph build_batch_graph(Tape& tape, const Phase2VecModel& model, const Tensor& input,
                             const Tensor& truth, const Tensor& phi, const TrainConfig& config,
                             bool train_mode, Rng* dropout_rng, bool update_running);

}  // namespace p2v
