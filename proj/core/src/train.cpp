#include <algorithm>
#include <cmath>
#include <numeric>

#include "phase2vec/errors.hpp"
#include "phase2vec/model.hpp"

namespace p2v {

namespace {

// Salt spacing for the derived generator streams.
constexpr std::uint64_t kSaltSplit = 11;
constexpr std::uint64_t kSaltShuffle = 1u << 20;
constexpr std::uint64_t kSaltDropout = 1u << 21;

Tensor truth_rows(const LabeledDataset& ds, const std::vector<std::size_t>& idx) {
  const std::int64_t nq = static_cast<std::int64_t>(ds.samples[idx[0]].field.velocities.size());
  Tensor t({static_cast<std::int64_t>(idx.size()), nq});
  for (std::size_t s = 0; s < idx.size(); ++s) {
    const auto& v = ds.samples[idx[s]].field.velocities;
    std::copy(v.begin(), v.end(), t.vec().begin() + static_cast<std::int64_t>(s) * nq);
  }
  return t;
}

Tensor input_rows(const EncoderConfig& cfg, const LabeledDataset& ds,
                  const std::vector<std::size_t>& idx) {
  std::vector<std::int64_t> shape{static_cast<std::int64_t>(idx.size()), cfg.q};
  for (int a = 0; a < cfg.q; ++a) shape.push_back(cfg.n);
  Tensor t(std::move(shape));
  const std::int64_t per = t.numel() / static_cast<std::int64_t>(idx.size());
  for (std::size_t s = 0; s < idx.size(); ++s) {
    const Tensor chan = field_to_channels(ds.samples[idx[s]].field);
    std::copy(chan.vec().begin(), chan.vec().end(),
              t.vec().begin() + static_cast<std::int64_t>(s) * per);
  }
  return t;
}

double mean_eval_loss(const Phase2VecModel& model, const LabeledDataset& ds,
                      const std::vector<std::size_t>& indices, const TrainConfig& cfg,
                      const Tensor& phi) {
  if (indices.empty()) return std::nan("");
  double acc = 0.0;
  std::size_t done = 0;
  while (done < indices.size()) {
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size),
                                                   indices.size() - done);
    std::vector<std::size_t> chunk(indices.begin() + static_cast<std::ptrdiff_t>(done),
                                   indices.begin() + static_cast<std::ptrdiff_t>(done + take));
    Tape tape;
    BatchGraph g = build_batch_graph(tape, model, input_rows(model.config, ds, chunk),
                                     truth_rows(ds, chunk), phi, cfg, /*train_mode=*/false,
                                     nullptr, /*update_running=*/false);
    acc += tape.value(g.loss)[0] * static_cast<double>(take);
    done += take;
  }
  return acc / static_cast<double>(indices.size());
}

}  // namespace

TrainResult train(Phase2VecModel& model, const LabeledDataset& dataset, const TrainConfig& config,
                  AdamState& state, int start_epoch, int end_epoch,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  config.validate();
  model.config.validate();
  if (dataset.samples.empty()) throw config_error("train: dataset is empty");
  if (dataset.lattice.q != model.config.q || dataset.lattice.n != model.config.n)
    throw dimension_error("train: dataset lattice does not match the encoder configuration");

  const MonomialDictionary dict = build_dictionary(model.config.q, model.config.c);
  const Tensor phi = dictionary_matrix(dict, dataset.lattice);
  const Rng base(config.seed);

  // Fixed split: shuffle once with the split stream, hold out the tail.
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  {
    Rng split_rng = base.fork(kSaltSplit);
    shuffle(order, split_rng);
  }
  const std::size_t n_val =
      static_cast<std::size_t>(std::floor(config.val_fraction * static_cast<double>(order.size())));
  std::vector<std::size_t> val_idx(order.end() - static_cast<std::ptrdiff_t>(n_val), order.end());
  std::vector<std::size_t> train_idx(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_val));
  if (train_idx.empty()) throw config_error("train: validation split leaves no training data");

  TrainResult result;
  for (int epoch = start_epoch; epoch < end_epoch; ++epoch) {
    Rng shuffle_rng = base.fork(kSaltShuffle + static_cast<std::uint64_t>(epoch));
    Rng dropout_rng = base.fork(kSaltDropout + static_cast<std::uint64_t>(epoch));
    std::vector<std::size_t> epoch_order = train_idx;
    shuffle(epoch_order, shuffle_rng);

    // Batch boundaries; a trailing singleton is folded into the previous
    // batch because train-mode batch norm needs at least two rows.
    std::vector<std::pair<std::size_t, std::size_t>> batches;
    std::size_t pos = 0;
    while (pos < epoch_order.size()) {
      std::size_t end = std::min(epoch_order.size(), pos + static_cast<std::size_t>(config.batch_size));
      if (epoch_order.size() - end == 1) end = epoch_order.size();
      batches.emplace_back(pos, end);
      pos = end;
    }

    double loss_sum = 0.0;
    int batch_no = 0;
    for (const auto& [b0, b1] : batches) {
      std::vector<std::size_t> chunk(epoch_order.begin() + static_cast<std::ptrdiff_t>(b0),
                                     epoch_order.begin() + static_cast<std::ptrdiff_t>(b1));
      const double weight = static_cast<double>(chunk.size());
      if (chunk.size() == 1) chunk.push_back(chunk[0]);  // present twice; loss weight stays 1
      Tape tape;
      BatchGraph g = build_batch_graph(tape, model, input_rows(model.config, dataset, chunk),
                                       truth_rows(dataset, chunk), phi, config,
                                       /*train_mode=*/true, &dropout_rng, /*update_running=*/true);
      const double loss_value = tape.value(g.loss)[0];
      if (!std::isfinite(loss_value))
        throw training_diverged("train: non-finite loss at epoch " + std::to_string(epoch) +
                                    ", batch " + std::to_string(batch_no),
                                epoch, batch_no);
      tape.backward(g.loss);
      std::vector<const Tensor*> grads;
      grads.reserve(g.trainable.size());
      for (Var v : g.trainable) grads.push_back(&tape.grad(v));
      adam_step(model.params, grads, state);
      loss_sum += loss_value * weight;
      ++batch_no;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(train_idx.size());
    rec.val_loss = mean_eval_loss(model, dataset, val_idx, config, phi);
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return result;
}

TrainResult train(Phase2VecModel& model, const LabeledDataset& dataset, const TrainConfig& config,
                  AdamState* state_out) {
  AdamState state = AdamState::init(model.params, config.learning_rate);
  TrainResult r = train(model, dataset, config, state, 0, config.epochs);
  if (state_out) *state_out = std::move(state);
  return r;
}

}  // namespace p2v
