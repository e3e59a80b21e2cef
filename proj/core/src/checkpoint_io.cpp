#include "phase2vec/checkpoint_io.hpp"

#include "io_detail.hpp"
#include "phase2vec/errors.hpp"

namespace p2v {

namespace {

void put_tensor_data(std::string& buf, const Tensor& t) {
  for (std::int64_t i = 0; i < t.numel(); ++i) detail::put<double>(buf, t[i]);
}

void take_tensor_data(const std::string& buf, std::size_t& pos, Tensor& t) {
  for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = detail::take<double>(buf, pos);
}

}  // namespace

void write_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  const EncoderConfig& e = ckpt.model.config;
  const TrainConfig& t = ckpt.train_config;
  std::string buf;
  buf.append("P2VC", 4);
  detail::put<std::uint16_t>(buf, kCheckpointVersion);
  detail::put<std::uint8_t>(buf, static_cast<std::uint8_t>(e.q));
  detail::put<std::uint16_t>(buf, static_cast<std::uint16_t>(e.n));
  detail::put<std::uint8_t>(buf, static_cast<std::uint8_t>(e.conv_layers));
  detail::put<std::uint16_t>(buf, static_cast<std::uint16_t>(e.channels));
  detail::put<std::uint8_t>(buf, static_cast<std::uint8_t>(e.kernel));
  detail::put<std::uint8_t>(buf, static_cast<std::uint8_t>(e.stride));
  detail::put<std::uint32_t>(buf, static_cast<std::uint32_t>(e.embedding_dim));
  detail::put<std::uint16_t>(buf, static_cast<std::uint16_t>(e.mlp_hidden));
  detail::put<double>(buf, e.dropout_rate);
  detail::put<std::uint8_t>(buf, static_cast<std::uint8_t>(e.c));
  detail::put<double>(buf, e.bn_momentum);
  detail::put<double>(buf, e.bn_eps);

  detail::put<double>(buf, t.learning_rate);
  detail::put<std::uint32_t>(buf, static_cast<std::uint32_t>(t.epochs));
  detail::put<std::uint32_t>(buf, static_cast<std::uint32_t>(t.batch_size));
  detail::put<double>(buf, t.beta);
  detail::put<double>(buf, t.eps_norm);
  detail::put<std::uint8_t>(buf, static_cast<std::uint8_t>(t.norm_mode));
  detail::put<double>(buf, t.val_fraction);
  detail::put<std::uint64_t>(buf, t.seed);
  detail::put<std::uint32_t>(buf, static_cast<std::uint32_t>(t.save_interval));

  detail::put<std::uint32_t>(buf, ckpt.epoch);

  const auto& entries = ckpt.model.params.entries();
  detail::put<std::uint32_t>(buf, static_cast<std::uint32_t>(entries.size()));
  for (const auto& entry : entries) {
    detail::put_string(buf, entry.name);
    detail::put<std::uint8_t>(buf, entry.trainable ? 1 : 0);
    detail::put<std::uint8_t>(buf, static_cast<std::uint8_t>(entry.tensor.rank()));
    for (std::int64_t d : entry.tensor.shape()) detail::put<std::uint32_t>(buf, static_cast<std::uint32_t>(d));
    put_tensor_data(buf, entry.tensor);
  }

  detail::put<std::uint64_t>(buf, static_cast<std::uint64_t>(ckpt.adam.step));
  detail::put<double>(buf, ckpt.adam.learning_rate);
  detail::put<double>(buf, ckpt.adam.beta1);
  detail::put<double>(buf, ckpt.adam.beta2);
  detail::put<double>(buf, ckpt.adam.epsilon);
  if (ckpt.adam.m.size() != ckpt.model.params.trainable_count())
    throw dimension_error("write_checkpoint: optimizer state does not match the parameters");
  for (const auto& m : ckpt.adam.m) put_tensor_data(buf, m);
  for (const auto& v : ckpt.adam.v) put_tensor_data(buf, v);

  detail::atomic_write(path, buf);
}

Checkpoint read_checkpoint(const std::string& path) {
  const std::string buf = detail::read_all(path);
  if (buf.size() < 4 || buf.compare(0, 4, "P2VC") != 0)
    throw io_error(path + ": not a checkpoint file (bad magic)");
  std::size_t pos = 4;
  const auto version = detail::take<std::uint16_t>(buf, pos);
  if (version != kCheckpointVersion)
    throw io_error(path + ": unsupported checkpoint version " + std::to_string(version));

  Checkpoint ckpt;
  EncoderConfig& e = ckpt.model.config;
  e.q = detail::take<std::uint8_t>(buf, pos);
  e.n = detail::take<std::uint16_t>(buf, pos);
  e.conv_layers = detail::take<std::uint8_t>(buf, pos);
  e.channels = detail::take<std::uint16_t>(buf, pos);
  e.kernel = detail::take<std::uint8_t>(buf, pos);
  e.stride = detail::take<std::uint8_t>(buf, pos);
  e.embedding_dim = static_cast<int>(detail::take<std::uint32_t>(buf, pos));
  e.mlp_hidden = detail::take<std::uint16_t>(buf, pos);
  e.dropout_rate = detail::take<double>(buf, pos);
  e.c = detail::take<std::uint8_t>(buf, pos);
  e.bn_momentum = detail::take<double>(buf, pos);
  e.bn_eps = detail::take<double>(buf, pos);

  TrainConfig& t = ckpt.train_config;
  t.learning_rate = detail::take<double>(buf, pos);
  t.epochs = static_cast<int>(detail::take<std::uint32_t>(buf, pos));
  t.batch_size = static_cast<int>(detail::take<std::uint32_t>(buf, pos));
  t.beta = detail::take<double>(buf, pos);
  t.eps_norm = detail::take<double>(buf, pos);
  t.norm_mode = static_cast<NormMode>(detail::take<std::uint8_t>(buf, pos));
  t.val_fraction = detail::take<double>(buf, pos);
  t.seed = detail::take<std::uint64_t>(buf, pos);
  t.save_interval = static_cast<int>(detail::take<std::uint32_t>(buf, pos));

  ckpt.epoch = detail::take<std::uint32_t>(buf, pos);

  const auto tensor_count = detail::take<std::uint32_t>(buf, pos);
  for (std::uint32_t i = 0; i < tensor_count; ++i) {
    const std::string name = detail::take_string(buf, pos);
    const bool trainable = detail::take<std::uint8_t>(buf, pos) != 0;
    const int ndim = detail::take<std::uint8_t>(buf, pos);
    std::vector<std::int64_t> shape;
    for (int d = 0; d < ndim; ++d) shape.push_back(detail::take<std::uint32_t>(buf, pos));
    Tensor tensor(shape);
    take_tensor_data(buf, pos, tensor);
    ckpt.model.params.add(name, std::move(tensor), trainable);
  }

  ckpt.adam.step = static_cast<std::int64_t>(detail::take<std::uint64_t>(buf, pos));
  ckpt.adam.learning_rate = detail::take<double>(buf, pos);
  ckpt.adam.beta1 = detail::take<double>(buf, pos);
  ckpt.adam.beta2 = detail::take<double>(buf, pos);
  ckpt.adam.epsilon = detail::take<double>(buf, pos);
  for (const auto& entry : ckpt.model.params.entries()) {
    if (!entry.trainable) continue;
    Tensor m(entry.tensor.shape());
    take_tensor_data(buf, pos, m);
    ckpt.adam.m.push_back(std::move(m));
  }
  for (const auto& entry : ckpt.model.params.entries()) {
    if (!entry.trainable) continue;
    Tensor v(entry.tensor.shape());
    take_tensor_data(buf, pos, v);
    ckpt.adam.v.push_back(std::move(v));
  }
  if (pos != buf.size()) throw io_error(path + ": trailing bytes after the optimizer state");
  return ckpt;
}

void write_embeddings(const std::vector<Embedding>& embeddings, const std::string& path) {
  if (embeddings.empty()) throw config_error("write_embeddings: nothing to write");
  const std::size_t d = embeddings[0].size();
  std::string buf;
  buf.append("P2VE", 4);
  detail::put<std::uint16_t>(buf, kEmbeddingsVersion);
  detail::put<std::uint32_t>(buf, static_cast<std::uint32_t>(embeddings.size()));
  detail::put<std::uint32_t>(buf, static_cast<std::uint32_t>(d));
  for (const auto& z : embeddings) {
    if (z.size() != d) throw dimension_error("write_embeddings: ragged embedding lengths");
    for (double v : z) detail::put<double>(buf, v);
  }
  detail::atomic_write(path, buf);
}

std::vector<Embedding> read_embeddings(const std::string& path) {
  const std::string buf = detail::read_all(path);
  if (buf.size() < 4 || buf.compare(0, 4, "P2VE") != 0)
    throw io_error(path + ": not an embeddings file (bad magic)");
  std::size_t pos = 4;
  const auto version = detail::take<std::uint16_t>(buf, pos);
  if (version != kEmbeddingsVersion)
    throw io_error(path + ": unsupported embeddings version " + std::to_string(version));
  const auto count = detail::take<std::uint32_t>(buf, pos);
  const auto d = detail::take<std::uint32_t>(buf, pos);
  std::vector<Embedding> out(count, Embedding(d));
  for (auto& z : out)
    for (double& v : z) v = detail::take<double>(buf, pos);
  if (pos != buf.size()) throw io_error(path + ": trailing bytes after the last embedding");
  return out;
}

}  // namespace p2v
