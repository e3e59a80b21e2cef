#pragma once

#include <string>
#include <vector>

#include "phase2vec/adam.hpp"
#include "phase2vec/model.hpp"

namespace p2v {

/// Binary checkpoint, little-endian.
///
///   magic "P2VC" | version u16
///   | encoder echo: q u8, n u16, conv_layers u8, channels u16, kernel u8,
///     stride u8, embedding u32, mlp_hidden u16, dropout f64, c u8,
///     bn_momentum f64, bn_eps f64
///   | train echo: lr f64, epochs u32, batch u32, beta f64, eps_norm f64,
///     norm_mode u8, val_fraction f64, seed u64, save_interval u32
///   | epoch u32 (completed epochs)
///   | tensors: count u32, each: name (u16 len + bytes), trainable u8,
///     ndim u8, dims u32..., f64 data
///   | adam: step u64, lr f64, beta1 f64, beta2 f64, epsilon f64,
///     then m and v data per trainable tensor (shapes implied)
inline constexpr std::uint16_t kCheckpointVersion = 1;

struct Checkpoint {
  Phase2VecModel model;
  TrainConfig train_config;
  AdamState adam;
  std::uint32_t epoch = 0;
};

void write_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint read_checkpoint(const std::string& path);

/// Embeddings file: magic "P2VE" | version u16 | count u32 | d u32
/// | count*d f64.
inline constexpr std::uint16_t kEmbeddingsVersion = 1;

void write_embeddings(const std::vector<Embedding>& embeddings, const std::string& path);
std::vector<Embedding> read_embeddings(const std::string& path);

}  // namespace p2v
