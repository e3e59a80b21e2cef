#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "phase2vec/tensor.hpp"

namespace p2v {

/// Ordered collection of named tensors: trainable weights plus non-trainable
/// buffers (batch-norm running statistics). Order is the serialization and
/// optimizer order.
class ParamSet {
 public:
  struct Entry {
    std::string name;
    Tensor tensor;
    bool trainable = true;
  };

  std::size_t add(std::string name, Tensor t, bool trainable = true);
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;
  bool has(const std::string& name) const;

  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  std::size_t trainable_count() const;
  std::int64_t trainable_scalars() const;

 private:
  std::vector<Entry> entries_;
};

/// Adam first/second moment accumulators, one pair per trainable tensor in
/// ParamSet order.
struct AdamState {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t step = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;

  static AdamState init(const ParamSet& params, double learning_rate);
};

/// One bias-corrected Adam update. `grads` must be aligned with the trainable
/// entries of `params` (same count, same shapes).
void adam_step(ParamSet& params, const std::vector<const Tensor*>& grads, AdamState& state);

}  // namespace p2v
