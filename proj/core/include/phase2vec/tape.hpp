#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "phase2vec/rng.hpp"
#include "phase2vec/tensor.hpp"

namespace p2v {

/// How the field reconstruction loss is normalized.
enum class NormMode {
  pointwise,     // mean over grid points of |err| / (|truth| + eps)
  global_ratio,  // whole-field Frobenius ratio
  none           // mean over grid points of |err|
};

/// Handle to a node on a Tape.
struct Var {
  std::int32_t id = -1;
  bool valid() const { return id >= 0; }
};

/// Reverse-mode autodiff over a linear record of operations.
///
/// Nodes are appended in execution order, which is already a topological
/// order; backward() walks the record once in reverse. All kernels either
/// write disjoint output ranges per worker or reduce over fixed-size sample
/// chunks, so results do not depend on the worker count and are bitwise
/// reproducible for a fixed seed.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf holding a copy of `value`; participates in gradients iff
  /// value.requires_grad() is set.
  Var leaf(Tensor value);
  /// Leaf that never receives a gradient.
  Var constant(Tensor value);

  Var relu(Var x);
  Var reshape(Var x, std::vector<std::int64_t> shape);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var x, double s);
  Var sum(Var x);
  Var mean(Var x);
  /// sa*a + sb*b for scalars or same-shape tensors.
  Var add_scaled(Var a, double sa, Var b, double sb);

  /// x:[B,m] w:[m,k] b:[k] -> [B,k]
  Var linear(Var x, Var w, Var b);

  /// Valid (unpadded) strided cross-correlation.
  /// x:[B,Cin,S...] w:[Cout,Cin,k...] b:[Cout] -> [B,Cout,S'...],
  /// S' = floor((S-k)/stride)+1. Spatial rank 2 or 3.
  Var conv(Var x, Var w, Var b, int stride);

  /// Per-channel batch normalization over [B,C,...]. In train mode uses batch
  /// statistics and updates the running buffers in place (momentum mix,
  /// unbiased variance in the running estimate); in eval mode uses the
  /// running buffers. B must be >= 2 in train mode.
  Var batch_norm(Var x, Var gamma, Var beta, Tensor* running_mean, Tensor* running_var,
                 bool train, double momentum = 0.1, double eps = 1e-5,
                 bool update_running = true);

  /// Train mode zeroes elements with probability `rate` and scales survivors
  /// by 1/(1-rate); eval mode returns x unchanged (same node).
  Var dropout(Var x, double rate, bool train, Rng& rng);

  /// Physics reconstruction loss, fused for speed.
  /// xi:[B,p*q] row-major per sample, truth:[B,N*q] (grid-point major),
  /// phi:[N,p] dictionary values on the lattice. Returns the scalar
  /// batch-mean loss under `mode`.
  Var field_recon_loss(Var xi, const Tensor& truth, const Tensor& phi, int q,
                       double eps, NormMode mode);

  /// (1/B) * sum of absolute values for x:[B,K].
  Var l1_mean(Var x);

  const Tensor& value(Var v) const;
  /// Gradient of the last backward() target with respect to node v.
  const Tensor& grad(Var v) const;
  bool has_grad(Var v) const;

  /// Seeds d(loss)/d(loss)=1 and propagates in reverse topological order.
  /// `loss` must be scalar.
  void backward(Var loss);

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;  // empty until first accumulation
    bool requires_grad = false;
    std::function<void(Tape&, Node&)> backward;
  };

  Var push(Tensor value, bool requires_grad, std::function<void(Tape&, Node&)> bw);
  Node& node(Var v);
  const Node& node(Var v) const;
  Tensor& ensure_grad(Var v);
  void accumulate(Var v, const double* g, std::int64_t n);

  std::vector<Node> nodes_;
};

}  // namespace p2v
