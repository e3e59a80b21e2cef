#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "phase2vec/rng.hpp"

namespace p2v {

/// Dense row-major tensor of 64-bit floats.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::int64_t> shape, double fill = 0.0);
  Tensor(std::vector<std::int64_t> shape, std::vector<double> data);

  static Tensor scalar(double v) { return Tensor({1}, {v}); }
  static Tensor uniform(std::vector<std::int64_t> shape, double lo, double hi, Rng& rng);

  const std::vector<std::int64_t>& shape() const { return shape_; }
  std::int64_t dim(std::size_t i) const { return shape_[i]; }
  std::size_t rank() const { return shape_.size(); }
  std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  double& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  double operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

  bool requires_grad() const { return requires_grad_; }
  Tensor& set_requires_grad(bool v) {
    requires_grad_ = v;
    return *this;
  }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;
  void fill(double v);

  /// Reinterprets the buffer with a new shape of identical element count.
  Tensor reshaped(std::vector<std::int64_t> shape) const;

  std::string shape_str() const;

 private:
  std::vector<std::int64_t> shape_;
  std::vector<double> data_;
  bool requires_grad_ = false;
};

std::int64_t shape_numel(const std::vector<std::int64_t>& shape);
std::string shape_to_string(const std::vector<std::int64_t>& shape);

}  // namespace p2v
