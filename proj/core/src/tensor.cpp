#include "phase2vec/tensor.hpp"

#include <cmath>
#include <sstream>

#include "phase2vec/errors.hpp"

namespace p2v {

std::int64_t shape_numel(const std::vector<std::int64_t>& shape) {
  std::int64_t n = 1;
  for (std::int64_t d : shape) {
    if (d <= 0) throw dimension_error("tensor dimensions must be positive, got " + shape_to_string(shape));
    n *= d;
  }
  return n;
}

std::string shape_to_string(const std::vector<std::int64_t>& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << "]";
  return os.str();
}

Tensor::Tensor(std::vector<std::int64_t> shape, double fill)
    : shape_(std::move(shape)), data_(static_cast<std::size_t>(shape_numel(shape_)), fill) {}

Tensor::Tensor(std::vector<std::int64_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_numel(shape_) != static_cast<std::int64_t>(data_.size()))
    throw dimension_error("data length " + std::to_string(data_.size()) +
                          " does not match shape " + shape_to_string(shape_));
}

Tensor Tensor::uniform(std::vector<std::int64_t> shape, double lo, double hi, Rng& rng) {
  Tensor t(std::move(shape));
  for (auto& x : t.data_) x = rng.uniform(lo, hi);
  return t;
}

bool Tensor::all_finite() const {
  for (double x : data_)
    if (!std::isfinite(x)) return false;
  return true;
}

void Tensor::fill(double v) {
  for (auto& x : data_) x = v;
}

Tensor Tensor::reshaped(std::vector<std::int64_t> shape) const {
  if (shape_numel(shape) != numel())
    throw dimension_error("reshape from " + shape_str() + " to " + shape_to_string(shape));
  Tensor t = *this;
  t.shape_ = std::move(shape);
  return t;
}

std::string Tensor::shape_str() const { return shape_to_string(shape_); }

}  // namespace p2v
