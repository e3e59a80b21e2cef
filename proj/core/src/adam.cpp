#include "phase2vec/adam.hpp"

#include <cmath>

#include "phase2vec/errors.hpp"

namespace p2v {

std::size_t ParamSet::add(std::string name, Tensor t, bool trainable) {
  if (has(name)) throw config_error("duplicate parameter name: " + name);
  t.set_requires_grad(trainable);
  entries_.push_back(Entry{std::move(name), std::move(t), trainable});
  return entries_.size() - 1;
}

Tensor& ParamSet::get(const std::string& name) {
  for (auto& e : entries_)
    if (e.name == name) return e.tensor;
  throw config_error("unknown parameter: " + name);
}

const Tensor& ParamSet::get(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return e.tensor;
  throw config_error("unknown parameter: " + name);
}

bool ParamSet::has(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return true;
  return false;
}

std::size_t ParamSet::trainable_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_)
    if (e.trainable) ++n;
  return n;
}

std::int64_t ParamSet::trainable_scalars() const {
  std::int64_t n = 0;
  for (const auto& e : entries_)
    if (e.trainable) n += e.tensor.numel();
  return n;
}

AdamState AdamState::init(const ParamSet& params, double learning_rate) {
  AdamState s;
  s.learning_rate = learning_rate;
  for (const auto& e : params.entries()) {
    if (!e.trainable) continue;
    s.m.emplace_back(e.tensor.shape(), 0.0);
    s.v.emplace_back(e.tensor.shape(), 0.0);
  }
  return s;
}

void adam_step(ParamSet& params, const std::vector<const Tensor*>& grads, AdamState& state) {
  if (grads.size() != state.m.size())
    throw dimension_error("adam_step: gradient count " + std::to_string(grads.size()) +
                          " does not match state (" + std::to_string(state.m.size()) + ")");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  std::size_t slot = 0;
  for (auto& e : params.entries()) {
    if (!e.trainable) continue;
    const Tensor& g = *grads[slot];
    if (!g.same_shape(e.tensor))
      throw dimension_error("adam_step: gradient shape " + g.shape_str() +
                            " does not match parameter " + e.name + " " + e.tensor.shape_str());
    Tensor& m = state.m[slot];
    Tensor& v = state.v[slot];
    double* mp = m.data();
    double* vp = v.data();
    double* tp = e.tensor.data();
    const double* gp = g.data();
    const std::int64_t n = e.tensor.numel();
    for (std::int64_t i = 0; i < n; ++i) {
      mp[i] = state.beta1 * mp[i] + (1.0 - state.beta1) * gp[i];
      vp[i] = state.beta2 * vp[i] + (1.0 - state.beta2) * gp[i] * gp[i];
      const double mhat = mp[i] / bc1;
      const double vhat = vp[i] / bc2;
      tp[i] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
    }
    ++slot;
  }
}

}  // namespace p2v
