#pragma once

#include <stdexcept>
#include <string>

namespace p2v {

// Shape disagreement between tensors, fields or coefficient matrices.
struct dimension_error : std::runtime_error {
  explicit dimension_error(const std::string& what) : std::runtime_error(what) {}
};

// Invalid configuration value (bad rate, unsupported dimension, bad key, ...).
struct config_error : std::runtime_error {
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// API misuse that violates an operation contract (e.g. backward on a non-scalar).
struct contract_error : std::logic_error {
  explicit contract_error(const std::string& what) : std::logic_error(what) {}
};

// Rejection sampling exhausted its retry budget.
struct sampling_error : std::runtime_error {
  explicit sampling_error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or unreadable file.
struct io_error : std::runtime_error {
  explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

// Training produced a non-finite loss; carries the state needed for a diagnostic dump.
struct training_diverged : std::runtime_error {
  int epoch;
  int batch;
  training_diverged(const std::string& what, int epoch_, int batch_)
      : std::runtime_error(what), epoch(epoch_), batch(batch_) {}
};

}  // namespace p2v
