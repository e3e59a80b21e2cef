#include "phase2vec/noise.hpp"

#include <cmath>
#include <numeric>

#include "phase2vec/errors.hpp"

namespace p2v {

const char* noise_kind_name(NoiseSpec::Kind kind) {
  switch (kind) {
    case NoiseSpec::Kind::gaussian:
      return "gaussian";
    case NoiseSpec::Kind::mask:
      return "mask";
    case NoiseSpec::Kind::trajectory:
      return "trajectory";
    case NoiseSpec::Kind::parameter:
      return "parameter";
  }
  throw config_error("unknown noise kind");
}

NoiseSpec::Kind noise_kind_from_name(const std::string& name) {
  for (auto kind : {NoiseSpec::Kind::gaussian, NoiseSpec::Kind::mask, NoiseSpec::Kind::trajectory,
                    NoiseSpec::Kind::parameter})
    if (name == noise_kind_name(kind)) return kind;
  throw config_error("unknown noise kind: " + name);
}

VectorField add_gaussian(const VectorField& field, double sigma_rel, Rng& rng) {
  if (sigma_rel < 0.0) throw config_error("add_gaussian: sigma_rel must be >= 0");
  VectorField out = field;
  if (sigma_rel == 0.0) return out;
  const double sigma_true = field.component_stddev();
  if (sigma_true == 0.0) return out;
  const double sigma = sigma_rel * sigma_true;
  for (double& v : out.velocities) v += rng.gaussian(0.0, sigma);
  return out;
}

VectorField mask_zeros(const VectorField& field, double proportion, Rng& rng) {
  if (proportion < 0.0 || proportion > 1.0)
    throw config_error("mask_zeros: proportion must lie in [0, 1]");
  VectorField out = field;
  const std::int64_t total = field.lattice.points();
  const std::int64_t k = static_cast<std::int64_t>(std::floor(proportion * static_cast<double>(total)));
  if (k == 0) return out;
  std::vector<std::int64_t> idx(static_cast<std::size_t>(total));
  std::iota(idx.begin(), idx.end(), 0);
  // Partial Fisher-Yates: the first k entries are a uniform sample without
  // replacement.
  for (std::int64_t i = 0; i < k; ++i) {
    const std::int64_t j = i + static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(total - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  for (std::int64_t i = 0; i < k; ++i)
    for (int a = 0; a < field.lattice.q; ++a) out.at(idx[static_cast<std::size_t>(i)], a) = 0.0;
  return out;
}

CoefficientMatrix perturb_parameters(const CoefficientMatrix& coeffs, double sigma_param, Rng& rng) {
  if (sigma_param < 0.0) throw config_error("perturb_parameters: sigma must be >= 0");
  CoefficientMatrix out = coeffs;
  if (sigma_param == 0.0) return out;
  for (double& v : out.values) v += rng.gaussian(0.0, sigma_param);
  return out;
}

}  // namespace p2v
