#include "phase2vec/metrics.hpp"

#include <cmath>
#include <cstdint>

#include "phase2vec/errors.hpp"

namespace p2v {

double parameter_error(const CoefficientMatrix& estimate, const CoefficientMatrix& truth) {
  if (estimate.p != truth.p || estimate.q != truth.q)
    throw dimension_error("parameter_error: shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < estimate.values.size(); ++i) {
    const double d = estimate.values[i] - truth.values[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

double sparsity_ratio(const CoefficientMatrix& recon, const CoefficientMatrix& pert) {
  const double den = pert.l1_norm();
  if (den <= 0.0) throw contract_error("sparsity_ratio: reference norm must be positive");
  return recon.l1_norm() / den;
}

RatioStat mean_sparsity_ratio(const std::vector<const CoefficientMatrix*>& recon,
                              const std::vector<const CoefficientMatrix*>& pert) {
  if (recon.size() != pert.size()) throw dimension_error("mean_sparsity_ratio: list sizes differ");
  RatioStat stat;
  double acc = 0.0;
  for (std::size_t i = 0; i < recon.size(); ++i) {
    const double den = pert[i]->l1_norm();
    if (den <= 0.0) {
      ++stat.excluded;
      continue;
    }
    acc += recon[i]->l1_norm() / den;
    ++stat.included;
  }
  stat.mean = stat.included > 0 ? acc / static_cast<double>(stat.included) : std::nan("");
  return stat;
}

GroupStat stat_over(const std::vector<double>& values) {
  GroupStat s;
  double acc = 0.0;
  for (double v : values) {
    if (std::isnan(v)) continue;
    acc += v;
    ++s.count;
  }
  if (s.count == 0) {
    s.mean = std::nan("");
    s.stddev = std::nan("");
    return s;
  }
  s.mean = acc / static_cast<double>(s.count);
  double var = 0.0;
  for (double v : values) {
    if (std::isnan(v)) continue;
    var += (v - s.mean) * (v - s.mean);
  }
  s.stddev = std::sqrt(var / static_cast<double>(s.count));
  return s;
}

std::vector<std::string> MetricsReport::families() const {
  std::vector<std::string> out;
  for (const auto& r : records) {
    bool seen = false;
    for (const auto& f : out)
      if (f == r.family) {
        seen = true;
        break;
      }
    if (!seen) out.push_back(r.family);
  }
  return out;
}

GroupStat MetricsReport::family_stat(const std::string& family,
                                     double SampleRecord::*field) const {
  std::vector<double> values;
  for (const auto& r : records)
    if (r.family == family) values.push_back(r.*field);
  return stat_over(values);
}

GroupStat MetricsReport::aggregate_stat(double SampleRecord::*field) const {
  std::vector<double> values;
  values.reserve(records.size());
  for (const auto& r : records) values.push_back(r.*field);
  return stat_over(values);
}

std::string config_hash(const std::string& echo_text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : echo_text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace p2v
