#pragma once

#include <string>
#include <vector>

#include "phase2vec/poly.hpp"

namespace p2v {

/// Frobenius norm of the coefficient difference.
double parameter_error(const CoefficientMatrix& estimate, const CoefficientMatrix& truth);

/// |recon|_1 / |pert|_1; the denominator must be positive.
double sparsity_ratio(const CoefficientMatrix& recon, const CoefficientMatrix& pert);

/// Mean sparsity ratio with zero-denominator pairs excluded (and counted).
struct RatioStat {
  double mean = 0.0;
  int included = 0;
  int excluded = 0;
};
RatioStat mean_sparsity_ratio(const std::vector<const CoefficientMatrix*>& recon,
                              const std::vector<const CoefficientMatrix*>& pert);

/// One evaluated sample; NaN marks a metric that does not apply (e.g.
/// parameter error without ground-truth coefficients).
struct SampleRecord {
  std::string family;
  int index = 0;
  double param_error = 0.0;
  double norm_recon = 0.0;
  double unnorm_recon = 0.0;
  double sparsity = 0.0;
};

struct GroupStat {
  int count = 0;
  double mean = 0.0;
  double stddev = 0.0;  // population std over non-NaN values
};
GroupStat stat_over(const std::vector<double>& values);

/// Per-sample records plus the identifiers needed to regenerate them.
/// Aggregates are always recomputed from the records.
struct MetricsReport {
  std::string experiment;
  std::string config_hash;
  std::vector<SampleRecord> records;

  std::vector<std::string> families() const;  // in first-appearance order
  GroupStat family_stat(const std::string& family, double SampleRecord::*field) const;
  GroupStat aggregate_stat(double SampleRecord::*field) const;
};

/// FNV-1a hash of a config echo, hex-encoded; ties metric files to the exact
/// configuration that produced them.
std::string config_hash(const std::string& echo_text);

}  // namespace p2v
