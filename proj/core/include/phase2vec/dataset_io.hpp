#pragma once

#include <string>

#include "phase2vec/datagen.hpp"

namespace p2v {

/// Binary dataset container, little-endian throughout.
///
///   header:  magic "P2VD" | version u16 | q u8 | n u16 | c u8 | count u32
///            | label_set u16 | seed u64
///   sample:  label i32 | coef_present u8 | [p*q f64 coefficients]
///            | q*n^q f32 field values (grid-point major)
///
/// p is binomial(q+c, c). The lattice is the recentered box [-1,1]^q.
/// Trailing bytes and bad magic/version/lengths raise io_error. Fields are
/// stored f32; coefficients (ground truth for error metrics) stay f64.
inline constexpr std::uint16_t kDatasetVersion = 1;

/// Label-set ids stored in the header.
enum class LabelSetId : std::uint16_t {
  none = 0,         // unlabeled training polynomials
  classical = 1,    // Table labels 0..15
  conservativity = 2,
  incompressibility = 3,
  linear_stability = 4,
};

void write_dataset(const LabeledDataset& dataset, const std::string& path);
LabeledDataset read_dataset(const std::string& path);

}  // namespace p2v
