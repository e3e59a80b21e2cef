#include "phase2vec/dataset_io.hpp"

#include "io_detail.hpp"
#include "phase2vec/errors.hpp"

namespace p2v {

void write_dataset(const LabeledDataset& dataset, const std::string& path) {
  const int q = dataset.lattice.q;
  const int p = static_cast<int>(binomial(q + dataset.c, dataset.c));
  std::string buf;
  buf.append("P2VD", 4);
  detail::put<std::uint16_t>(buf, kDatasetVersion);
  detail::put<std::uint8_t>(buf, static_cast<std::uint8_t>(q));
  detail::put<std::uint16_t>(buf, static_cast<std::uint16_t>(dataset.lattice.n));
  detail::put<std::uint8_t>(buf, static_cast<std::uint8_t>(dataset.c));
  detail::put<std::uint32_t>(buf, static_cast<std::uint32_t>(dataset.size()));
  detail::put<std::uint16_t>(buf, static_cast<std::uint16_t>(dataset.label_set));
  detail::put<std::uint64_t>(buf, dataset.seed);
  for (const auto& s : dataset.samples) {
    detail::put<std::int32_t>(buf, s.label);
    detail::put<std::uint8_t>(buf, s.coefficients ? 1 : 0);
    if (s.coefficients) {
      if (s.coefficients->p != p || s.coefficients->q != q)
        throw dimension_error("write_dataset: coefficient shape does not match the header");
      for (double v : s.coefficients->values) detail::put<double>(buf, v);
    }
    for (double v : s.field.velocities) detail::put<float>(buf, static_cast<float>(v));
  }
  detail::atomic_write(path, buf);
}

LabeledDataset read_dataset(const std::string& path) {
  const std::string buf = detail::read_all(path);
  std::size_t pos = 0;
  if (buf.size() < 4 || buf.compare(0, 4, "P2VD") != 0)
    throw io_error(path + ": not a dataset file (bad magic)");
  pos = 4;
  const auto version = detail::take<std::uint16_t>(buf, pos);
  if (version != kDatasetVersion)
    throw io_error(path + ": unsupported dataset version " + std::to_string(version));
  const int q = detail::take<std::uint8_t>(buf, pos);
  const int n = detail::take<std::uint16_t>(buf, pos);
  const int c = detail::take<std::uint8_t>(buf, pos);
  const auto count = detail::take<std::uint32_t>(buf, pos);
  const auto label_set = detail::take<std::uint16_t>(buf, pos);
  const auto seed = detail::take<std::uint64_t>(buf, pos);

  LabeledDataset ds;
  ds.lattice = Lattice(q, n);
  ds.c = c;
  ds.label_set = label_set;
  ds.seed = seed;
  const int p = static_cast<int>(binomial(q + c, c));
  const std::int64_t field_len = static_cast<std::int64_t>(ds.lattice.points()) * q;
  for (std::uint32_t i = 0; i < count; ++i) {
    LabeledSample s;
    s.label = detail::take<std::int32_t>(buf, pos);
    const auto has_coeffs = detail::take<std::uint8_t>(buf, pos);
    if (has_coeffs > 1) throw io_error(path + ": corrupt coefficient flag");
    if (has_coeffs) {
      CoefficientMatrix m(p, q);
      for (double& v : m.values) v = detail::take<double>(buf, pos);
      s.coefficients = std::move(m);
    }
    s.field = VectorField(ds.lattice);
    for (std::int64_t j = 0; j < field_len; ++j)
      s.field.velocities[static_cast<std::size_t>(j)] = detail::take<float>(buf, pos);
    ds.samples.push_back(std::move(s));
  }
  if (pos != buf.size()) throw io_error(path + ": trailing bytes after the last sample");
  return ds;
}

}  // namespace p2v
