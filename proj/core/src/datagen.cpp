#include "phase2vec/datagen.hpp"

#include <cmath>

#include "phase2vec/errors.hpp"

namespace p2v {

namespace {
constexpr int kMaxRejections = 1000;
constexpr double kCurlTol = 1e-9;
}  // namespace

int class_count(ClassTask task) {
  switch (task) {
    case ClassTask::conservativity:
    case ClassTask::incompressibility:
      return 2;
    case ClassTask::linear_stability:
      return 5;
    case ClassTask::classical_id:
      return 16;
  }
  throw config_error("unknown class task");
}

const char* class_task_name(ClassTask task) {
  switch (task) {
    case ClassTask::conservativity:
      return "conservativity";
    case ClassTask::incompressibility:
      return "incompressibility";
    case ClassTask::linear_stability:
      return "linear-stability";
    case ClassTask::classical_id:
      return "classical-id";
  }
  throw config_error("unknown class task");
}

ClassTask class_task_from_name(const std::string& name) {
  for (ClassTask t : {ClassTask::conservativity, ClassTask::incompressibility,
                      ClassTask::linear_stability, ClassTask::classical_id})
    if (name == class_task_name(t)) return t;
  throw config_error("unknown classification task: " + name);
}

void LabeledDataset::add(LabeledSample s) {
  if (!(s.field.lattice == lattice))
    throw dimension_error("dataset samples must share one lattice");
  samples.push_back(std::move(s));
}

double sample_coefficient(Rng& rng) {
  if (rng.uniform() < 0.75) return 0.0;
  return rng.uniform(-3.0, 3.0);
}

PolynomialSystem sample_random_polynomial(Rng& rng, int q, int c) {
  MonomialDictionary dict = build_dictionary(q, c);
  CoefficientMatrix m(dict.size(), q);
  for (double& v : m.values) v = sample_coefficient(rng);
  return PolynomialSystem(std::move(dict), std::move(m));
}

PolynomialSystem sample_conservative(Rng& rng, const MonomialDictionary& dict) {
  if (dict.q != 2) throw config_error("conservative sampler requires q = 2");
  Poly scalar(2);
  for (const auto& e : dict.exponents) {
    const double v = sample_coefficient(rng);
    if (v != 0.0) scalar.add_term(e, v);
  }
  return PolynomialSystem::from_components(dict, gradient(scalar));
}

PolynomialSystem sample_nonconservative(Rng& rng, const MonomialDictionary& dict) {
  if (dict.q != 2) throw config_error("nonconservative sampler requires q = 2");
  for (int tries = 0; tries < kMaxRejections; ++tries) {
    PolynomialSystem sys = sample_random_polynomial(rng, dict.q, dict.c);
    if (analytic_curl_2d(sys).max_abs_coeff() > kCurlTol) return sys;
  }
  throw sampling_error("nonconservative sampler: 1000 consecutive rejections");
}

PolynomialSystem sample_incompressible(Rng& rng, const MonomialDictionary& dict) {
  if (dict.q != 2) throw config_error("incompressible sampler requires q = 2");
  // f(z) = sum_k (alpha_k + i beta_k) z^k, k <= c. The real part
  // a = sum alpha_k Re(z^k) - beta_k Im(z^k) is harmonic, so grad(a) is
  // divergence free.
  const Poly x1 = Poly::variable(2, 0);
  const Poly x2 = Poly::variable(2, 1);
  Poly re = Poly::constant(2, 1.0);  // Re/Im of z^k, starting at k = 0
  Poly im(2);
  Poly a(2);
  for (int k = 0; k <= dict.c; ++k) {
    if (k > 0) {
      const Poly nre = re * x1 - im * x2;
      const Poly nim = re * x2 + im * x1;
      re = nre;
      im = nim;
    }
    const double alpha = sample_coefficient(rng);
    const double beta = sample_coefficient(rng);
    a += re * alpha - im * beta;
  }
  return PolynomialSystem::from_components(dict, gradient(a));
}

PolynomialSystem sample_compressible(Rng& rng, const MonomialDictionary& dict) {
  if (dict.q != 2) throw config_error("compressible sampler requires q = 2");
  for (int tries = 0; tries < kMaxRejections; ++tries) {
    PolynomialSystem sys = sample_random_polynomial(rng, dict.q, dict.c);
    if (analytic_divergence(sys).max_abs_coeff() > kCurlTol) return sys;
  }
  throw sampling_error("compressible sampler: 1000 consecutive rejections");
}

std::optional<StabilityClass> classify_linear(const std::array<double, 4>& A, double tol) {
  const double tr = A[0] + A[3];
  const double det = A[0] * A[3] - A[1] * A[2];
  if (std::abs(det) <= tol) return std::nullopt;
  if (det < 0.0) return StabilityClass::saddle;
  const double disc = tr * tr - 4.0 * det;
  if (std::abs(tr) <= tol || std::abs(disc) <= tol) return std::nullopt;
  if (disc > 0.0)
    return tr < 0.0 ? StabilityClass::stable_node : StabilityClass::unstable_node;
  return tr < 0.0 ? StabilityClass::stable_spiral : StabilityClass::unstable_spiral;
}

namespace {

PolynomialSystem linear_system(const std::array<double, 4>& A, int c) {
  MonomialDictionary dict = build_dictionary(2, c);
  CoefficientMatrix m(dict.size(), 2);
  const int ix1 = dict.index_of({1, 0});
  const int ix2 = dict.index_of({0, 1});
  m.at(ix1, 0) = A[0];
  m.at(ix2, 0) = A[1];
  m.at(ix1, 1) = A[2];
  m.at(ix2, 1) = A[3];
  return PolynomialSystem(std::move(dict), std::move(m));
}

LabeledSample make_sample(const PolynomialSystem& sys, const Tensor& phi, const Lattice& lattice,
                          int label, std::string family = {}, std::vector<double> params = {}) {
  LabeledSample s;
  s.field = eval_on_lattice(sys.coefficients, phi, lattice);
  s.coefficients = sys.coefficients;
  s.label = label;
  s.family = std::move(family);
  s.params = std::move(params);
  return s;
}

}  // namespace

LabeledDataset sample_linear_stability_dataset(Rng& rng, int per_class, const Lattice& lattice) {
  if (per_class < 1) throw config_error("per_class must be >= 1");
  if (lattice.q != 2) throw config_error("linear stability dataset requires q = 2");
  const MonomialDictionary dict = build_dictionary(2, 3);
  const Tensor phi = dictionary_matrix(dict, lattice);
  LabeledDataset ds;
  ds.lattice = lattice;
  ds.c = dict.c;
  ds.label_set = 4;
  std::array<int, 5> remaining;
  remaining.fill(per_class);
  int total = 5 * per_class;
  LabeledDataset out = ds;
  while (total > 0) {
    std::array<double, 4> A;
    for (double& v : A) v = rng.uniform(-3.0, 3.0);
    const auto cls = classify_linear(A);
    if (!cls) continue;
    int& slot = remaining[static_cast<std::size_t>(*cls)];
    if (slot == 0) continue;
    --slot;
    --total;
    out.add(make_sample(linear_system(A, 3), phi, lattice, static_cast<int>(*cls), "linear",
                        {A[0], A[1], A[2], A[3]}));
  }
  return out;
}

ClassicalSystem sample_classical(Rng& rng, Family family) {
  const FamilyInfo& info = family_info(family);
  std::vector<double> params;
  params.reserve(static_cast<std::size_t>(info.arity));
  for (int i = 0; i < info.arity; ++i) {
    const auto& r = info.param_ranges[static_cast<std::size_t>(i)];
    params.push_back(rng.uniform(r[0], r[1]));
  }
  return ClassicalSystem(family, std::move(params));
}

LabeledDataset sample_conservativity_dataset(Rng& rng, int per_class, const Lattice& lattice) {
  if (per_class < 1) throw config_error("per_class must be >= 1");
  const MonomialDictionary dict = build_dictionary(2, 3);
  const Tensor phi = dictionary_matrix(dict, lattice);
  LabeledDataset ds;
  ds.lattice = lattice;
  ds.c = dict.c;
  ds.label_set = 2;
  for (int i = 0; i < per_class; ++i)
    ds.add(make_sample(sample_conservative(rng, dict), phi, lattice, 1, "conservative"));
  for (int i = 0; i < per_class; ++i)
    ds.add(make_sample(sample_nonconservative(rng, dict), phi, lattice, 0, "nonconservative"));
  return ds;
}

LabeledDataset sample_incompressibility_dataset(Rng& rng, int per_class, const Lattice& lattice) {
  if (per_class < 1) throw config_error("per_class must be >= 1");
  const MonomialDictionary dict = build_dictionary(2, 3);
  const Tensor phi = dictionary_matrix(dict, lattice);
  LabeledDataset ds;
  ds.lattice = lattice;
  ds.c = dict.c;
  ds.label_set = 3;
  for (int i = 0; i < per_class; ++i)
    ds.add(make_sample(sample_incompressible(rng, dict), phi, lattice, 1, "incompressible"));
  for (int i = 0; i < per_class; ++i)
    ds.add(make_sample(sample_compressible(rng, dict), phi, lattice, 0, "compressible"));
  return ds;
}

LabeledDataset sample_classical_dataset(Rng& rng, int per_family, const Lattice& lattice) {
  if (per_family < 1) throw config_error("per_family must be >= 1");
  if (lattice.q != 2) throw config_error("classical_id dataset requires q = 2");
  const MonomialDictionary dict = build_dictionary(2, 3);
  LabeledDataset ds;
  ds.lattice = lattice;
  ds.c = dict.c;
  ds.label_set = 1;
  for (const auto& info : family_catalog()) {
    if (info.q != 2) continue;
    for (int i = 0; i < per_family; ++i) {
      ClassicalSystem sys = sample_classical(rng, info.family);
      LabeledSample s;
      s.field = classical_field(sys, lattice);
      auto coeffs = exact_coefficients(sys, dict);
      if (coeffs) s.coefficients = std::move(*coeffs);
      s.label = classical_label(sys);
      s.family = info.name;
      s.params = sys.params;
      ds.add(std::move(s));
    }
  }
  return ds;
}

LabeledDataset build_training_set(Rng& rng, int count, const Lattice& lattice, int c) {
  if (count < 1) throw config_error("training set size must be >= 1");
  const MonomialDictionary dict = build_dictionary(lattice.q, c);
  const Tensor phi = dictionary_matrix(dict, lattice);
  std::vector<std::vector<bool>> excluded;
  for (const auto& info : family_catalog()) {
    if (info.q != lattice.q || info.family == Family::simple_oscillator) continue;
    excluded.push_back(family_support(info.family, dict));
  }
  LabeledDataset ds;
  ds.lattice = lattice;
  ds.c = c;
  ds.label_set = 0;
  for (int i = 0; i < count; ++i) {
    for (int tries = 0;; ++tries) {
      if (tries >= kMaxRejections)
        throw sampling_error("training sampler: could not avoid classical support patterns");
      PolynomialSystem sys = sample_random_polynomial(rng, lattice.q, c);
      std::vector<bool> support(sys.coefficients.values.size());
      for (std::size_t k = 0; k < support.size(); ++k) support[k] = sys.coefficients.values[k] != 0.0;
      bool clash = false;
      for (const auto& pattern : excluded)
        if (pattern == support) {
          clash = true;
          break;
        }
      if (clash) continue;
      ds.add(make_sample(sys, phi, lattice, 0, "polynomial"));
      break;
    }
  }
  return ds;
}

}  // namespace p2v
