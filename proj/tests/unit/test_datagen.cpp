#include <doctest.h>

#include <cmath>
#include <complex>
#include <set>

#include "phase2vec/datagen.hpp"
#include "phase2vec/errors.hpp"

using namespace p2v;

TEST_CASE("training coefficient law: zero inflation and support") {
  Rng rng(101);
  const int draws = 100000;
  int zeros = 0;
  double sum = 0.0;
  int nonzero = 0;
  for (int i = 0; i < draws; ++i) {
    const double v = sample_coefficient(rng);
    if (v == 0.0) {
      ++zeros;
    } else {
      CHECK(v >= -3.0);
      CHECK(v <= 3.0);
      sum += v;
      ++nonzero;
    }
  }
  const double zero_frac = static_cast<double>(zeros) / draws;
  CHECK(std::abs(zero_frac - 0.75) < 0.01);
  CHECK(std::abs(sum / nonzero) < 0.05);
}

TEST_CASE("random polynomial sampler is deterministic under a fixed seed") {
  Rng a(7), b(7);
  const PolynomialSystem s1 = sample_random_polynomial(a, 2, 3);
  const PolynomialSystem s2 = sample_random_polynomial(b, 2, 3);
  CHECK(s1.coefficients.values == s2.coefficients.values);
}

TEST_CASE("conservative samples have exactly zero curl") {
  const MonomialDictionary dict = build_dictionary(2, 3);
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const PolynomialSystem sys = sample_conservative(rng, dict);
    CHECK(analytic_curl_2d(sys).max_abs_coeff() < 1e-12);
  }
}

TEST_CASE("hand gradients: x1^2 and x1 x2") {
  const MonomialDictionary dict = build_dictionary(2, 3);
  const Poly x1 = Poly::variable(2, 0);
  const Poly x2 = Poly::variable(2, 1);
  {
    const auto g = gradient(x1 * x1);
    const PolynomialSystem sys = PolynomialSystem::from_components(dict, g);
    CHECK(sys.coefficients.at(dict.index_of({1, 0}), 0) == doctest::Approx(2.0));
    CHECK(sys.component(1).is_zero());
  }
  {
    const auto g = gradient(x1 * x2);
    const PolynomialSystem sys = PolynomialSystem::from_components(dict, g);
    CHECK(sys.coefficients.at(dict.index_of({0, 1}), 0) == doctest::Approx(1.0));
    CHECK(sys.coefficients.at(dict.index_of({1, 0}), 1) == doctest::Approx(1.0));
  }
}

TEST_CASE("nonconservative samples always carry nonzero curl") {
  const MonomialDictionary dict = build_dictionary(2, 3);
  Rng rng(13);
  for (int i = 0; i < 1000; ++i) {
    const PolynomialSystem sys = sample_nonconservative(rng, dict);
    CHECK(analytic_curl_2d(sys).max_abs_coeff() > 1e-9);
  }
}

TEST_CASE("curl acceptance predicate distinguishes the classic pair") {
  const MonomialDictionary dict = build_dictionary(2, 3);
  const Poly x1 = Poly::variable(2, 0);
  const Poly x2 = Poly::variable(2, 1);
  const PolynomialSystem rot = PolynomialSystem::from_components(dict, {x2, x1 * -1.0});
  CHECK(analytic_curl_2d(rot).max_abs_coeff() > 1e-9);  // would be accepted
  const PolynomialSystem grad_like = PolynomialSystem::from_components(dict, {x2, x1});
  CHECK(analytic_curl_2d(grad_like).max_abs_coeff() < 1e-12);  // would be rejected
}

TEST_CASE("incompressible samples have exactly zero divergence") {
  const MonomialDictionary dict = build_dictionary(2, 3);
  Rng rng(17);
  for (int i = 0; i < 200; ++i) {
    const PolynomialSystem sys = sample_incompressible(rng, dict);
    CHECK(analytic_divergence(sys).max_abs_coeff() < 1e-12);
  }
}

TEST_CASE("harmonic construction: f(z) = z^2 and f(z) = z") {
  // Re(z^2) = x1^2 - x2^2, so the field is (2x1, -2x2).
  const MonomialDictionary dict = build_dictionary(2, 3);
  const Poly x1 = Poly::variable(2, 0);
  const Poly x2 = Poly::variable(2, 1);
  const Poly a = x1 * x1 - x2 * x2;
  const PolynomialSystem sys = PolynomialSystem::from_components(dict, gradient(a));
  CHECK(sys.coefficients.at(dict.index_of({1, 0}), 0) == doctest::Approx(2.0));
  CHECK(sys.coefficients.at(dict.index_of({0, 1}), 1) == doctest::Approx(-2.0));
  CHECK(analytic_divergence(sys).is_zero());

  const PolynomialSystem lin = PolynomialSystem::from_components(dict, gradient(x1));
  CHECK(lin.coefficients.at(dict.index_of({0, 0}), 0) == doctest::Approx(1.0));
  CHECK(lin.component(1).is_zero());
}

TEST_CASE("linear stability classification against an eigenvalue oracle") {
  CHECK(*classify_linear({-1.0, 0.0, 0.0, -2.0}) == StabilityClass::stable_node);
  CHECK(*classify_linear({0.0, 1.0, -1.0, -0.5}) == StabilityClass::stable_spiral);
  CHECK(*classify_linear({1.0, 0.0, 0.0, -1.0}) == StabilityClass::saddle);
  CHECK_FALSE(classify_linear({1.0, 0.0, 0.0, 0.0}).has_value());  // det = 0
  CHECK_FALSE(classify_linear({0.0, 1.0, -1.0, 0.0}).has_value()); // center: tr = 0, det > 0

  Rng rng(19);
  int checked = 0;
  while (checked < 10000) {
    std::array<double, 4> A;
    for (double& v : A) v = rng.uniform(-3, 3);
    const auto got = classify_linear(A);
    if (!got) continue;
    const std::complex<double> tr(A[0] + A[3], 0.0);
    const std::complex<double> disc = std::sqrt(std::complex<double>(
        (A[0] + A[3]) * (A[0] + A[3]) - 4.0 * (A[0] * A[3] - A[1] * A[2]), 0.0));
    const std::complex<double> l1 = 0.5 * (tr + disc);
    const std::complex<double> l2 = 0.5 * (tr - disc);
    StabilityClass want;
    if (std::abs(l1.imag()) > 1e-12) {
      want = l1.real() < 0.0 ? StabilityClass::stable_spiral : StabilityClass::unstable_spiral;
    } else if (l1.real() * l2.real() < 0.0) {
      want = StabilityClass::saddle;
    } else {
      want = l1.real() < 0.0 ? StabilityClass::stable_node : StabilityClass::unstable_node;
    }
    CHECK(*got == want);
    ++checked;
  }
}

TEST_CASE("linear stability dataset is balanced and oracle-consistent") {
  Rng rng(23);
  const Lattice lattice(2, 8);
  const LabeledDataset ds = sample_linear_stability_dataset(rng, 3, lattice);
  CHECK(ds.size() == 15);
  std::array<int, 5> counts{};
  const MonomialDictionary dict = build_dictionary(2, 3);
  for (const auto& s : ds.samples) {
    counts[static_cast<std::size_t>(s.label)] += 1;
    REQUIRE(s.params.size() == 4);
    const auto cls = classify_linear({s.params[0], s.params[1], s.params[2], s.params[3]});
    REQUIRE(cls.has_value());
    CHECK(static_cast<int>(*cls) == s.label);
    REQUIRE(s.coefficients.has_value());
    for (int i = 0; i < dict.size(); ++i) {
      const auto& e = dict.exponents[static_cast<std::size_t>(i)];
      const bool linear_row = (e == Exponents{1, 0}) || (e == Exponents{0, 1});
      if (!linear_row) {
        CHECK(s.coefficients->at(i, 0) == 0.0);
        CHECK(s.coefficients->at(i, 1) == 0.0);
      }
    }
  }
  for (int c = 0; c < 5; ++c) CHECK(counts[static_cast<std::size_t>(c)] == 3);

  Rng rng2(29);
  const LabeledDataset one = sample_linear_stability_dataset(rng2, 1, lattice);
  CHECK(one.size() == 5);
  std::set<int> labels;
  for (const auto& s : one.samples) labels.insert(s.label);
  CHECK(labels.size() == 5);
}

TEST_CASE("classical sampling respects ranges and label rules") {
  Rng rng(31);
  for (int i = 0; i < 100; ++i) {
    const ClassicalSystem sys = sample_classical(rng, Family::fitzhugh_nagumo);
    CHECK(sys.params[0] >= 0.1);
    CHECK(sys.params[0] <= 0.5);
    CHECK(sys.params[1] >= 10.0);
    CHECK(sys.params[1] <= 15.0);
    const int label = classical_label(sys);
    CHECK(label == (sys.params[0] < 0.35 ? 14 : 15));
  }
}

TEST_CASE("two-class datasets are balanced and property-exact") {
  Rng rng(37);
  const Lattice lattice(2, 8);
  const LabeledDataset cons = sample_conservativity_dataset(rng, 5, lattice);
  CHECK(cons.size() == 10);
  int positives = 0;
  for (const auto& s : cons.samples)
    if (s.label == 1) ++positives;
  CHECK(positives == 5);

  const LabeledDataset inc = sample_incompressibility_dataset(rng, 5, lattice);
  CHECK(inc.size() == 10);
  const MonomialDictionary dict = build_dictionary(2, 3);
  for (const auto& s : inc.samples) {
    REQUIRE(s.coefficients.has_value());
    const PolynomialSystem sys(dict, *s.coefficients);
    const double div = analytic_divergence(sys).max_abs_coeff();
    if (s.label == 1)
      CHECK(div < 1e-12);
    else
      CHECK(div > 1e-9);
  }
}

TEST_CASE("training set: size, exclusion and determinism") {
  const Lattice lattice(2, 8);
  Rng rng(41);
  const LabeledDataset ds = build_training_set(rng, 64, lattice);
  CHECK(ds.size() == 64);

  const MonomialDictionary dict = build_dictionary(2, 3);
  std::vector<std::vector<bool>> excluded;
  for (const auto& info : family_catalog()) {
    if (info.q != 2 || info.family == Family::simple_oscillator) continue;
    excluded.push_back(family_support(info.family, dict));
  }
  for (const auto& s : ds.samples) {
    REQUIRE(s.coefficients.has_value());
    std::vector<bool> support(s.coefficients->values.size());
    for (std::size_t k = 0; k < support.size(); ++k)
      support[k] = s.coefficients->values[k] != 0.0;
    for (const auto& pattern : excluded) CHECK(support != pattern);
  }

  Rng r1(43), r2(43);
  const LabeledDataset a = build_training_set(r1, 16, lattice);
  const LabeledDataset b = build_training_set(r2, 16, lattice);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.samples[i].field.velocities == b.samples[i].field.velocities);
    CHECK(a.samples[i].coefficients->values == b.samples[i].coefficients->values);
  }

  Rng r3(1);
  CHECK_THROWS_AS(build_training_set(r3, 0, lattice), config_error);
}

TEST_CASE("class task catalog") {
  CHECK(class_count(ClassTask::conservativity) == 2);
  CHECK(class_count(ClassTask::incompressibility) == 2);
  CHECK(class_count(ClassTask::linear_stability) == 5);
  CHECK(class_count(ClassTask::classical_id) == 16);
  CHECK(class_task_from_name("linear-stability") == ClassTask::linear_stability);
  CHECK_THROWS_AS(class_task_from_name("nope"), config_error);
}
