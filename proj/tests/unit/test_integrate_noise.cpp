#include <doctest.h>

#include <cmath>

#include "phase2vec/datagen.hpp"
#include "phase2vec/errors.hpp"
#include "phase2vec/integrate.hpp"
#include "phase2vec/noise.hpp"

using namespace p2v;

namespace {

Rhs decay_rhs() {
  return [](std::span<const double> x, std::span<double> dx) {
    for (std::size_t i = 0; i < x.size(); ++i) dx[i] = -x[i];
  };
}

double cosine_similarity(const VectorField& a, const VectorField& b, bool nonempty_only) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::int64_t i = 0; i < a.lattice.points(); ++i) {
    if (nonempty_only) {
      bool empty = true;
      for (int j = 0; j < a.lattice.q; ++j)
        if (a.at(i, j) != 0.0) empty = false;
      if (empty) continue;
    }
    for (int j = 0; j < a.lattice.q; ++j) {
      dot += a.at(i, j) * b.at(i, j);
      na += a.at(i, j) * a.at(i, j);
      nb += b.at(i, j) * b.at(i, j);
    }
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

PolynomialSystem stable_node_system() {
  const MonomialDictionary dict = build_dictionary(2, 3);
  CoefficientMatrix m(10, 2);
  m.at(dict.index_of({1, 0}), 0) = -1.0;
  m.at(dict.index_of({0, 1}), 1) = -0.7;
  return PolynomialSystem(dict, m);
}

}  // namespace

TEST_CASE("zero right-hand side keeps the trajectory constant") {
  const Rhs rhs = [](std::span<const double>, std::span<double> dx) {
    for (auto& v : dx) v = 0.0;
  };
  const std::vector<double> x0{0.25, -0.5};
  const Trajectory t = integrate(rhs, x0, 0.01, 50);
  CHECK(t.rows() == 51);
  for (std::int64_t i = 0; i < t.rows(); ++i) {
    CHECK(t.state(i)[0] == 0.25);
    CHECK(t.state(i)[1] == -0.5);
  }
}

TEST_CASE("rk4 matches exponential decay to high accuracy") {
  const std::vector<double> x0{1.0, -2.0};
  const Trajectory t = integrate(decay_rhs(), x0, 0.01, 100);
  REQUIRE(t.rows() == 101);
  const double want = std::exp(-1.0);
  CHECK(std::abs(t.state(100)[0] - want) / want < 1e-8);
  CHECK(std::abs(t.state(100)[1] - (-2.0 * want)) / want < 1e-8);
}

TEST_CASE("rk4 conserves the harmonic oscillator radius") {
  const Rhs rhs = [](std::span<const double> x, std::span<double> dx) {
    dx[0] = x[1];
    dx[1] = -x[0];
  };
  const std::vector<double> x0{1.0, 0.0};
  const Trajectory t = integrate(rhs, x0, 0.01, 100);
  REQUIRE(t.rows() == 101);
  for (std::int64_t i = 0; i < t.rows(); ++i) {
    const double r = std::hypot(t.state(i)[0], t.state(i)[1]);
    CHECK(std::abs(r - 1.0) < 1e-9);
  }
}

TEST_CASE("halving the step improves rk4 by roughly sixteenfold") {
  const std::vector<double> x0{1.0};
  auto final_error = [&](double dt, int steps) {
    const Trajectory t = integrate(decay_rhs(), x0, dt, steps);
    return std::abs(t.state(t.rows() - 1)[0] - std::exp(-1.0));
  };
  const double e1 = final_error(0.05, 20);
  const double e2 = final_error(0.025, 40);
  const double ratio = e1 / e2;
  CHECK(ratio > 12.0);
  CHECK(ratio < 20.0);
}

TEST_CASE("euler is first order and available") {
  const std::vector<double> x0{1.0};
  const Trajectory t = integrate(decay_rhs(), x0, 0.01, 100, IntegrationMethod::euler);
  const double err = std::abs(t.state(100)[0] - std::exp(-1.0));
  CHECK(err > 1e-5);   // visibly worse than rk4
  CHECK(err < 1e-2);
}

TEST_CASE("trajectories truncate outside four times the lattice box") {
  const Lattice lattice(2, 8);
  const Rhs blowup = [](std::span<const double> x, std::span<double> dx) {
    dx[0] = 100.0 * (1.0 + std::abs(x[0]));
    dx[1] = 0.0;
  };
  const std::vector<double> x0{0.0, 0.0};
  const Trajectory t = integrate(blowup, x0, 0.01, 1000, IntegrationMethod::rk4, &lattice);
  CHECK(t.truncated);
  CHECK(t.rows() < 1001);
  for (std::int64_t i = 0; i < t.rows(); ++i) CHECK(std::abs(t.state(i)[0]) <= 4.0);
}

TEST_CASE("integrate validates dt and steps") {
  const std::vector<double> x0{1.0};
  CHECK_THROWS_AS(integrate(decay_rhs(), x0, 0.0, 10), config_error);
  CHECK_THROWS_AS(integrate(decay_rhs(), x0, 0.01, 0), config_error);
}

TEST_CASE("binning: no trajectories give the zero field") {
  const Lattice lattice(2, 8);
  const VectorField f = bin_trajectories({}, lattice);
  for (double v : f.velocities) CHECK(v == 0.0);
}

TEST_CASE("binning: one straight segment lands in the start cell") {
  const Lattice lattice(2, 4);
  Trajectory t;
  t.q = 2;
  t.dt = 0.5;
  // one step from (-0.9, -0.9) moving (+0.1, +0.2): velocity (0.2, 0.4)
  t.states = {-0.9, -0.9, -0.8, -0.7};
  const VectorField f = bin_trajectories({t}, lattice);
  const std::int64_t cell = lattice.cell_of(std::vector<double>{-0.9, -0.9});
  for (std::int64_t i = 0; i < lattice.points(); ++i) {
    if (i == cell) {
      CHECK(f.at(i, 0) == doctest::Approx(0.2));
      CHECK(f.at(i, 1) == doctest::Approx(0.4));
    } else {
      CHECK(f.at(i, 0) == 0.0);
      CHECK(f.at(i, 1) == 0.0);
    }
  }
}

TEST_CASE("dense trajectory fields approximate the true linear field") {
  const PolynomialSystem sys = stable_node_system();
  const Lattice lattice(2, 16);
  Rng rng(51);
  const VectorField binned = trajectory_field(sys, 2000, lattice, rng);
  const VectorField truth = eval_on_lattice(sys, lattice);
  CHECK(cosine_similarity(binned, truth, true) > 0.9);

  std::int64_t nonempty = 0;
  for (std::int64_t i = 0; i < lattice.points(); ++i)
    if (binned.at(i, 0) != 0.0 || binned.at(i, 1) != 0.0) ++nonempty;
  CHECK(static_cast<double>(nonempty) / static_cast<double>(lattice.points()) > 0.2);
}

TEST_CASE("sparse trajectory fields are mostly empty") {
  const PolynomialSystem sys = stable_node_system();
  const Lattice lattice(2, 16);
  Rng rng(53);
  const VectorField binned = trajectory_field(sys, 10, lattice, rng);
  std::int64_t empty = 0;
  for (std::int64_t i = 0; i < lattice.points(); ++i)
    if (binned.at(i, 0) == 0.0 && binned.at(i, 1) == 0.0) ++empty;
  CHECK(static_cast<double>(empty) / static_cast<double>(lattice.points()) > 0.5);
}

TEST_CASE("trajectory fields are deterministic under a fixed seed") {
  const PolynomialSystem sys = stable_node_system();
  const Lattice lattice(2, 8);
  Rng a(55), b(55);
  const VectorField f1 = trajectory_field(sys, 50, lattice, a);
  const VectorField f2 = trajectory_field(sys, 50, lattice, b);
  CHECK(f1.velocities == f2.velocities);
}

TEST_CASE("binned error decreases with trajectory count across the sweep grid") {
  const PolynomialSystem sys = stable_node_system();
  const Lattice lattice(2, 16);
  const VectorField truth = eval_on_lattice(sys, lattice);
  std::vector<double> counts, errors;
  for (int k = 0; k < 20; ++k) {
    const int n_traj = 10 + static_cast<int>(std::round(static_cast<double>(k) * 1990.0 / 19.0));
    Rng rng(100 + static_cast<std::uint64_t>(k));
    const VectorField binned = trajectory_field(sys, n_traj, lattice, rng);
    double mse = 0.0;
    std::int64_t cells = 0;
    for (std::int64_t i = 0; i < lattice.points(); ++i) {
      if (binned.at(i, 0) == 0.0 && binned.at(i, 1) == 0.0) continue;
      for (int j = 0; j < 2; ++j) {
        const double d = binned.at(i, j) - truth.at(i, j);
        mse += d * d;
      }
      ++cells;
    }
    counts.push_back(static_cast<double>(n_traj));
    errors.push_back(mse / static_cast<double>(cells));
  }
  // Spearman rank correlation between count and error.
  auto ranks = [](const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
      for (std::size_t j = 0; j < v.size(); ++j)
        if (v[j] < v[i] || (v[j] == v[i] && j < i)) r[i] += 1.0;
    return r;
  };
  const std::vector<double> rc = ranks(counts);
  const std::vector<double> re = ranks(errors);
  double num = 0.0;
  for (std::size_t i = 0; i < rc.size(); ++i) {
    const double d = rc[i] - re[i];
    num += d * d;
  }
  const double n = static_cast<double>(rc.size());
  const double spearman = 1.0 - 6.0 * num / (n * (n * n - 1.0));
  CHECK(spearman < -0.8);
}

TEST_CASE("gaussian noise: identity cases and calibrated magnitude") {
  const Lattice lattice(2, 64);
  VectorField field(lattice);
  Rng init(61);
  for (double& v : field.velocities) v = init.gaussian();  // sigma_true ~ 1

  Rng rng(63);
  const VectorField same = add_gaussian(field, 0.0, rng);
  CHECK(same.velocities == field.velocities);

  const double sigma_true = field.component_stddev();
  const VectorField noisy = add_gaussian(field, 0.3, rng);
  double var = 0.0;
  for (std::size_t i = 0; i < field.velocities.size(); ++i) {
    const double d = noisy.velocities[i] - field.velocities[i];
    var += d * d;
  }
  const double added_std = std::sqrt(var / static_cast<double>(field.velocities.size()));
  CHECK(std::abs(added_std - 0.3 * sigma_true) < 0.01);

  VectorField zero(lattice);
  const VectorField still_zero = add_gaussian(zero, 0.3, rng);
  CHECK(still_zero.velocities == zero.velocities);
}

TEST_CASE("zero masking: exact counts and edge proportions") {
  const Lattice lattice(2, 64);
  VectorField field(lattice);
  for (std::size_t i = 0; i < field.velocities.size(); ++i)
    field.velocities[i] = static_cast<double>(i % 17) + 1.0;  // no natural zeros

  Rng rng(67);
  const VectorField same = mask_zeros(field, 0.0, rng);
  CHECK(same.velocities == field.velocities);

  const VectorField masked = mask_zeros(field, 0.3, rng);
  std::int64_t zeroed = 0;
  for (std::int64_t i = 0; i < lattice.points(); ++i)
    if (masked.at(i, 0) == 0.0 && masked.at(i, 1) == 0.0) ++zeroed;
  CHECK(zeroed == 1228);  // floor(0.3 * 4096)

  const VectorField all = mask_zeros(field, 1.0, rng);
  for (double v : all.velocities) CHECK(v == 0.0);
}

TEST_CASE("parameter perturbation: identity, calibration and zero mean") {
  CoefficientMatrix m(10, 2);
  Rng rng(71);
  const CoefficientMatrix same = perturb_parameters(m, 0.0, rng);
  CHECK(same.values == m.values);

  // 1e5 coefficients via repeated perturbation of a large matrix
  CoefficientMatrix big(50000, 2);
  const CoefficientMatrix noisy = perturb_parameters(big, 0.1, rng);
  double mean = 0.0, var = 0.0;
  for (double v : noisy.values) mean += v;
  mean /= static_cast<double>(noisy.values.size());
  for (double v : noisy.values) var += (v - mean) * (v - mean);
  const double std = std::sqrt(var / static_cast<double>(noisy.values.size()));
  CHECK(std::abs(std - 0.1) < 0.002);
  CHECK(std::abs(mean) < 3.0 * 0.1 / std::sqrt(static_cast<double>(noisy.values.size())));
}

TEST_CASE("noise kind names round-trip") {
  for (auto kind : {NoiseSpec::Kind::gaussian, NoiseSpec::Kind::mask, NoiseSpec::Kind::trajectory,
                    NoiseSpec::Kind::parameter})
    CHECK(noise_kind_from_name(noise_kind_name(kind)) == kind);
  CHECK_THROWS_AS(noise_kind_from_name("thermal"), config_error);
}
