#include <doctest.h>

#include <cmath>

#include "phase2vec/errors.hpp"
#include "phase2vec/lattice.hpp"
#include "phase2vec/poly.hpp"
#include "phase2vec/rng.hpp"
#include "phase2vec/systems.hpp"

using namespace p2v;

TEST_CASE("dictionary counts and ordering") {
  const MonomialDictionary d23 = build_dictionary(2, 3);
  CHECK(d23.size() == 10);
  const std::vector<Exponents> want = {{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1},
                                       {0, 2}, {3, 0}, {2, 1}, {1, 2}, {0, 3}};
  CHECK(d23.exponents == want);

  CHECK(build_dictionary(3, 3).size() == 20);
  CHECK(build_dictionary(2, 1).size() == 3);
  for (int q : {2, 3})
    for (int c = 1; c <= 5; ++c)
      CHECK(build_dictionary(q, c).size() == binomial(q + c, c));
  CHECK_THROWS_AS(build_dictionary(4, 3), config_error);
}

TEST_CASE("dictionary evaluation") {
  const MonomialDictionary d = build_dictionary(2, 3);
  const std::vector<double> origin = eval_dictionary(d, std::vector<double>{0.0, 0.0});
  CHECK(origin[0] == 1.0);  // 0^0 = 1
  for (int i = 1; i < 10; ++i) CHECK(origin[static_cast<std::size_t>(i)] == 0.0);

  const std::vector<double> at = eval_dictionary(d, std::vector<double>{2.0, -1.0});
  const std::vector<double> want = {1, 2, -1, 4, -2, 1, 8, -4, 2, -1};
  for (int i = 0; i < 10; ++i)
    CHECK(at[static_cast<std::size_t>(i)] == doctest::Approx(want[static_cast<std::size_t>(i)]));

  const MonomialDictionary d3 = build_dictionary(3, 3);
  const std::vector<double> ones = eval_dictionary(d3, std::vector<double>{1.0, 1.0, 1.0});
  for (double v : ones) CHECK(v == 1.0);
}

TEST_CASE("lattice grid points and cells") {
  const Lattice l(2, 5);
  CHECK(l.points() == 25);
  CHECK(l.coord(0, 0) == -1.0);
  CHECK(l.coord(0, 4) == 1.0);
  CHECK(l.coord(0, 2) == 0.0);
  std::vector<double> pt(2);
  l.point_at(0, pt);
  CHECK(pt[0] == -1.0);
  CHECK(pt[1] == -1.0);
  l.point_at(24, pt);
  CHECK(pt[0] == 1.0);
  l.point_at(5, pt);  // row-major, axis 1 slowest
  CHECK(pt[0] == doctest::Approx(-0.5));
  CHECK(pt[1] == -1.0);

  CHECK(l.cell_of(std::vector<double>{-1.0, -1.0}) == 0);
  CHECK(l.cell_of(std::vector<double>{1.0, 1.0}) == 24);
  CHECK(l.cell_of(std::vector<double>{2.0, 0.0}) == -1);
  CHECK_THROWS_AS(Lattice(2, 1), config_error);
}

TEST_CASE("eval_on_lattice matches pointwise polynomial evaluation") {
  const MonomialDictionary dict = build_dictionary(2, 3);
  Rng rng(5);
  CoefficientMatrix m(10, 2);
  for (double& v : m.values) v = rng.uniform(-3, 3);
  const PolynomialSystem sys(dict, m);
  const Lattice lattice(2, 33);
  const VectorField field = eval_on_lattice(sys, lattice);
  std::vector<double> x(2);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::int64_t idx = static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(lattice.points())));
    lattice.point_at(idx, x);
    const std::vector<double> v = sys.velocity(x);
    CHECK(std::abs(field.at(idx, 0) - v[0]) < 1e-12);
    CHECK(std::abs(field.at(idx, 1) - v[1]) < 1e-12);
  }
}

TEST_CASE("eval_on_lattice examples") {
  const MonomialDictionary dict = build_dictionary(2, 3);
  // zero coefficients -> zero field
  const PolynomialSystem zero(dict, CoefficientMatrix(10, 2));
  const Lattice lattice(2, 9);
  const VectorField zf = eval_on_lattice(zero, lattice);
  for (double v : zf.velocities) CHECK(v == 0.0);

  // rotation dx1 = x2, dx2 = -x1: velocity at (1, 0) is (0, -1)
  CoefficientMatrix rot(10, 2);
  rot.at(dict.index_of({0, 1}), 0) = 1.0;
  rot.at(dict.index_of({1, 0}), 1) = -1.0;
  const PolynomialSystem rsys(dict, rot);
  const std::vector<double> v = rsys.velocity(std::vector<double>{1.0, 0.0});
  CHECK(v[0] == doctest::Approx(0.0));
  CHECK(v[1] == doctest::Approx(-1.0));
}

TEST_CASE("poly calculus: divergence and curl") {
  const MonomialDictionary dict = build_dictionary(2, 3);
  const Poly x1 = Poly::variable(2, 0);
  const Poly x2 = Poly::variable(2, 1);

  // div(x1, x2) = 2
  {
    const PolynomialSystem sys = PolynomialSystem::from_components(dict, {x1, x2});
    const Poly div = analytic_divergence(sys);
    CHECK(div.eval(std::vector<double>{0.3, -0.7}) == doctest::Approx(2.0));
    CHECK(div.total_degree() == 0);
  }
  // div(x2, -x1) = 0; curl(x2, -x1) = -2
  {
    const PolynomialSystem sys = PolynomialSystem::from_components(dict, {x2, x1 * -1.0});
    CHECK(analytic_divergence(sys).is_zero());
    const Poly curl = analytic_curl_2d(sys);
    CHECK(curl.eval(std::vector<double>{0.1, 0.9}) == doctest::Approx(-2.0));
  }
  // div(x1^2, x1x2) = 3x1
  {
    const PolynomialSystem sys = PolynomialSystem::from_components(dict, {x1 * x1, x1 * x2});
    const Poly div = analytic_divergence(sys);
    CHECK(div.eval(std::vector<double>{0.5, -2.0}) == doctest::Approx(1.5));
  }
  // curl(0, x1^2) = 2x1
  {
    const PolynomialSystem sys = PolynomialSystem::from_components(dict, {Poly(2), x1 * x1});
    const Poly curl = analytic_curl_2d(sys);
    CHECK(curl.eval(std::vector<double>{0.5, 0.0}) == doctest::Approx(1.0));
  }
  // curl of the gradient of x1^2 x2 is exactly zero
  {
    const Poly g = x1 * x1 * x2;
    const PolynomialSystem sys = PolynomialSystem::from_components(dict, gradient(g));
    CHECK(analytic_curl_2d(sys).is_zero());
  }
  // curl rejects 3-d systems
  {
    const MonomialDictionary d3 = build_dictionary(3, 2);
    const PolynomialSystem sys(d3, CoefficientMatrix(d3.size(), 3));
    CHECK_THROWS_AS(analytic_curl_2d(sys), config_error);
  }
}

TEST_CASE("curl of gradients vanishes for random scalar polynomials") {
  const MonomialDictionary dict = build_dictionary(2, 3);
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    Poly g(2);
    for (const auto& e : dict.exponents) g.add_term(e, rng.uniform(-3, 3));
    const PolynomialSystem sys = PolynomialSystem::from_components(dict, gradient(g));
    CHECK(analytic_curl_2d(sys).max_abs_coeff() < 1e-12);
  }
}

TEST_CASE("classical fields: fixed-point examples") {
  // Lotka-Volterra at the coexistence point
  {
    const ClassicalSystem lv(Family::lotka_volterra, {0.7});
    const std::vector<double> v = classical_rhs(lv, std::vector<double>{1.0, 1.0});
    CHECK(v[0] == doctest::Approx(0.0));
    CHECK(v[1] == doctest::Approx(0.0));
  }
  // Simple oscillator on the unit circle with a = 1: pure rotation
  {
    const ClassicalSystem so(Family::simple_oscillator, {1.0});
    const std::vector<double> v = classical_rhs(so, std::vector<double>{1.0, 0.0});
    CHECK(v[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(v[1] == doctest::Approx(-1.0));
  }
  // Lorenz fixed point at the physical origin
  {
    const ClassicalSystem lorenz(Family::lorenz, {10.0, 28.0, 8.0 / 3.0});
    const std::vector<double> v = classical_rhs(lorenz, std::vector<double>{0.0, 0.0, 0.0});
    CHECK(v[0] == doctest::Approx(0.0));
    CHECK(v[1] == doctest::Approx(0.0));
    CHECK(v[2] == doctest::Approx(0.0));
  }
  // Saddle-node rows from the catalog: a = 1 gives (0,-1) at (1,0) and
  // (1,-1) at (0,0)
  {
    const ClassicalSystem sn(Family::saddle_node, {1.0});
    const std::vector<double> a = classical_rhs(sn, std::vector<double>{1.0, 0.0});
    CHECK(a[0] == doctest::Approx(0.0));
    CHECK(a[1] == doctest::Approx(-1.0));
    const std::vector<double> b = classical_rhs(sn, std::vector<double>{0.0, 0.0});
    CHECK(b[0] == doctest::Approx(1.0));
    CHECK(b[1] == doctest::Approx(-1.0));
  }
}

TEST_CASE("simple oscillator has zero radial velocity on the unit circle") {
  const ClassicalSystem so(Family::simple_oscillator, {1.0});
  for (int i = 0; i < 64; ++i) {
    const double theta = 2.0 * M_PI * static_cast<double>(i) / 64.0;
    const std::vector<double> x{std::cos(theta), std::sin(theta)};
    const std::vector<double> v = classical_rhs(so, x);
    const double radial = v[0] * x[0] + v[1] * x[1];
    CHECK(std::abs(radial) < 1e-10);
  }
}

TEST_CASE("exact coefficients: van der pol and saddle-node") {
  const MonomialDictionary dict = build_dictionary(2, 3);
  {
    const auto m = exact_coefficients(ClassicalSystem(Family::van_der_pol, {1.0}), dict);
    REQUIRE(m.has_value());
    CHECK(m->at(dict.index_of({0, 1}), 0) == doctest::Approx(1.0));
    CHECK(m->at(dict.index_of({1, 0}), 1) == doctest::Approx(-1.0));
    CHECK(m->at(dict.index_of({0, 1}), 1) == doctest::Approx(1.0));
    CHECK(m->at(dict.index_of({2, 1}), 1) == doctest::Approx(-1.0));
    int nonzero = 0;
    for (double v : m->values)
      if (v != 0.0) ++nonzero;
    CHECK(nonzero == 4);
  }
  {
    const auto m = exact_coefficients(ClassicalSystem(Family::saddle_node, {0.5}), dict);
    REQUIRE(m.has_value());
    CHECK(m->at(dict.index_of({0, 0}), 0) == doctest::Approx(0.5));
    CHECK(m->at(dict.index_of({2, 0}), 0) == doctest::Approx(-1.0));
    CHECK(m->at(dict.index_of({0, 0}), 1) == doctest::Approx(-1.0));
  }
  CHECK_FALSE(exact_coefficients(ClassicalSystem(Family::simple_oscillator, {0.3}), dict).has_value());
}

TEST_CASE("exact coefficients reproduce classical fields on the lattice") {
  Rng rng(21);
  const Lattice l2(2, 17);
  const Lattice l3(3, 9);
  const MonomialDictionary d2 = build_dictionary(2, 3);
  const MonomialDictionary d3 = build_dictionary(3, 3);
  for (const auto& info : family_catalog()) {
    if (info.family == Family::simple_oscillator) continue;
    std::vector<double> params;
    for (int i = 0; i < info.arity; ++i) {
      const auto& r = info.param_ranges[static_cast<std::size_t>(i)];
      params.push_back(rng.uniform(r[0], r[1]));
    }
    const ClassicalSystem sys(info.family, params);
    const Lattice& lattice = info.q == 2 ? l2 : l3;
    const MonomialDictionary& dict = info.q == 2 ? d2 : d3;
    const VectorField direct = classical_field(sys, lattice);
    const auto coeffs = exact_coefficients(sys, dict);
    REQUIRE(coeffs.has_value());
    const VectorField via_poly = eval_on_lattice(PolynomialSystem(dict, *coeffs), lattice);
    for (std::size_t i = 0; i < direct.velocities.size(); ++i)
      CHECK(std::abs(direct.velocities[i] - via_poly.velocities[i]) < 1e-10);
  }
}

TEST_CASE("class labels follow the catalog thresholds") {
  CHECK(classical_label(ClassicalSystem(Family::saddle_node, {-0.5})) == 0);
  CHECK(classical_label(ClassicalSystem(Family::saddle_node, {0.5})) == 1);
  CHECK(classical_label(ClassicalSystem(Family::pitchfork, {-0.1})) == 2);
  CHECK(classical_label(ClassicalSystem(Family::pitchfork, {0.0})) == 3);
  CHECK(classical_label(ClassicalSystem(Family::lotka_volterra, {-1.0})) == 8);
  CHECK(classical_label(ClassicalSystem(Family::lotka_volterra, {1.0})) == 8);
  CHECK(classical_label(ClassicalSystem(Family::homoclinic, {-0.9})) == 9);
  CHECK(classical_label(ClassicalSystem(Family::homoclinic, {-0.8})) == 10);
  CHECK(classical_label(ClassicalSystem(Family::van_der_pol, {2.0})) == 11);
  CHECK(classical_label(ClassicalSystem(Family::selkov, {0.1, 0.5})) == 12);
  CHECK(classical_label(ClassicalSystem(Family::fitzhugh_nagumo, {0.2, 12.0, 0.65, 0.75})) == 14);
  CHECK(classical_label(ClassicalSystem(Family::fitzhugh_nagumo, {0.4, 12.0, 0.65, 0.75})) == 15);
  CHECK_THROWS_AS(classical_label(ClassicalSystem(Family::lorenz, {10.0, 28.0, 2.7})), config_error);
}

TEST_CASE("family parameter arity is enforced") {
  CHECK_THROWS_AS(ClassicalSystem(Family::fitzhugh_nagumo, {0.2}), dimension_error);
  CHECK_THROWS_AS(ClassicalSystem(Family::saddle_node, {0.2, 0.3}), dimension_error);
  CHECK(family_info(Family::fitzhugh_nagumo).arity == 4);
}

TEST_CASE("lorenz recentering maps the attractor box onto the unit cube") {
  const AffineFrame frame = recentering(Family::lorenz);
  CHECK(frame.center[2] == doctest::Approx(25.0));
  CHECK(frame.half[0] == doctest::Approx(20.0));
  CHECK(frame.half[1] == doctest::Approx(30.0));
  CHECK(frame.half[2] == doctest::Approx(25.0));

  // Hand-expanded recentered coefficients: du1 = a(1.5 u2 - u1).
  const MonomialDictionary d3 = build_dictionary(3, 3);
  const ClassicalSystem lorenz(Family::lorenz, {10.0, 28.0, 8.0 / 3.0});
  const auto m = exact_coefficients(lorenz, d3);
  REQUIRE(m.has_value());
  CHECK(m->at(d3.index_of({1, 0, 0}), 0) == doctest::Approx(-10.0));
  CHECK(m->at(d3.index_of({0, 1, 0}), 0) == doctest::Approx(15.0));
  CHECK(m->at(d3.index_of({1, 0, 0}), 1) == doctest::Approx(2.0 * (28.0 - 25.0) / 3.0));
  CHECK(m->at(d3.index_of({1, 0, 1}), 1) == doctest::Approx(-50.0 / 3.0));
  CHECK(m->at(d3.index_of({0, 1, 0}), 1) == doctest::Approx(-1.0));
  CHECK(m->at(d3.index_of({1, 1, 0}), 2) == doctest::Approx(24.0));
  CHECK(m->at(d3.index_of({0, 0, 0}), 2) == doctest::Approx(-8.0 / 3.0));
  CHECK(m->at(d3.index_of({0, 0, 1}), 2) == doctest::Approx(-8.0 / 3.0));
}

TEST_CASE("family support patterns are nonempty and distinct from generic draws") {
  const MonomialDictionary dict = build_dictionary(2, 3);
  const std::vector<bool> vdp = family_support(Family::van_der_pol, dict);
  int count = 0;
  for (bool b : vdp)
    if (b) ++count;
  CHECK(count == 4);  // x2 | x1, x2, x1^2 x2
  CHECK(family_support(Family::simple_oscillator, dict).empty());
}
