#include "phase2vec/systems.hpp"

#include <cmath>

#include "phase2vec/errors.hpp"

namespace p2v {

namespace {

std::array<std::array<double, 2>, 4> ranges1(double lo, double hi) {
  return {{{lo, hi}, {0, 0}, {0, 0}, {0, 0}}};
}

const std::vector<FamilyInfo> kCatalog = {
    {Family::saddle_node, "saddle-node", 2, 1, ranges1(-1, 1), true},
    {Family::pitchfork, "pitchfork", 2, 1, ranges1(-1, 1), true},
    {Family::transcritical, "transcritical", 2, 1, ranges1(-1, 1), true},
    {Family::simple_oscillator, "simple-oscillator", 2, 1, ranges1(-1, 1), true},
    {Family::lotka_volterra, "lotka-volterra", 2, 1, ranges1(-1, 1), true},
    {Family::homoclinic, "homoclinic", 2, 1, ranges1(-1.2, -0.7), true},
    {Family::van_der_pol, "van-der-pol", 2, 1, ranges1(0.1, 4.0), true},
    {Family::selkov, "selkov", 2, 2, {{{0.05, 0.15}, {0.2, 1.0}, {0, 0}, {0, 0}}}, true},
    {Family::fitzhugh_nagumo, "fitzhugh-nagumo", 2, 4,
     {{{0.1, 0.5}, {10.0, 15.0}, {0.6, 0.7}, {0.7, 0.8}}}, true},
    {Family::saddle_node_3d, "saddle-node-3d", 3, 1, ranges1(-1, 1), false},
    {Family::lorenz, "lorenz", 3, 3, {{{9.0, 11.0}, {14.0, 28.0}, {2.0, 4.0}, {0, 0}}}, false},
};

// Polynomial components in physical coordinates; empty for the simple
// oscillator (handled pointwise in polar form).
std::vector<Poly> physical_components(const ClassicalSystem& sys) {
  const auto& p = sys.params;
  const int q = sys.q();
  const Poly one = Poly::constant(q, 1.0);
  const Poly x1 = Poly::variable(q, 0);
  const Poly x2 = Poly::variable(q, 1);
  switch (sys.family) {
    case Family::saddle_node:
      return {one * p[0] - x1 * x1, one * -1.0};
    case Family::pitchfork:
      return {x1 * p[0] - x1 * x1 * x1, one * -1.0};
    case Family::transcritical:
      return {x1 * p[0] - x1 * x1, one * -1.0};
    case Family::lotka_volterra:
      return {x1 - x1 * x2, (x1 * x2 - x2) * p[0]};
    case Family::homoclinic:
      return {x2, x2 * p[0] + x1 - x1 * x1 + x1 * x2};
    case Family::van_der_pol:
      return {x2, (x2 - x1 * x1 * x2) * p[0] - x1};
    case Family::selkov:
      return {x1 + x2 * p[0] + x1 * x1 * x2, one * p[1] - x2 * p[0] - x1 * x1 * x2};
    case Family::fitzhugh_nagumo:
      return {x1 - x1 * x1 * x1 * (1.0 / 3.0) - x2 + one * p[0],
              (x1 + one * p[2] - x2 * p[3]) * (1.0 / p[1])};
    case Family::saddle_node_3d: {
      const Poly one3 = Poly::constant(3, 1.0);
      const Poly y1 = Poly::variable(3, 0);
      return {one3 * p[0] - y1 * y1, one3 * -1.0, one3 * -1.0};
    }
    case Family::lorenz: {
      const Poly y1 = Poly::variable(3, 0);
      const Poly y2 = Poly::variable(3, 1);
      const Poly y3 = Poly::variable(3, 2);
      return {(y2 - y1) * p[0], y1 * p[1] - y1 * y3 - y2, y1 * y2 - y3 * p[2]};
    }
    case Family::simple_oscillator:
      return {};
  }
  throw config_error("unknown family");
}

}  // namespace

const std::vector<FamilyInfo>& family_catalog() { return kCatalog; }

const FamilyInfo& family_info(Family f) {
  for (const auto& info : kCatalog)
    if (info.family == f) return info;
  throw config_error("unknown family");
}

Family family_from_name(const std::string& name) {
  for (const auto& info : kCatalog)
    if (name == info.name) return info.family;
  throw config_error("unknown system family: " + name);
}

ClassicalSystem::ClassicalSystem(Family f, std::vector<double> p) : family(f), params(std::move(p)) {
  const FamilyInfo& info = family_info(f);
  if (static_cast<int>(params.size()) != info.arity)
    throw dimension_error(std::string("family ") + info.name + " takes " +
                          std::to_string(info.arity) + " parameters, got " +
                          std::to_string(params.size()));
}

AffineFrame recentering(Family f) {
  AffineFrame frame;
  if (f == Family::lorenz) {
    frame.center = {0.0, 0.0, 25.0};
    frame.half = {20.0, 30.0, 25.0};
  }
  return frame;
}

Poly substitute_affine(const Poly& g, const AffineFrame& frame) {
  const int q = g.q();
  Poly out(q);
  for (const auto& [e, coeff] : g.terms()) {
    Poly term = Poly::constant(q, coeff);
    for (int j = 0; j < q; ++j) {
      const Poly axis = Poly::constant(q, frame.center[static_cast<std::size_t>(j)]) +
                        Poly::variable(q, j) * frame.half[static_cast<std::size_t>(j)];
      for (int rep = 0; rep < e[static_cast<std::size_t>(j)]; ++rep) term = term * axis;
    }
    out += term;
  }
  return out;
}

std::vector<double> classical_rhs(const ClassicalSystem& sys, std::span<const double> x) {
  if (static_cast<int>(x.size()) != sys.q()) throw dimension_error("classical_rhs: point dimension");
  if (sys.family == Family::simple_oscillator) {
    const double a = sys.params[0];
    const double r = std::hypot(x[0], x[1]);
    const double theta = std::atan2(x[1], x[0]);
    const double rdot = r * (a - r * r);
    const double thetadot = -1.0;
    return {rdot * std::cos(theta) - r * thetadot * std::sin(theta),
            rdot * std::sin(theta) + r * thetadot * std::cos(theta)};
  }
  const std::vector<Poly> comps = physical_components(sys);
  std::vector<double> v(comps.size());
  for (std::size_t j = 0; j < comps.size(); ++j) v[j] = comps[j].eval(x);
  return v;
}

VectorField classical_field(const ClassicalSystem& sys, const Lattice& lattice) {
  if (sys.q() != lattice.q) throw dimension_error("classical_field: family/lattice dimension");
  const AffineFrame frame = recentering(sys.family);
  VectorField f(lattice);
  std::vector<double> u(static_cast<std::size_t>(lattice.q));
  std::vector<double> x(static_cast<std::size_t>(lattice.q));
  const std::int64_t N = lattice.points();
  for (std::int64_t i = 0; i < N; ++i) {
    lattice.point_at(i, u);
    for (int a = 0; a < lattice.q; ++a)
      x[static_cast<std::size_t>(a)] =
          frame.center[static_cast<std::size_t>(a)] + frame.half[static_cast<std::size_t>(a)] * u[static_cast<std::size_t>(a)];
    const std::vector<double> v = classical_rhs(sys, x);
    for (int a = 0; a < lattice.q; ++a)
      f.at(i, a) = v[static_cast<std::size_t>(a)] / frame.half[static_cast<std::size_t>(a)];
  }
  return f;
}

std::optional<CoefficientMatrix> exact_coefficients(const ClassicalSystem& sys,
                                                    const MonomialDictionary& dict) {
  if (sys.family == Family::simple_oscillator) return std::nullopt;
  if (dict.q != sys.q()) throw dimension_error("exact_coefficients: dictionary dimension");
  const AffineFrame frame = recentering(sys.family);
  std::vector<Poly> comps = physical_components(sys);
  for (int j = 0; j < sys.q(); ++j) {
    Poly recentered = substitute_affine(comps[static_cast<std::size_t>(j)], frame);
    comps[static_cast<std::size_t>(j)] = recentered * (1.0 / frame.half[static_cast<std::size_t>(j)]);
  }
  return PolynomialSystem::from_components(dict, comps).coefficients;
}

int classical_label(const ClassicalSystem& sys) {
  const double a = sys.params.empty() ? 0.0 : sys.params[0];
  switch (sys.family) {
    case Family::saddle_node:
      return a < 0.0 ? 0 : 1;
    case Family::pitchfork:
      return a < 0.0 ? 2 : 3;
    case Family::transcritical:
      return a < 0.0 ? 4 : 5;
    case Family::simple_oscillator:
      return a < 0.0 ? 6 : 7;
    case Family::lotka_volterra:
      return 8;
    case Family::homoclinic:
      return a < -0.8645 ? 9 : 10;
    case Family::van_der_pol:
      return 11;
    case Family::selkov:
      return a < 0.3 ? 12 : 13;
    case Family::fitzhugh_nagumo:
      return a < 0.35 ? 14 : 15;
    default:
      throw config_error("family has no class labels");
  }
}

std::vector<bool> family_support(Family f, const MonomialDictionary& dict) {
  if (f == Family::simple_oscillator) return {};
  const FamilyInfo& info = family_info(f);
  if (info.q != dict.q) throw dimension_error("family_support: dictionary dimension");
  std::vector<bool> support(static_cast<std::size_t>(dict.size()) * dict.q, false);
  // Union over two generic parameter draws so boundary values (e.g. a = 0)
  // cannot hide a coefficient.
  for (double frac : {0.3, 0.7}) {
    std::vector<double> params;
    for (int i = 0; i < info.arity; ++i) {
      const auto& r = info.param_ranges[static_cast<std::size_t>(i)];
      params.push_back(r[0] + frac * (r[1] - r[0]));
    }
    const auto coeffs = exact_coefficients(ClassicalSystem(f, params), dict);
    for (std::size_t i = 0; i < coeffs->values.size(); ++i)
      if (coeffs->values[i] != 0.0) support[i] = true;
  }
  return support;
}

}  // namespace p2v
