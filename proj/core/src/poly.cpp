#include "phase2vec/poly.hpp"

#include <cmath>
#include <cstdint>

#include "phase2vec/errors.hpp"

namespace p2v {

std::int64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::int64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

namespace {

// Appends all tuples with the given total degree in descending lex order
// (a1 most significant).
void emit_degree(int q, int degree, Exponents& prefix, std::vector<Exponents>& out) {
  const int axis = static_cast<int>(prefix.size());
  if (axis == q - 1) {
    prefix.push_back(degree);
    out.push_back(prefix);
    prefix.pop_back();
    return;
  }
  for (int a = degree; a >= 0; --a) {
    prefix.push_back(a);
    emit_degree(q, degree - a, prefix, out);
    prefix.pop_back();
  }
}

}  // namespace

MonomialDictionary build_dictionary(int q, int c) {
  if (q != 2 && q != 3) throw config_error("dictionary: q must be 2 or 3, got " + std::to_string(q));
  if (c < 1) throw config_error("dictionary: degree must be >= 1");
  MonomialDictionary d;
  d.q = q;
  d.c = c;
  Exponents prefix;
  for (int t = 0; t <= c; ++t) emit_degree(q, t, prefix, d.exponents);
  return d;
}

int MonomialDictionary::index_of(const Exponents& e) const {
  for (std::size_t i = 0; i < exponents.size(); ++i)
    if (exponents[i] == e) return static_cast<int>(i);
  return -1;
}

std::vector<double> eval_dictionary(const MonomialDictionary& dict, std::span<const double> point) {
  if (static_cast<int>(point.size()) != dict.q)
    throw dimension_error("eval_dictionary: point dimension != q");
  std::vector<double> out(dict.exponents.size());
  for (std::size_t i = 0; i < dict.exponents.size(); ++i) {
    double v = 1.0;
    for (int j = 0; j < dict.q; ++j) {
      const int a = dict.exponents[i][static_cast<std::size_t>(j)];
      for (int rep = 0; rep < a; ++rep) v *= point[static_cast<std::size_t>(j)];
    }
    out[i] = v;  // 0^0 contributes the factor 1 by construction
  }
  return out;
}

double CoefficientMatrix::l1_norm() const {
  double s = 0.0;
  for (double v : values) s += std::abs(v);
  return s;
}

double CoefficientMatrix::frobenius_norm() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s);
}

bool CoefficientMatrix::all_finite() const {
  for (double v : values)
    if (!std::isfinite(v)) return false;
  return true;
}

Poly Poly::constant(int q, double v) {
  Poly p(q);
  if (v != 0.0) p.terms_[Exponents(static_cast<std::size_t>(q), 0)] = v;
  return p;
}

Poly Poly::variable(int q, int j) {
  Poly p(q);
  Exponents e(static_cast<std::size_t>(q), 0);
  e[static_cast<std::size_t>(j)] = 1;
  p.terms_[e] = 1.0;
  return p;
}

bool Poly::is_zero(double tol) const {
  for (const auto& [e, v] : terms_)
    if (std::abs(v) > tol) return false;
  return true;
}

int Poly::total_degree() const {
  int d = 0;
  for (const auto& [e, v] : terms_) {
    if (v == 0.0) continue;
    int t = 0;
    for (int a : e) t += a;
    if (t > d) d = t;
  }
  return d;
}

void Poly::add_term(const Exponents& e, double coeff) {
  if (static_cast<int>(e.size()) != q_) throw dimension_error("poly term arity mismatch");
  auto it = terms_.find(e);
  if (it == terms_.end()) {
    if (coeff != 0.0) terms_[e] = coeff;
  } else {
    it->second += coeff;
    if (it->second == 0.0) terms_.erase(it);
  }
}

Poly Poly::operator+(const Poly& o) const {
  Poly r = *this;
  r += o;
  return r;
}

Poly& Poly::operator+=(const Poly& o) {
  if (o.q_ != q_) throw dimension_error("poly arity mismatch");
  for (const auto& [e, v] : o.terms_) add_term(e, v);
  return *this;
}

Poly Poly::operator-(const Poly& o) const { return *this + o * -1.0; }

Poly Poly::operator*(const Poly& o) const {
  if (o.q_ != q_) throw dimension_error("poly arity mismatch");
  Poly r(q_);
  for (const auto& [ea, va] : terms_)
    for (const auto& [eb, vb] : o.terms_) {
      Exponents e(ea);
      for (std::size_t i = 0; i < e.size(); ++i) e[i] += eb[i];
      r.add_term(e, va * vb);
    }
  return r;
}

Poly Poly::operator*(double s) const {
  Poly r(q_);
  if (s == 0.0) return r;
  for (const auto& [e, v] : terms_) r.terms_[e] = v * s;
  return r;
}

Poly Poly::derivative(int j) const {
  Poly r(q_);
  for (const auto& [e, v] : terms_) {
    const int a = e[static_cast<std::size_t>(j)];
    if (a == 0) continue;
    Exponents shifted(e);
    shifted[static_cast<std::size_t>(j)] = a - 1;
    r.add_term(shifted, v * a);
  }
  return r;
}

double Poly::eval(std::span<const double> point) const {
  double acc = 0.0;
  for (const auto& [e, v] : terms_) {
    double m = v;
    for (std::size_t j = 0; j < e.size(); ++j)
      for (int rep = 0; rep < e[j]; ++rep) m *= point[j];
    acc += m;
  }
  return acc;
}

double Poly::max_abs_coeff() const {
  double m = 0.0;
  for (const auto& [e, v] : terms_) m = std::max(m, std::abs(v));
  return m;
}

std::vector<double> Poly::dict_coeffs(const MonomialDictionary& dict) const {
  if (dict.q != q_) throw dimension_error("poly/dictionary arity mismatch");
  std::vector<double> out(dict.exponents.size(), 0.0);
  for (const auto& [e, v] : terms_) {
    const int idx = dict.index_of(e);
    if (idx < 0) throw config_error("polynomial term falls outside the dictionary degree bound");
    out[static_cast<std::size_t>(idx)] = v;
  }
  return out;
}

Poly Poly::from_dict_coeffs(const MonomialDictionary& dict, std::span<const double> coeffs) {
  if (coeffs.size() != dict.exponents.size())
    throw dimension_error("coefficient count does not match dictionary");
  Poly p(dict.q);
  for (std::size_t i = 0; i < coeffs.size(); ++i)
    if (coeffs[i] != 0.0) p.add_term(dict.exponents[i], coeffs[i]);
  return p;
}

PolynomialSystem::PolynomialSystem(MonomialDictionary d, CoefficientMatrix c)
    : dict(std::move(d)), coefficients(std::move(c)) {
  if (coefficients.p != dict.size() || coefficients.q != dict.q)
    throw dimension_error("coefficient matrix shape does not match dictionary");
}

std::vector<double> PolynomialSystem::velocity(std::span<const double> point) const {
  const std::vector<double> phi = eval_dictionary(dict, point);
  std::vector<double> v(static_cast<std::size_t>(dict.q), 0.0);
  for (int i = 0; i < coefficients.p; ++i)
    for (int j = 0; j < coefficients.q; ++j)
      v[static_cast<std::size_t>(j)] += phi[static_cast<std::size_t>(i)] * coefficients.at(i, j);
  return v;
}

Poly PolynomialSystem::component(int j) const {
  Poly p(dict.q);
  for (int i = 0; i < coefficients.p; ++i) {
    const double v = coefficients.at(i, j);
    if (v != 0.0) p.add_term(dict.exponents[static_cast<std::size_t>(i)], v);
  }
  return p;
}

PolynomialSystem PolynomialSystem::from_components(const MonomialDictionary& dict,
                                                   const std::vector<Poly>& comps) {
  if (static_cast<int>(comps.size()) != dict.q)
    throw dimension_error("component count must equal q");
  CoefficientMatrix m(dict.size(), dict.q);
  for (int j = 0; j < dict.q; ++j) {
    const std::vector<double> col = comps[static_cast<std::size_t>(j)].dict_coeffs(dict);
    for (int i = 0; i < dict.size(); ++i) m.at(i, j) = col[static_cast<std::size_t>(i)];
  }
  return PolynomialSystem(dict, std::move(m));
}

Poly analytic_divergence(const PolynomialSystem& system) {
  Poly d(system.dict.q);
  for (int j = 0; j < system.dict.q; ++j) d += system.component(j).derivative(j);
  return d;
}

Poly analytic_curl_2d(const PolynomialSystem& system) {
  if (system.dict.q != 2) throw config_error("curl is defined here only for q = 2");
  return system.component(1).derivative(0) - system.component(0).derivative(1);
}

std::vector<Poly> gradient(const Poly& g) {
  std::vector<Poly> out;
  out.reserve(static_cast<std::size_t>(g.q()));
  for (int j = 0; j < g.q(); ++j) out.push_back(g.derivative(j));
  return out;
}

}  // namespace p2v
