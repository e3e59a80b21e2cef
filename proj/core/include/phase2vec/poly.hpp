#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace p2v {

/// Exponent tuple (a1,...,aq) of one monomial.
using Exponents = std::vector<int>;

/// The ordered monomial basis of all exponent tuples with total degree <= c.
/// Order is graded-lexicographic: total degree ascending, and within a degree
/// lexicographic on (a1,...,aq) with a1 most significant, descending. For
/// q=2, c=3 this reads 1, x1, x2, x1^2, x1*x2, x2^2, x1^3, x1^2*x2, x1*x2^2, x2^3.
struct MonomialDictionary {
  int q = 0;
  int c = 0;
  std::vector<Exponents> exponents;

  int size() const { return static_cast<int>(exponents.size()); }
  /// Index of an exponent tuple, -1 if absent.
  int index_of(const Exponents& e) const;
};

/// q in {2,3}, c >= 1. Size is binomial(q+c, c).
MonomialDictionary build_dictionary(int q, int c);

/// Entry i = prod_j point[j]^{a_ij}, with 0^0 = 1.
std::vector<double> eval_dictionary(const MonomialDictionary& dict, std::span<const double> point);

/// p x q coefficients: entry (i,j) weights monomial i in field component j.
struct CoefficientMatrix {
  int p = 0;
  int q = 0;
  std::vector<double> values;  // row-major, monomial index major

  CoefficientMatrix() = default;
  CoefficientMatrix(int p_, int q_) : p(p_), q(q_), values(static_cast<std::size_t>(p_) * q_, 0.0) {}

  double& at(int i, int j) { return values[static_cast<std::size_t>(i) * q + j]; }
  double at(int i, int j) const { return values[static_cast<std::size_t>(i) * q + j]; }
  double l1_norm() const;
  double frobenius_norm() const;
  bool all_finite() const;
};

/// Sparse polynomial in q variables with real coefficients.
class Poly {
 public:
  explicit Poly(int q) : q_(q) {}
  static Poly constant(int q, double v);
  static Poly variable(int q, int j);

  int q() const { return q_; }
  const std::map<Exponents, double>& terms() const { return terms_; }
  bool is_zero(double tol = 0.0) const;
  int total_degree() const;

  Poly operator+(const Poly& o) const;
  Poly operator-(const Poly& o) const;
  Poly operator*(const Poly& o) const;
  Poly operator*(double s) const;
  Poly& operator+=(const Poly& o);

  /// Partial derivative with respect to variable j (exponent shift).
  Poly derivative(int j) const;
  double eval(std::span<const double> point) const;
  /// Largest absolute coefficient, 0 for the zero polynomial.
  double max_abs_coeff() const;

  /// Coefficients over an explicit dictionary; throws if a term falls outside.
  std::vector<double> dict_coeffs(const MonomialDictionary& dict) const;
  static Poly from_dict_coeffs(const MonomialDictionary& dict, std::span<const double> coeffs);

  void add_term(const Exponents& e, double coeff);

 private:
  int q_;
  std::map<Exponents, double> terms_;
};

/// A polynomial dynamical system: dX = Phi(X) * Xi.
struct PolynomialSystem {
  MonomialDictionary dict;
  CoefficientMatrix coefficients;

  PolynomialSystem() = default;
  PolynomialSystem(MonomialDictionary d, CoefficientMatrix c);

  /// Velocity at one phase-space point.
  std::vector<double> velocity(std::span<const double> point) const;
  /// Component j as a Poly.
  Poly component(int j) const;
  static PolynomialSystem from_components(const MonomialDictionary& dict,
                                          const std::vector<Poly>& comps);
};

/// Symbolic divergence sum_j dF_j/dx_j.
Poly analytic_divergence(const PolynomialSystem& system);

/// Symbolic planar curl dF_2/dx1 - dF_1/dx2; requires q = 2.
Poly analytic_curl_2d(const PolynomialSystem& system);

/// Gradient components of a scalar polynomial.
std::vector<Poly> gradient(const Poly& g);

std::int64_t binomial(int n, int k);

}  // namespace p2v
