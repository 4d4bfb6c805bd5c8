#pragma once

#include <complex>
#include <string>
#include <utility>
#include <vector>

#include <gmpxx.h>

#include "aps/util.hpp"

namespace aps::algebraic {

// ---------------------------------------------------------------------------
// Exact integer polynomials, coefficients lowest degree first.
// ---------------------------------------------------------------------------

class IntPolynomial {
 public:
  IntPolynomial() = default;
  explicit IntPolynomial(std::vector<mpz_class> coeffs) : c_(std::move(coeffs)) { trim(); }
  static IntPolynomial from_ints(std::initializer_list<long> coeffs);
  static IntPolynomial monomial(int degree, const mpz_class& coeff = 1);

  bool is_zero() const { return c_.empty(); }
  int degree() const { return is_zero() ? -1 : static_cast<int>(c_.size()) - 1; }
  bool is_monic() const { return !is_zero() && c_.back() == 1; }
  const mpz_class& coeff(int k) const;
  const std::vector<mpz_class>& coeffs() const { return c_; }
  const mpz_class& leading() const;

  IntPolynomial operator+(const IntPolynomial& o) const;
  IntPolynomial operator-(const IntPolynomial& o) const;
  IntPolynomial operator*(const IntPolynomial& o) const;
  bool operator==(const IntPolynomial& o) const { return c_ == o.c_; }

  IntPolynomial derivative() const;
  // Exact division; returns false when the remainder is nonzero.
  bool divide_exact(const IntPolynomial& divisor, IntPolynomial& quotient) const;
  mpz_class content() const;
  IntPolynomial primitive_part() const;
  IntPolynomial negate_variable() const;  // p(-x)

  std::complex<double> eval(std::complex<double> z) const;
  std::string to_string() const;  // e.g. "x^2 - x - 3"

 private:
  void trim();
  std::vector<mpz_class> c_;
};

// Primitive gcd of integer polynomials (subresultant-free Euclid over Q with
// content bookkeeping; inputs are desk-scale).
IntPolynomial poly_gcd(IntPolynomial a, IntPolynomial b);

// ---------------------------------------------------------------------------
// Exact integer matrices (dense, arbitrary size).
// ---------------------------------------------------------------------------

class IntMatrix {
 public:
  IntMatrix() = default;
  IntMatrix(int rows, int cols) : rows_(rows), cols_(cols), a_(static_cast<std::size_t>(rows) * cols, 0) {}
  static IntMatrix identity(int n);
  static IntMatrix from_ints(int rows, int cols, std::initializer_list<long> entries);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  const mpz_class& at(int i, int j) const { return a_[static_cast<std::size_t>(i) * cols_ + j]; }
  mpz_class& at(int i, int j) { return a_[static_cast<std::size_t>(i) * cols_ + j]; }

  IntMatrix mul(const IntMatrix& o) const;
  IntMatrix add(const IntMatrix& o) const;
  IntMatrix scale(const mpz_class& c) const;
  IntMatrix transpose() const;
  mpz_class trace() const;
  bool is_zero() const;
  bool operator==(const IntMatrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_ && a_ == o.a_; }

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<mpz_class> a_;
};

// p(M), evaluated by Horner with exact arithmetic.
IntMatrix eval_poly_at_matrix(const IntPolynomial& p, const IntMatrix& m);

// ---------------------------------------------------------------------------
// Root clusters with certified inclusion radii.
// ---------------------------------------------------------------------------

struct RootCluster {
  std::complex<double> center;
  double radius = 0.0;
  int multiplicity = 1;
};

// ---------------------------------------------------------------------------
// Spectrum classification
// ---------------------------------------------------------------------------

enum class FamilyVerdict {
  PISOT_FAMILY,
  NON_PISOT,
  TOTALLY_NON_PISOT,
  STRONGLY_TOTALLY_NON_PISOT,
  MIXED,
};

std::string verdict_name(FamilyVerdict v);

// One group of spectrum elements sharing a minimal polynomial.
struct SpectrumGroup {
  IntPolynomial min_poly;
  std::vector<RootCluster> elements;   // with certified radii
  std::vector<int> multiplicities;     // as eigenvalues, parallel to elements
};

struct AlgebraicSpectrumReport {
  std::vector<std::pair<IntPolynomial, int>> factors;  // factorization backing the groups
  std::vector<SpectrumGroup> groups;
  std::vector<FamilyVerdict> group_verdicts;  // PISOT_FAMILY or NON_PISOT per group
  std::vector<bool> group_strong;             // strong non-Pisot condition per group
  FamilyVerdict verdict = FamilyVerdict::MIXED;
  bool perron_ok = false;
};

struct CompanionData {
  IntMatrix matrix;       // subdiagonal-identity layout, last row c_0..c_{t-1}
  mpq_class delta0;       // 1/(1 + sum |c_i|)
  std::vector<mpz_class> c;  // p(X) = X^t - c_{t-1} X^{t-1} - ... - c_0
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

// det(xI - M) by the fraction-free Faddeev-LeVerrier recurrence.
IntPolynomial char_poly(const IntMatrix& m);

// Lowest-degree monic integer annihilator of M; divides char_poly(M) exactly.
IntPolynomial min_poly(const IntMatrix& m);

// All complex roots with certified radii <= tol, ordered by (real, imag).
std::vector<RootCluster> complex_roots(const IntPolynomial& p, double tol);

// Factorization into irreducible monic integer polynomials (content split off;
// a non-unit content or a non-monic sign is returned via `unit`).
struct Factorization {
  mpz_class unit = 1;  // content * leading sign
  std::vector<std::pair<IntPolynomial, int>> factors;
};
Factorization irreducible_factors(const IntPolynomial& p);

// Spectrum classification per group of conjugate algebraic integers.
AlgebraicSpectrumReport classify_family(const std::vector<SpectrumGroup>& spectrum);

struct PerronCheck {
  bool ok = true;
  std::string witness;  // violating pair when !ok
};
PerronCheck perron_check(const std::vector<SpectrumGroup>& spectrum);

CompanionData companion(const IntPolynomial& p);

mpz_class height(const IntPolynomial& p);

}  // namespace aps::algebraic
