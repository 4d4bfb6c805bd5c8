#pragma once

#include <complex>
#include <vector>

#include "aps/tiling.hpp"

namespace aps::cocycle {

// Small dense complex matrix (m <= a handful of prototile types).
struct CMat {
  int n = 0;
  std::vector<std::complex<double>> a;

  CMat() = default;
  explicit CMat(int n) : n(n), a(static_cast<std::size_t>(n) * n) {}
  static CMat identity(int n) {
    CMat m(n);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
  }
  std::complex<double>& at(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
  const std::complex<double>& at(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }
  CMat mul(const CMat& o) const {
    CMat r(n);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) {
        const std::complex<double> v = at(i, k);
        for (int j = 0; j < n; ++j) r.at(i, j) += v * o.at(k, j);
      }
    return r;
  }
  double max_abs() const {
    double best = 0.0;
    for (const auto& z : a) best = std::max(best, std::abs(z));
    return best;
  }
};

struct CocycleStep {
  Vec omega;
  int level = 0;  // q
  CMat matrix;    // entry (j,k) = sum_l e[omega . L^q s^k_l(j)]
};

struct CocycleProduct {
  Vec omega;
  int n = 0;
  CMat matrix;  // M_{n-1} ... M_0
};

struct RieszBound {
  double mass = 0.0;                // the substitution constant in (0,1)
  std::vector<double> factors;     // per level l = 0..n-1
  double product = 1.0;
};

struct StepInequalityResult {
  bool ok = false;
  double slack = 0.0;  // min over coordinates of rhs - lhs
};

// Distance from t to the nearest integer, in [0, 1/2].
double torus_norm(double t);

// Exponential sum over the punctures of type-i tiles of the patch.
std::complex<double> structure_factor(const tiling::SubstitutionRule& rule,
                                      const tiling::Patch& patch, int type, const Vec& omega);

// Exponential sum over tile translations (punctures at the type reference
// point); equals structure_factor when the prototile punctures sit at the
// origin, as the embedded fixtures do.
std::complex<double> translation_sum(const tiling::Patch& patch, int type, const Vec& omega);

CocycleStep step_matrix(const tiling::SubstitutionRule& rule, int q, const Vec& omega);

CocycleProduct cocycle_product(const tiling::SubstitutionRule& rule, int n, const Vec& omega);

// Ratio functional behind the mass constant: min over realizable coordinates
// of x(k) / (2 m max S^T max x).
double xi_ratio(const algebraic::IntMatrix& subst, const std::vector<double>& x,
                const std::vector<int>& realizable_types);

double mass_constant(const tiling::SubstitutionRule& rule);

RieszBound riesz_bound(const tiling::SubstitutionRule& rule, int n, const Vec& omega,
                       const std::vector<tiling::GoodReturnVector>& good, double mass);
RieszBound riesz_bound(const tiling::SubstitutionRule& rule, int n, const Vec& omega);

StepInequalityResult step_inequality_check(const tiling::SubstitutionRule& rule, int q,
                                           const Vec& omega, const std::vector<double>& x);

// Growth bound for |S^f_R| assembled from the tower structure: needs the
// bound sequence F with F(n)/xi <= F(n+1) <= F(n), xi = (||L|| + 1)/2.
double factor_growth_bound(const tiling::SubstitutionRule& rule, double R, const Vec& omega,
                           const std::vector<double>& f_sequence);

}  // namespace aps::cocycle
