#include "aps/algebraic.hpp"

#include <algorithm>
#include <cassert>
#include <sstream>

namespace aps::algebraic {

// ---------------------------------------------------------------------------
// IntPolynomial
// ---------------------------------------------------------------------------

void IntPolynomial::trim() {
  while (!c_.empty() && c_.back() == 0) c_.pop_back();
}

IntPolynomial IntPolynomial::from_ints(std::initializer_list<long> coeffs) {
  std::vector<mpz_class> v;
  v.reserve(coeffs.size());
  for (long x : coeffs) v.emplace_back(x);
  return IntPolynomial(std::move(v));
}

IntPolynomial IntPolynomial::monomial(int degree, const mpz_class& coeff) {
  std::vector<mpz_class> v(static_cast<std::size_t>(degree) + 1, 0);
  v.back() = coeff;
  return IntPolynomial(std::move(v));
}

const mpz_class& IntPolynomial::coeff(int k) const {
  static const mpz_class zero = 0;
  if (k < 0 || k >= static_cast<int>(c_.size())) return zero;
  return c_[k];
}

const mpz_class& IntPolynomial::leading() const {
  if (is_zero()) throw DimensionError("leading coefficient of zero polynomial");
  return c_.back();
}

IntPolynomial IntPolynomial::operator+(const IntPolynomial& o) const {
  std::vector<mpz_class> v(std::max(c_.size(), o.c_.size()), 0);
  for (std::size_t i = 0; i < c_.size(); ++i) v[i] += c_[i];
  for (std::size_t i = 0; i < o.c_.size(); ++i) v[i] += o.c_[i];
  return IntPolynomial(std::move(v));
}

IntPolynomial IntPolynomial::operator-(const IntPolynomial& o) const {
  std::vector<mpz_class> v(std::max(c_.size(), o.c_.size()), 0);
  for (std::size_t i = 0; i < c_.size(); ++i) v[i] += c_[i];
  for (std::size_t i = 0; i < o.c_.size(); ++i) v[i] -= o.c_[i];
  return IntPolynomial(std::move(v));
}

IntPolynomial IntPolynomial::operator*(const IntPolynomial& o) const {
  if (is_zero() || o.is_zero()) return {};
  std::vector<mpz_class> v(c_.size() + o.c_.size() - 1, 0);
  for (std::size_t i = 0; i < c_.size(); ++i)
    for (std::size_t j = 0; j < o.c_.size(); ++j) v[i + j] += c_[i] * o.c_[j];
  return IntPolynomial(std::move(v));
}

IntPolynomial IntPolynomial::derivative() const {
  if (degree() < 1) return {};
  std::vector<mpz_class> v(c_.size() - 1);
  for (std::size_t i = 1; i < c_.size(); ++i) v[i - 1] = c_[i] * static_cast<long>(i);
  return IntPolynomial(std::move(v));
}

bool IntPolynomial::divide_exact(const IntPolynomial& divisor, IntPolynomial& quotient) const {
  if (divisor.is_zero()) throw DimensionError("division by zero polynomial");
  if (is_zero()) {
    quotient = {};
    return true;
  }
  if (degree() < divisor.degree()) return false;
  std::vector<mpz_class> rem = c_;
  std::vector<mpz_class> q(static_cast<std::size_t>(degree() - divisor.degree()) + 1, 0);
  const mpz_class& lead = divisor.leading();
  for (int k = degree() - divisor.degree(); k >= 0; --k) {
    mpz_class& top = rem[static_cast<std::size_t>(k) + divisor.degree()];
    if (top == 0) continue;
    if (!mpz_divisible_p(top.get_mpz_t(), lead.get_mpz_t())) return false;
    mpz_class f = top / lead;
    q[k] = f;
    for (int j = 0; j <= divisor.degree(); ++j)
      rem[static_cast<std::size_t>(k) + j] -= f * divisor.coeff(j);
  }
  for (const auto& r : rem)
    if (r != 0) return false;
  quotient = IntPolynomial(std::move(q));
  return true;
}

mpz_class IntPolynomial::content() const {
  mpz_class g = 0;
  for (const auto& x : c_) {
    mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), x.get_mpz_t());
  }
  return g;
}

IntPolynomial IntPolynomial::primitive_part() const {
  if (is_zero()) return {};
  mpz_class g = content();
  if (leading() < 0) g = -g;
  std::vector<mpz_class> v(c_.size());
  for (std::size_t i = 0; i < c_.size(); ++i) v[i] = c_[i] / g;
  return IntPolynomial(std::move(v));
}

IntPolynomial IntPolynomial::negate_variable() const {
  std::vector<mpz_class> v = c_;
  for (std::size_t i = 1; i < v.size(); i += 2) v[i] = -v[i];
  return IntPolynomial(std::move(v));
}

std::complex<double> IntPolynomial::eval(std::complex<double> z) const {
  std::complex<double> acc = 0.0;
  for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * z + it->get_d();
  return acc;
}

std::string IntPolynomial::to_string() const {
  if (is_zero()) return "0";
  std::ostringstream out;
  bool first = true;
  for (int k = degree(); k >= 0; --k) {
    const mpz_class& a = coeff(k);
    if (a == 0) continue;
    mpz_class mag = abs(a);
    if (first) {
      if (a < 0) out << "-";
      first = false;
    } else {
      out << (a < 0 ? " - " : " + ");
    }
    if (k == 0 || mag != 1) out << mag.get_str();
    if (k >= 1) out << "x";
    if (k >= 2) out << "^" << k;
  }
  return out.str();
}

IntPolynomial poly_gcd(IntPolynomial a, IntPolynomial b) {
  if (a.is_zero()) return b.is_zero() ? IntPolynomial{} : b.primitive_part();
  if (b.is_zero()) return a.primitive_part();
  a = a.primitive_part();
  b = b.primitive_part();
  while (!b.is_zero()) {
    // Pseudo-remainder: lead(b)^(da-db+1) * a mod b.
    int da = a.degree(), db = b.degree();
    if (da < db) {
      std::swap(a, b);
      continue;
    }
    mpz_class lb = b.leading();
    mpz_class scale;
    mpz_pow_ui(scale.get_mpz_t(), lb.get_mpz_t(), static_cast<unsigned long>(da - db + 1));
    std::vector<mpz_class> rem(a.coeffs());
    for (auto& x : rem) x *= scale;
    for (int k = da - db; k >= 0; --k) {
      mpz_class top = rem[static_cast<std::size_t>(k) + db];
      if (top == 0) continue;
      mpz_class f = top / lb;
      assert(top % lb == 0);
      for (int j = 0; j <= db; ++j) rem[static_cast<std::size_t>(k) + j] -= f * b.coeff(j);
    }
    rem.resize(db);
    IntPolynomial r{std::move(rem)};
    a = b;
    b = r.is_zero() ? IntPolynomial{} : r.primitive_part();
  }
  return a.primitive_part();
}

// ---------------------------------------------------------------------------
// IntMatrix
// ---------------------------------------------------------------------------

IntMatrix IntMatrix::identity(int n) {
  IntMatrix m(n, n);
  for (int i = 0; i < n; ++i) m.at(i, i) = 1;
  return m;
}

IntMatrix IntMatrix::from_ints(int rows, int cols, std::initializer_list<long> entries) {
  if (static_cast<int>(entries.size()) != rows * cols)
    throw DimensionError("from_ints: entry count mismatch");
  IntMatrix m(rows, cols);
  int k = 0;
  for (long v : entries) {
    m.at(k / cols, k % cols) = v;
    ++k;
  }
  return m;
}

IntMatrix IntMatrix::mul(const IntMatrix& o) const {
  if (cols_ != o.rows_) throw DimensionError("matrix product shape mismatch");
  IntMatrix r(rows_, o.cols_);
  for (int i = 0; i < rows_; ++i)
    for (int k = 0; k < cols_; ++k) {
      const mpz_class& aik = at(i, k);
      if (aik == 0) continue;
      for (int j = 0; j < o.cols_; ++j) r.at(i, j) += aik * o.at(k, j);
    }
  return r;
}

IntMatrix IntMatrix::add(const IntMatrix& o) const {
  if (rows_ != o.rows_ || cols_ != o.cols_) throw DimensionError("matrix sum shape mismatch");
  IntMatrix r(rows_, cols_);
  for (std::size_t i = 0; i < a_.size(); ++i) r.a_[i] = a_[i] + o.a_[i];
  return r;
}

IntMatrix IntMatrix::scale(const mpz_class& c) const {
  IntMatrix r(rows_, cols_);
  for (std::size_t i = 0; i < a_.size(); ++i) r.a_[i] = a_[i] * c;
  return r;
}

IntMatrix IntMatrix::transpose() const {
  IntMatrix r(cols_, rows_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) r.at(j, i) = at(i, j);
  return r;
}

mpz_class IntMatrix::trace() const {
  if (rows_ != cols_) throw DimensionError("trace of non-square matrix");
  mpz_class t = 0;
  for (int i = 0; i < rows_; ++i) t += at(i, i);
  return t;
}

bool IntMatrix::is_zero() const {
  for (const auto& x : a_)
    if (x != 0) return false;
  return true;
}

IntMatrix eval_poly_at_matrix(const IntPolynomial& p, const IntMatrix& m) {
  if (m.rows() != m.cols()) throw DimensionError("polynomial of non-square matrix");
  const int n = m.rows();
  IntMatrix acc(n, n);
  for (int k = p.degree(); k >= 0; --k) {
    acc = acc.mul(m);
    acc = acc.add(IntMatrix::identity(n).scale(p.coeff(k)));
  }
  return acc;
}

// ---------------------------------------------------------------------------
// char_poly / min_poly
// ---------------------------------------------------------------------------

IntPolynomial char_poly(const IntMatrix& m) {
  if (m.rows() != m.cols()) throw DimensionError("char_poly: matrix not square");
  const int n = m.rows();
  if (n == 0) return IntPolynomial::from_ints({1});
  // Faddeev-LeVerrier: p(x) = x^n + b_1 x^{n-1} + ... + b_n, with
  // A_1 = M, b_k = -tr(A_k)/k, A_{k+1} = M (A_k + b_k I). All divisions exact.
  std::vector<mpz_class> b(static_cast<std::size_t>(n) + 1);
  b[0] = 1;
  IntMatrix a = m;
  for (int k = 1; k <= n; ++k) {
    mpz_class t = a.trace();
    assert(t % k == 0);
    b[k] = -t / k;
    if (k < n) a = m.mul(a.add(IntMatrix::identity(n).scale(b[k])));
  }
  std::vector<mpz_class> coeffs(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) coeffs[static_cast<std::size_t>(n - k)] = b[k];
  return IntPolynomial(std::move(coeffs));
}

IntPolynomial min_poly(const IntMatrix& m) {
  if (m.rows() != m.cols()) throw DimensionError("min_poly: matrix not square");
  const IntPolynomial cp = char_poly(m);
  const Factorization fact = irreducible_factors(cp);
  // Per irreducible factor, find the smallest exponent that still annihilates
  // together with the other factors at full char-poly multiplicity.
  std::vector<int> exps;
  exps.reserve(fact.factors.size());
  for (std::size_t i = 0; i < fact.factors.size(); ++i) {
    int lo = 1;
    for (; lo <= fact.factors[i].second; ++lo) {
      IntPolynomial candidate = IntPolynomial::from_ints({1});
      for (std::size_t j = 0; j < fact.factors.size(); ++j) {
        const int e = (j == i) ? lo : fact.factors[j].second;
        for (int k = 0; k < e; ++k) candidate = candidate * fact.factors[j].first;
      }
      if (eval_poly_at_matrix(candidate, m).is_zero()) break;
    }
    exps.push_back(std::min(lo, fact.factors[i].second));
  }
  IntPolynomial result = IntPolynomial::from_ints({1});
  for (std::size_t i = 0; i < fact.factors.size(); ++i)
    for (int k = 0; k < exps[i]; ++k) result = result * fact.factors[i].first;
  assert(eval_poly_at_matrix(result, m).is_zero());
  return result;
}

// ---------------------------------------------------------------------------
// Root finding: Aberth-Ehrlich simultaneous iteration with Weierstrass-style
// certified inclusion disks.
// ---------------------------------------------------------------------------

namespace {

using cdouble = std::complex<double>;

std::vector<double> to_doubles(const IntPolynomial& p) {
  std::vector<double> c(p.coeffs().size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = p.coeff(static_cast<int>(i)).get_d();
  return c;
}

cdouble eval_horner(const std::vector<double>& c, cdouble z, cdouble* deriv = nullptr) {
  cdouble p = 0.0, dp = 0.0;
  for (std::size_t i = c.size(); i-- > 0;) {
    dp = dp * z + p;
    p = p * z + c[i];
  }
  if (deriv) *deriv = dp;
  return p;
}

// Roots of a squarefree polynomial with certified radii. Throws on failure to
// certify within the iteration budget.
std::vector<RootCluster> aberth_roots(const IntPolynomial& poly, double tol) {
  const int n = poly.degree();
  std::vector<double> c = to_doubles(poly);
  if (n == 1) {
    RootCluster r;
    r.center = cdouble(-c[0] / c[1], 0.0);
    r.radius = std::abs(r.center) * 1e-15 + 1e-300;
    return {r};
  }

  // Cauchy bound initialization on a circle with an asymmetric phase offset.
  double cb = 0.0;
  for (int i = 0; i < n; ++i) cb = std::max(cb, std::abs(c[i] / c[n]));
  const double rho = 1.0 + cb;
  std::vector<cdouble> z(n);
  for (int k = 0; k < n; ++k) {
    const double ang = 2.0 * M_PI * (k + 0.354) / n + 0.7;
    z[k] = 0.5 * rho * cdouble(std::cos(ang), std::sin(ang));
  }

  for (int iter = 0; iter < 400; ++iter) {
    double shift = 0.0;
    for (int k = 0; k < n; ++k) {
      cdouble dp;
      const cdouble p = eval_horner(c, z[k], &dp);
      if (p == 0.0) continue;
      const cdouble newton = p / dp;
      cdouble sum = 0.0;
      for (int j = 0; j < n; ++j)
        if (j != k) sum += 1.0 / (z[k] - z[j]);
      const cdouble w = newton / (1.0 - newton * sum);
      z[k] -= w;
      shift = std::max(shift, std::abs(w));
    }
    if (shift < 1e-15 * rho) break;
  }

  // Enforce conjugate symmetry, then polish once by Newton.
  std::vector<bool> used(n, false);
  for (int k = 0; k < n; ++k) {
    if (used[k]) continue;
    if (std::abs(z[k].imag()) < 1e-9 * (1.0 + std::abs(z[k].real()))) {
      z[k] = cdouble(z[k].real(), 0.0);
      used[k] = true;
      continue;
    }
    int best = -1;
    double bestDist = 1e300;
    for (int j = 0; j < n; ++j) {
      if (j == k || used[j]) continue;
      const double dist = std::abs(std::conj(z[k]) - z[j]);
      if (dist < bestDist) {
        bestDist = dist;
        best = j;
      }
    }
    if (best >= 0 && bestDist < 1e-6 * rho) {
      const cdouble mean = 0.5 * (z[k] + std::conj(z[best]));
      z[k] = mean;
      z[best] = std::conj(mean);
      used[k] = used[best] = true;
    }
  }
  for (int k = 0; k < n; ++k) {
    for (int step = 0; step < 3; ++step) {
      cdouble dp;
      const cdouble p = eval_horner(c, z[k], &dp);
      if (dp == 0.0) break;
      z[k] -= p / dp;
    }
    if (std::abs(z[k].imag()) < 1e-12 * (1.0 + std::abs(z[k].real())))
      z[k] = cdouble(z[k].real(), 0.0);
  }

  // Weierstrass corrections give inclusion disks of radius n*|W_k|; the union
  // of the disks contains every root, and pairwise-disjoint disks isolate.
  std::vector<RootCluster> out(n);
  double worst = 0.0;
  for (int k = 0; k < n; ++k) {
    cdouble denom = c[n];
    for (int j = 0; j < n; ++j)
      if (j != k) denom *= (z[k] - z[j]);
    const double w = std::abs(eval_horner(c, z[k]) / denom);
    out[k].center = z[k];
    out[k].radius = n * w + 1e-300;
    worst = std::max(worst, out[k].radius);
  }
  for (int k = 0; k < n; ++k)
    for (int j = k + 1; j < n; ++j) {
      const double gap = std::abs(out[k].center - out[j].center);
      if (gap <= out[k].radius + out[j].radius)
        throw ConvergenceError("complex_roots: inclusion disks overlap", worst);
    }
  if (worst > tol) throw ConvergenceError("complex_roots: radius above tolerance", worst);
  std::sort(out.begin(), out.end(), [](const RootCluster& a, const RootCluster& b) {
    if (a.center.real() != b.center.real()) return a.center.real() < b.center.real();
    return a.center.imag() < b.center.imag();
  });
  return out;
}

// Yun squarefree decomposition over Z (primitive input): p = prod s_i^i.
std::vector<std::pair<IntPolynomial, int>> squarefree_decompose(const IntPolynomial& p) {
  std::vector<std::pair<IntPolynomial, int>> out;
  IntPolynomial a = p.primitive_part();
  if (a.degree() < 1) return out;
  IntPolynomial g = poly_gcd(a, a.derivative());
  if (g.degree() == 0) {
    out.emplace_back(a, 1);
    return out;
  }
  IntPolynomial w, y;
  if (!a.divide_exact(g, w)) throw Error("squarefree: gcd does not divide");
  if (!a.derivative().divide_exact(g, y)) throw Error("squarefree: gcd does not divide derivative");
  int i = 1;
  IntPolynomial z = y - w.derivative();
  while (true) {
    if (z.is_zero()) {
      if (w.degree() > 0) out.emplace_back(w, i);
      break;
    }
    IntPolynomial s = poly_gcd(w, z);
    if (s.degree() > 0 || s.coeff(0) != 1) {
      IntPolynomial wNext, yNext;
      if (!w.divide_exact(s, wNext)) throw Error("squarefree: step division failed");
      if (!z.divide_exact(s, yNext)) throw Error("squarefree: step division failed");
      if (s.degree() > 0) out.emplace_back(s, i);
      w = wNext;
      z = yNext - w.derivative();
    } else {
      z = z - w.derivative();
    }
    ++i;
    if (i > 64) throw Error("squarefree: no termination");
  }
  return out;
}

// Conjugation-closed root units: singleton real roots and conjugate pairs.
struct RootUnit {
  std::vector<int> indices;  // into the root list
};

std::vector<RootUnit> conjugation_units(const std::vector<RootCluster>& roots) {
  std::vector<RootUnit> units;
  std::vector<bool> used(roots.size(), false);
  for (std::size_t k = 0; k < roots.size(); ++k) {
    if (used[k]) continue;
    if (roots[k].center.imag() == 0.0) {
      units.push_back({{static_cast<int>(k)}});
      used[k] = true;
      continue;
    }
    int partner = -1;
    double best = 1e300;
    for (std::size_t j = 0; j < roots.size(); ++j) {
      if (j == k || used[j]) continue;
      const double d = std::abs(std::conj(roots[k].center) - roots[j].center);
      if (d < best) {
        best = d;
        partner = static_cast<int>(j);
      }
    }
    if (partner < 0) throw ConvergenceError("factor: unpaired complex root", best);
    units.push_back({{static_cast<int>(k), partner}});
    used[k] = used[partner] = true;
  }
  return units;
}

// Expand prod (x - z_i) for the chosen root indices (complex arithmetic).
std::vector<cdouble> expand_subset(const std::vector<RootCluster>& roots, const std::vector<int>& idx) {
  std::vector<cdouble> c{1.0};  // lowest degree first
  for (int i : idx) {
    std::vector<cdouble> next(c.size() + 1, 0.0);
    for (std::size_t k = 0; k < c.size(); ++k) {
      next[k + 1] += c[k];
      next[k] -= c[k] * roots[i].center;
    }
    c = std::move(next);
  }
  return c;
}

// Factor a monic squarefree primitive polynomial by clustering roots,
// enumerating conjugation-closed subsets by size, rounding the candidate
// coefficients and verifying with exact division.
std::vector<IntPolynomial> factor_monic_squarefree(IntPolynomial p) {
  std::vector<IntPolynomial> out;
  while (p.degree() > 0) {
    if (p.degree() == 1) {
      out.push_back(p);
      break;
    }
    const std::vector<RootCluster> roots = aberth_roots(p, 1e-7);
    const std::vector<RootUnit> units = conjugation_units(roots);
    const int u = static_cast<int>(units.size());
    bool found = false;
    for (int size = 1; size <= u && !found; ++size) {
      // Lexicographic combinations of `size` units.
      std::vector<int> comb(size);
      for (int i = 0; i < size; ++i) comb[i] = i;
      while (true) {
        std::vector<int> idx;
        for (int i : comb)
          for (int r : units[i].indices) idx.push_back(r);
        if (static_cast<int>(idx.size()) < p.degree()) {
          const std::vector<cdouble> cand = expand_subset(roots, idx);
          bool roundable = true;
          std::vector<mpz_class> coeffs(cand.size());
          for (std::size_t k = 0; k < cand.size(); ++k) {
            const double re = cand[k].real();
            const double rounded = std::nearbyint(re);
            if (std::abs(re - rounded) > 1e-4 * std::max(1.0, std::abs(re)) ||
                std::abs(cand[k].imag()) > 1e-4 * std::max(1.0, std::abs(re))) {
              roundable = false;
              break;
            }
            coeffs[k] = mpz_class(rounded);
          }
          if (roundable) {
            IntPolynomial candidate{std::move(coeffs)};
            IntPolynomial quotient;
            if (candidate.degree() >= 1 && p.divide_exact(candidate, quotient)) {
              out.push_back(candidate);
              p = quotient;
              found = true;
              break;
            }
          }
        }
        // next combination
        int i = size - 1;
        while (i >= 0 && comb[i] == u - size + i) --i;
        if (i < 0) break;
        ++comb[i];
        for (int j = i + 1; j < size; ++j) comb[j] = comb[j - 1] + 1;
      }
    }
    if (!found) {
      out.push_back(p);  // no proper divisor: irreducible
      break;
    }
  }
  return out;
}

bool poly_less(const IntPolynomial& a, const IntPolynomial& b) {
  if (a.degree() != b.degree()) return a.degree() < b.degree();
  for (int k = a.degree(); k >= 0; --k)
    if (a.coeff(k) != b.coeff(k)) return a.coeff(k) < b.coeff(k);
  return false;
}

double certified_abs_lo(const RootCluster& r) { return std::abs(r.center) - r.radius; }
double certified_abs_hi(const RootCluster& r) { return std::abs(r.center) + r.radius; }

bool clusters_match(const RootCluster& a, const RootCluster& b) {
  return std::abs(a.center - b.center) <= a.radius + b.radius + 1e-12;
}

}  // namespace

std::vector<RootCluster> complex_roots(const IntPolynomial& p, double tol) {
  if (p.is_zero() || p.degree() < 1) throw DimensionError("complex_roots: need degree >= 1");
  if (tol <= 0) throw DimensionError("complex_roots: tol must be positive");
  std::vector<RootCluster> out;
  for (const auto& [part, mult] : squarefree_decompose(p)) {
    for (RootCluster r : aberth_roots(part, tol)) {
      r.multiplicity = mult;
      out.push_back(r);
    }
  }
  std::sort(out.begin(), out.end(), [](const RootCluster& a, const RootCluster& b) {
    if (a.center.real() != b.center.real()) return a.center.real() < b.center.real();
    return a.center.imag() < b.center.imag();
  });
  return out;
}

Factorization irreducible_factors(const IntPolynomial& p) {
  if (p.is_zero()) throw DimensionError("irreducible_factors: zero polynomial");
  if (p.degree() > 12) throw UnsupportedError("irreducible_factors: degree above design limit 12");
  Factorization out;
  mpz_class cont = p.content();
  if (p.leading() < 0) cont = -cont;
  out.unit = cont;
  if (p.degree() == 0) return out;
  const IntPolynomial pp = p.primitive_part();
  if (!pp.is_monic())
    throw UnsupportedError("irreducible_factors: non-monic primitive part unsupported");

  std::vector<std::pair<IntPolynomial, int>> collected;
  for (const auto& [part, mult] : squarefree_decompose(pp)) {
    for (const IntPolynomial& f : factor_monic_squarefree(part)) collected.emplace_back(f, mult);
  }
  // Merge identical factors and order canonically.
  std::sort(collected.begin(), collected.end(),
            [](const auto& a, const auto& b) { return poly_less(a.first, b.first); });
  for (auto& [f, mult] : collected) {
    if (!out.factors.empty() && out.factors.back().first == f)
      out.factors.back().second += mult;
    else
      out.factors.emplace_back(f, mult);
  }
  return out;
}

std::string verdict_name(FamilyVerdict v) {
  switch (v) {
    case FamilyVerdict::PISOT_FAMILY: return "PISOT_FAMILY";
    case FamilyVerdict::NON_PISOT: return "NON_PISOT";
    case FamilyVerdict::TOTALLY_NON_PISOT: return "TOTALLY_NON_PISOT";
    case FamilyVerdict::STRONGLY_TOTALLY_NON_PISOT: return "STRONGLY_TOTALLY_NON_PISOT";
    case FamilyVerdict::MIXED: return "MIXED";
  }
  return "?";
}

AlgebraicSpectrumReport classify_family(const std::vector<SpectrumGroup>& spectrum) {
  AlgebraicSpectrumReport report;
  report.groups = spectrum;
  if (spectrum.empty()) throw DimensionError("classify_family: empty spectrum");

  bool allPisot = true, allNonPisot = true, allStrong = true;
  for (const SpectrumGroup& group : spectrum) {
    // Expansiveness: every spectrum element strictly outside the closed unit disk.
    for (const RootCluster& el : group.elements) {
      if (certified_abs_lo(el) <= 1.0) {
        if (certified_abs_hi(el) <= 1.0 + 2 * el.radius)
          throw PreconditionError("classify_family: spectrum element not outside closed unit disk");
        throw PrecisionError("classify_family: element modulus straddles 1 within certified radius");
      }
    }
    report.factors.emplace_back(group.min_poly, 1);

    const std::vector<RootCluster> conjugates = complex_roots(group.min_poly, 1e-8);
    bool pisot = true;
    bool strong = false;
    for (const RootCluster& conj : conjugates) {
      bool inGroup = false;
      for (const RootCluster& el : group.elements)
        if (clusters_match(conj, el)) inGroup = true;
      if (inGroup) continue;
      if (certified_abs_hi(conj) < 1.0) continue;  // Pisot-compatible conjugate
      if (certified_abs_lo(conj) > 1.0) {
        pisot = false;
        strong = true;
        continue;
      }
      // Modulus exactly 1 within radius: refuse to guess.
      throw PrecisionError("classify_family: conjugate modulus straddles 1 within certified radius");
    }
    report.group_verdicts.push_back(pisot ? FamilyVerdict::PISOT_FAMILY : FamilyVerdict::NON_PISOT);
    report.group_strong.push_back(strong);
    allPisot = allPisot && pisot;
    allNonPisot = allNonPisot && !pisot;
    allStrong = allStrong && strong;
  }

  if (allPisot)
    report.verdict = FamilyVerdict::PISOT_FAMILY;
  else if (allNonPisot)
    report.verdict = allStrong ? FamilyVerdict::STRONGLY_TOTALLY_NON_PISOT
                               : FamilyVerdict::TOTALLY_NON_PISOT;
  else
    report.verdict = FamilyVerdict::MIXED;
  report.perron_ok = perron_check(spectrum).ok;
  return report;
}

PerronCheck perron_check(const std::vector<SpectrumGroup>& spectrum) {
  PerronCheck result;
  for (const SpectrumGroup& group : spectrum) {
    const std::vector<RootCluster> conjugates = complex_roots(group.min_poly, 1e-8);
    for (std::size_t e = 0; e < group.elements.size(); ++e) {
      const RootCluster& el = group.elements[e];
      const int k1 = e < group.multiplicities.size() ? group.multiplicities[e] : 1;
      for (const RootCluster& conj : conjugates) {
        if (clusters_match(conj, el)) continue;
        // Clause 1: |lambda_1| > |lambda_2| with certified separation.
        if (certified_abs_lo(el) > certified_abs_hi(conj)) continue;
        // Clause 2: conjugate is itself an eigenvalue with multiplicity >= k1.
        bool matched = false;
        for (const SpectrumGroup& other : spectrum) {
          for (std::size_t j = 0; j < other.elements.size(); ++j) {
            if (!clusters_match(conj, other.elements[j])) continue;
            const int k2 = j < other.multiplicities.size() ? other.multiplicities[j] : 1;
            if (k2 >= k1) matched = true;
          }
        }
        if (matched) continue;
        if (certified_abs_hi(el) >= certified_abs_lo(conj)) {
          // Moduli too close to certify either way.
          throw PrecisionError("perron_check: modulus comparison uncertifiable");
        }
        result.ok = false;
        std::ostringstream w;
        w << "eigenvalue " << el.center.real();
        if (el.center.imag() != 0) w << (el.center.imag() > 0 ? "+" : "") << el.center.imag() << "i";
        w << " (mult " << k1 << ") dominated by conjugate " << conj.center.real();
        if (conj.center.imag() != 0)
          w << (conj.center.imag() > 0 ? "+" : "") << conj.center.imag() << "i";
        result.witness = w.str();
        return result;
      }
    }
  }
  return result;
}

CompanionData companion(const IntPolynomial& p) {
  if (p.is_zero() || p.degree() < 1) throw DimensionError("companion: need degree >= 1");
  if (!p.is_monic()) throw Error("companion: polynomial must be monic");
  const int t = p.degree();
  CompanionData data;
  data.c.resize(t);
  mpz_class absSum = 0;
  for (int i = 0; i < t; ++i) {
    data.c[i] = -p.coeff(i);  // p(X) = X^t - c_{t-1} X^{t-1} - ... - c_0
    absSum += abs(data.c[i]);
  }
  data.matrix = IntMatrix(t, t);
  for (int i = 0; i + 1 < t; ++i) data.matrix.at(i, i + 1) = 1;
  for (int j = 0; j < t; ++j) data.matrix.at(t - 1, j) = data.c[j];
  data.delta0 = mpq_class(1, 1 + absSum);
  data.delta0.canonicalize();
  return data;
}

mpz_class height(const IntPolynomial& p) {
  mpz_class h = 0;
  for (const auto& c : p.coeffs()) h = std::max(h, mpz_class(abs(c)));
  return h;
}

}  // namespace aps::algebraic
