#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace aps {

// ---------------------------------------------------------------------------
// Error taxonomy. Every failure mode surfaces as a typed exception carrying a
// human-readable message; ops that can report extra data (minimal n, residual)
// expose it as a member.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  ValidationError(const std::string& msg, std::vector<std::string> issues)
      : Error(msg), issues(std::move(issues)) {}
  std::vector<std::string> issues;
};

class PrecisionError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& msg, double residual)
      : Error(msg), residual(residual) {}
  double residual = 0.0;
};

class CoverageError : public Error {
 public:
  CoverageError(const std::string& msg, int minimal_n)
      : Error(msg), minimal_n(minimal_n) {}
  int minimal_n = -1;
};

class ResourceError : public Error {
 public:
  using Error::Error;
};

class ContractError : public Error {
 public:
  using Error::Error;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

class NonIntegralityError : public Error {
 public:
  NonIntegralityError(const std::string& msg, double residual)
      : Error(msg), residual(residual) {}
  double residual = 0.0;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Small geometry: vectors and matrices of dimension d <= 2. The second
// component is ignored (kept at zero) when d == 1.
// ---------------------------------------------------------------------------

struct Vec {
  double x = 0.0;
  double y = 0.0;

  Vec() = default;
  Vec(double x, double y) : x(x), y(y) {}
  explicit Vec(double x) : x(x), y(0.0) {}

  double operator[](int i) const { return i == 0 ? x : y; }
  double& operator[](int i) { return i == 0 ? x : y; }

  Vec operator+(const Vec& o) const { return {x + o.x, y + o.y}; }
  Vec operator-(const Vec& o) const { return {x - o.x, y - o.y}; }
  Vec operator*(double c) const { return {c * x, c * y}; }
  Vec operator-() const { return {-x, -y}; }
};

inline double dot(const Vec& a, const Vec& b) { return a.x * b.x + a.y * b.y; }
inline double norm_inf(const Vec& v) { return std::max(std::abs(v.x), std::abs(v.y)); }
inline double norm2(const Vec& v) { return std::sqrt(v.x * v.x + v.y * v.y); }

// Lexicographic comparison with absolute tolerance, used for canonical orderings.
inline bool vec_less(const Vec& a, const Vec& b, double tol) {
  if (a.x < b.x - tol) return true;
  if (a.x > b.x + tol) return false;
  return a.y < b.y - tol;
}
inline bool vec_close(const Vec& a, const Vec& b, double tol) {
  return std::abs(a.x - b.x) <= tol && std::abs(a.y - b.y) <= tol;
}

struct Mat {
  int d = 1;
  double a[2][2] = {{0, 0}, {0, 0}};

  static Mat identity(int d) {
    Mat m;
    m.d = d;
    m.a[0][0] = 1.0;
    m.a[1][1] = d == 2 ? 1.0 : 0.0;
    return m;
  }
  static Mat diag(double u) {
    Mat m;
    m.d = 1;
    m.a[0][0] = u;
    return m;
  }
  static Mat diag(double u, double v) {
    Mat m;
    m.d = 2;
    m.a[0][0] = u;
    m.a[1][1] = v;
    return m;
  }

  Vec apply(const Vec& v) const {
    if (d == 1) return Vec{a[0][0] * v.x};
    return {a[0][0] * v.x + a[0][1] * v.y, a[1][0] * v.x + a[1][1] * v.y};
  }

  Mat mul(const Mat& o) const {
    Mat r;
    r.d = d;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        double s = 0;
        for (int k = 0; k < d; ++k) s += a[i][k] * o.a[k][j];
        r.a[i][j] = s;
      }
    return r;
  }

  Mat transpose() const {
    Mat r = *this;
    std::swap(r.a[0][1], r.a[1][0]);
    return r;
  }

  double det() const {
    if (d == 1) return a[0][0];
    return a[0][0] * a[1][1] - a[0][1] * a[1][0];
  }

  Mat inverse() const {
    Mat r;
    r.d = d;
    const double dt = det();
    if (dt == 0.0) throw DimensionError("singular matrix");
    if (d == 1) {
      r.a[0][0] = 1.0 / dt;
      return r;
    }
    r.a[0][0] = a[1][1] / dt;
    r.a[0][1] = -a[0][1] / dt;
    r.a[1][0] = -a[1][0] / dt;
    r.a[1][1] = a[0][0] / dt;
    return r;
  }

  // Operator norm induced by the sup norm: max absolute row sum.
  double norm_inf() const {
    double best = 0;
    for (int i = 0; i < d; ++i) {
      double s = 0;
      for (int j = 0; j < d; ++j) s += std::abs(a[i][j]);
      best = std::max(best, s);
    }
    return best;
  }

  Mat pow(int n) const {
    Mat r = identity(d);
    for (int i = 0; i < n; ++i) r = r.mul(*this);
    return r;
  }
};

// ---------------------------------------------------------------------------
// Scalar helpers
// ---------------------------------------------------------------------------

// e[t] = exp(2 pi i t), evaluated after reducing t mod 1 so large phases keep
// full precision.
inline std::complex<double> unit_phase(double t) {
  const double r = t - std::nearbyint(t);
  const double a = 2.0 * M_PI * r;
  return {std::cos(a), std::sin(a)};
}

// Distance from t to the nearest integer, in [0, 1/2].
inline double torus_dist(double t) { return std::abs(t - std::nearbyint(t)); }

// Centered fractional part in (-1/2, 1/2].
inline double centered_frac(double t) {
  double r = t - std::nearbyint(t);
  if (r <= -0.5) r += 1.0;  // nearbyint ties-to-even can land on -1/2
  return r;
}

// ---------------------------------------------------------------------------
// Gauss-Legendre quadrature on [-1, 1]; nodes computed once per order by
// Newton iteration on the Legendre recurrence and cached.
// ---------------------------------------------------------------------------

struct QuadRule {
  std::vector<double> node;
  std::vector<double> weight;
};

const QuadRule& gauss_legendre(int order);

// ---------------------------------------------------------------------------
// Low-discrepancy sequences (deterministic sampling layouts)
// ---------------------------------------------------------------------------

// Kronecker / R_d sequence in [0,1)^d; index k >= 0.
inline double kronecker1(std::uint64_t k) {
  const double a = 0.6180339887498949;  // 1/phi
  double v = std::fmod(0.5 + a * static_cast<double>(k), 1.0);
  return v;
}
inline Vec kronecker2(std::uint64_t k) {
  const double a1 = 0.7548776662466927;  // R2 sequence
  const double a2 = 0.5698402909980532;
  return {std::fmod(0.5 + a1 * static_cast<double>(k), 1.0),
          std::fmod(0.5 + a2 * static_cast<double>(k), 1.0)};
}

// ---------------------------------------------------------------------------
// Deterministic parallel map: evaluates fn(i) for i in [0, count) using the
// requested number of worker threads; each result lands in its own slot, so
// the output is independent of the thread count.
// ---------------------------------------------------------------------------

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

int resolve_thread_count(int requested);  // falls back to APERIODIC_SPECTRA_THREADS, then 1

// ---------------------------------------------------------------------------
// Formatting
// ---------------------------------------------------------------------------

std::string format_double(double v);  // 17 significant digits, locale-free

// Least-squares slope of y against x.
double ls_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace aps
