#include "aps/selfaffine.hpp"

#include <cmath>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

namespace aps::selfaffine {

using birkhoff::CylindricalFunction;
using tiling::Patch;
using tiling::SubstitutionRule;
using tiling::Support;

namespace {

Eigen::Matrix2d to_eigen(const Mat& m) {
  Eigen::Matrix2d e;
  e << m.a[0][0], m.a[0][1], m.a[1][0], m.a[1][1];
  return e;
}

Mat from_eigen(const Eigen::Matrix2d& e, int d) {
  Mat m;
  m.d = d;
  m.a[0][0] = e(0, 0);
  m.a[0][1] = e(0, 1);
  m.a[1][0] = e(1, 0);
  m.a[1][1] = e(1, 1);
  return m;
}

bool has_nonpositive_real_eigenvalue(const Mat& l) {
  if (l.d == 1) return l.a[0][0] <= 0.0;
  const Eigen::ComplexEigenSolver<Eigen::Matrix2d> solver(to_eigen(l));
  for (int i = 0; i < 2; ++i) {
    const auto ev = solver.eigenvalues()(i);
    if (std::abs(ev.imag()) < 1e-12 * std::abs(ev) && ev.real() <= 0.0) return true;
  }
  return false;
}

double max_tile_diameter(const SubstitutionRule& rule) {
  double d = 0.0;
  for (const auto& t : rule.prototiles) d = std::max(d, t.support.diameter());
  return d;
}

}  // namespace

DeformationData matrix_log(const Mat& l) {
  DeformationData def;
  def.d = l.d;
  const double det = l.det();
  if (det <= 0.0) throw Error("matrix_log: det(L) must be positive");
  if (has_nonpositive_real_eigenvalue(l))
    throw Error("matrix_log: eigenvalue on the closed negative real axis; square the rule first");

  if (l.d == 1) {
    def.a = Mat::diag(std::log(l.a[0][0]));
    def.sigma = 1.0 / std::log(det);
    def.norm_a = std::abs(def.a.a[0][0]);
    return def;
  }

  const Eigen::Matrix2d le = to_eigen(l);
  const Eigen::ComplexEigenSolver<Eigen::Matrix2d> solver(le);
  const auto& values = solver.eigenvalues();
  const auto& vectors = solver.eigenvectors();
  Eigen::Matrix2d a;
  if (std::abs(values(0) - values(1)) < 1e-12 * std::abs(values(0))) {
    // Repeated eigenvalue: only the scalar case is diagonalizable.
    if (std::abs(le(0, 1)) + std::abs(le(1, 0)) > 1e-12 * std::abs(values(0)) ||
        std::abs(le(0, 0) - le(1, 1)) > 1e-12 * std::abs(values(0)))
      throw Error("matrix_log: repeated eigenvalue with non-scalar matrix (not diagonalizable)");
    a = Eigen::Matrix2d::Identity() * std::log(le(0, 0));
  } else {
    Eigen::Matrix2cd logD = Eigen::Matrix2cd::Zero();
    logD(0, 0) = std::log(values(0));  // principal branch
    logD(1, 1) = std::log(values(1));
    const Eigen::Matrix2cd ac = vectors * logD * vectors.inverse();
    if (ac.imag().cwiseAbs().maxCoeff() > 1e-9 * (1.0 + ac.real().cwiseAbs().maxCoeff()))
      throw PrecisionError("matrix_log: non-real principal logarithm");
    a = ac.real();
  }
  def.a = from_eigen(a, 2);
  def.sigma = 2.0 / std::log(det);
  def.norm_a = def.a.norm_inf();

  const Eigen::Matrix2d back = a.exp();
  if ((back - le).cwiseAbs().maxCoeff() > 1e-9 * le.cwiseAbs().maxCoeff())
    throw PrecisionError("matrix_log: exp(log L) does not reproduce L");
  return def;
}

RuleDeformation deformation_for_rule(const SubstitutionRule& rule) {
  RuleDeformation out;
  if (has_nonpositive_real_eigenvalue(rule.expansion)) {
    out.rule = tiling::rule_power(rule, 2);
    out.data = matrix_log(out.rule.expansion);
    out.data.auto_squared = true;
  } else {
    out.rule = rule;
    out.data = matrix_log(rule.expansion);
  }
  return out;
}

Mat flow(const DeformationData& def, double t) {
  if (def.d == 1) return Mat::diag(std::exp(t * def.a.a[0][0]));
  const Eigen::Matrix2d e = (t * to_eigen(def.a)).exp();
  return from_eigen(e, 2);
}

Support domain_B(const DeformationData& def, double R) {
  if (R < 1.0) throw DimensionError("domain_B: R >= 1 required");
  const Mat g = flow(def, def.sigma * std::log(R));
  Support out;
  out.d = def.d;
  if (def.d == 1) {
    const double e = g.a[0][0];
    out.vertices = {Vec{-e}, Vec{e}};
  } else {
    out.vertices = {g.apply(Vec{-1, -1}), g.apply(Vec{1, -1}), g.apply(Vec{1, 1}),
                    g.apply(Vec{-1, 1})};
    if (out.volume() < 0) std::reverse(out.vertices.begin(), out.vertices.end());
  }
  const double want = std::pow(R, def.d) * std::pow(2.0, def.d);
  if (std::abs(out.volume() - want) > 1e-9 * std::pow(R, def.d))
    throw PrecisionError("domain_B: volume check failed");
  return out;
}

namespace {

std::vector<int> tiles_inside_domain(const SubstitutionRule& rule, const Patch& patch,
                                     const Mat& g, const Vec& shift, double tol) {
  const Mat gInv = g.inverse();
  std::vector<int> out;
  for (std::size_t i = 0; i < patch.tiles.size(); ++i) {
    const auto& tile = patch.tiles[i];
    const Support placed = rule.prototiles[tile.type].support.translated(tile.translation);
    bool inside = true;
    for (const Vec& v : placed.vertices) {
      const Vec u = gInv.apply(v - shift);
      if (std::abs(u.x) > 1.0 + tol || (rule.d == 2 && std::abs(u.y) > 1.0 + tol)) {
        inside = false;
        break;
      }
    }
    if (inside) out.push_back(static_cast<int>(i));
  }
  return out;
}

}  // namespace

std::complex<double> twisted_integral_deformed(const SubstitutionRule& rule,
                                               const DeformationData& def,
                                               const CylindricalFunction& f, double R,
                                               const Vec& omega) {
  const Mat g = flow(def, def.sigma * std::log(R));
  const double reach = g.norm_inf();
  const Patch ambient = tiling::patch_in_cube_auto(rule, reach + max_tile_diameter(rule) + 1e-9);
  const double tol = 1e-12 * std::max(1.0, reach);
  std::complex<double> acc = 0.0;
  std::vector<std::complex<double>> hat(rule.type_count());
  for (int i = 0; i < rule.type_count(); ++i) hat[i] = birkhoff::psi_hat(rule, f, i, omega);
  for (int idx : tiles_inside_domain(rule, ambient, g, Vec{}, tol)) {
    const auto& tile = ambient.tiles[idx];
    acc += unit_phase(dot(omega, tile.translation)) * hat[tile.type];
  }
  return acc;
}

std::complex<double> twisted_integral_deformed_oracle(const SubstitutionRule& rule,
                                                      const DeformationData& def,
                                                      const CylindricalFunction& f, double R,
                                                      const Vec& omega) {
  const Mat g = flow(def, def.sigma * std::log(R));
  const double reach = g.norm_inf();
  const Patch ambient = tiling::patch_in_cube_auto(rule, reach + max_tile_diameter(rule) + 1e-9);
  const double tol = 1e-12 * std::max(1.0, reach);
  std::complex<double> acc = 0.0;
  for (int idx : tiles_inside_domain(rule, ambient, g, Vec{}, tol))
    acc += birkhoff::tile_twisted_quadrature(rule, f, ambient.tiles[idx], omega);
  return acc;
}

birkhoff::Estimate g_tilde(const SubstitutionRule& rule, const DeformationData& def,
                           const CylindricalFunction& f, double R, const Vec& omega,
                           int sample_count) {
  if (sample_count < 1) throw DimensionError("g_tilde: need at least one sample");
  const Mat g = flow(def, def.sigma * std::log(R));
  const double reach = g.norm_inf();
  const double range = 3.0 * reach;
  const Patch ambient =
      tiling::patch_in_cube_auto(rule, range + reach + max_tile_diameter(rule) + 1e-9);
  const double tol = 1e-12 * std::max(1.0, reach);
  std::vector<std::complex<double>> hat(rule.type_count());
  for (int i = 0; i < rule.type_count(); ++i) hat[i] = birkhoff::psi_hat(rule, f, i, omega);
  const double vol = std::pow(2.0 * R, rule.d);

  double sum = 0.0, sumSq = 0.0;
  for (int k = 0; k < sample_count; ++k) {
    Vec t;
    if (rule.d == 1) {
      t = Vec{-range + 2.0 * range * kronecker1(k)};
    } else {
      const Vec u = kronecker2(k);
      t = Vec{-range + 2.0 * range * u.x, -range + 2.0 * range * u.y};
    }
    std::complex<double> s = 0.0;
    for (int idx : tiles_inside_domain(rule, ambient, g, t, tol)) {
      const auto& tile = ambient.tiles[idx];
      s += unit_phase(dot(omega, tile.translation)) * hat[tile.type];
    }
    const double v = std::norm(s) / vol;
    sum += v;
    sumSq += v * v;
  }
  birkhoff::Estimate est;
  est.value = sum / sample_count;
  if (sample_count > 1) {
    const double var = std::max(0.0, (sumSq - sum * sum / sample_count) / (sample_count - 1.0));
    est.std_error = std::sqrt(var / sample_count);
  }
  return est;
}

Mat deformation_matrix(const DeformationData& def, double r) {
  if (r <= 0.0 || r > 0.5) throw DimensionError("deformation_matrix: r must lie in (0, 1/2]");
  Mat g = flow(def, -def.sigma * std::log(2.0 * r));
  Mat m = g.transpose();
  for (int i = 0; i < m.d; ++i)
    for (int j = 0; j < m.d; ++j) m.a[i][j] *= 2.0 * r;
  m.d = def.d;
  return m;
}

DeformedBox deformed_box(const DeformationData& def, const Vec& omega, double r) {
  DeformedBox out;
  const Mat m = deformation_matrix(def, r);
  const Mat mInv = m.inverse();
  out.box.d = def.d;
  if (def.d == 1) {
    const Vec a = mInv.apply(Vec{omega.x - r});
    const Vec b = mInv.apply(Vec{omega.x + r});
    out.box.vertices = {Vec{std::min(a.x, b.x)}, Vec{std::max(a.x, b.x)}};
  } else {
    out.box.vertices = {mInv.apply(omega + Vec{-r, -r}), mInv.apply(omega + Vec{r, -r}),
                        mInv.apply(omega + Vec{r, r}), mInv.apply(omega + Vec{-r, r})};
    if (out.box.volume() < 0) std::reverse(out.box.vertices.begin(), out.box.vertices.end());
  }
  // Containment check of the inscribed cube C_{r^{sigma ||a||}} in M_r^{-1} C^0_r.
  out.inscribed_half = std::pow(r, def.sigma * def.norm_a);
  const double h = out.inscribed_half;
  bool ok = true;
  const double tol = 1e-9 * std::max(1.0, r);
  if (def.d == 1) {
    for (double u : {-h, h}) ok = ok && std::abs(m.apply(Vec{u}).x) <= r + tol;
  } else {
    for (const Vec u : {Vec{-h, -h}, Vec{h, -h}, Vec{h, h}, Vec{-h, h}}) {
      const Vec img = m.apply(u);
      ok = ok && std::abs(img.x) <= r + tol && std::abs(img.y) <= r + tol;
    }
  }
  out.inscribed_cube_ok = ok;
  return out;
}

}  // namespace aps::selfaffine
