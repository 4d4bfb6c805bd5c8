#include "aps/birkhoff.hpp"

#include <algorithm>
#include <cmath>

#include <fftw3.h>

namespace aps::birkhoff {

using tiling::Patch;
using tiling::Prototile;
using tiling::SubstitutionRule;
using tiling::Support;

using cdouble = std::complex<double>;

// ---------------------------------------------------------------------------
// Profile evaluation
// ---------------------------------------------------------------------------

namespace {

double tent(double u) { return std::max(0.0, 1.0 - std::abs(2.0 * u - 1.0)); }

double smooth_bump(double u) {
  if (u <= 0.0 || u >= 1.0) return 0.0;
  return std::exp(4.0 - 1.0 / (u * (1.0 - u)));
}

// Edge-distance product normalized to 1 at the centroid (general polygons).
double polygon_hat(const Support& s, const Vec& p) {
  const Vec c = s.centroid();
  double val = 1.0, ref = 1.0;
  const std::size_t n = s.vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec a = s.vertices[i];
    const Vec b = s.vertices[(i + 1) % n];
    const double len = norm2(b - a);
    if (len == 0) continue;
    const double dp = ((b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)) / len;
    const double dc = ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)) / len;
    if (dp <= 0.0) return 0.0;
    val *= dp;
    ref *= dc;
  }
  return val / ref;
}

double poly_tensor(const ProfileTerm& term, double u, double v) {
  double acc = 0.0;
  for (int j = std::max(1, term.ny) - 1; j >= 0; --j) {
    double row = 0.0;
    for (int i = term.nx - 1; i >= 0; --i)
      row = row * u + term.coeffs[static_cast<std::size_t>(j) * term.nx + i];
    acc = acc * v + row;
  }
  return acc;
}

}  // namespace

double eval_profile(const SubstitutionRule& rule, int type, const Profile& profile, const Vec& point) {
  const Support& s = rule.prototiles[type].support;
  double total = 0.0;
  Vec lo, hi;
  s.bbox(lo, hi);
  for (const ProfileTerm& term : profile) {
    if (term.kind == ProfileKind::Zero || term.weight == 0.0) continue;
    double value = 0.0;
    if (rule.d == 1) {
      const double u = (point.x - lo.x) / (hi.x - lo.x);
      if (u < 0.0 || u > 1.0) continue;
      switch (term.kind) {
        case ProfileKind::Indicator: value = 1.0; break;
        case ProfileKind::Hat: value = tent(u); break;
        case ProfileKind::Bump: value = smooth_bump(u); break;
        case ProfileKind::Poly: value = poly_tensor(term, u, 0.0) * tent(u); break;
        default: break;
      }
    } else if (s.is_axis_box()) {
      const double u = (point.x - lo.x) / (hi.x - lo.x);
      const double v = (point.y - lo.y) / (hi.y - lo.y);
      if (u < 0.0 || u > 1.0 || v < 0.0 || v > 1.0) continue;
      switch (term.kind) {
        case ProfileKind::Indicator: value = 1.0; break;
        case ProfileKind::Hat: value = tent(u) * tent(v); break;
        case ProfileKind::Bump: value = smooth_bump(u) * smooth_bump(v); break;
        case ProfileKind::Poly: value = poly_tensor(term, u, v) * tent(u) * tent(v); break;
        default: break;
      }
    } else {
      if (!s.contains(point, 0.0)) continue;
      switch (term.kind) {
        case ProfileKind::Indicator: value = 1.0; break;
        case ProfileKind::Hat:
        case ProfileKind::Bump: value = polygon_hat(s, point); break;
        case ProfileKind::Poly: {
          const double u = (point.x - lo.x) / (hi.x - lo.x);
          const double v = (point.y - lo.y) / (hi.y - lo.y);
          value = poly_tensor(term, u, v) * polygon_hat(s, point);
          break;
        }
        default: break;
      }
    }
    total += term.weight * value;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Construction and norms
// ---------------------------------------------------------------------------

CylindricalFunction make_cylindrical(const SubstitutionRule& rule, std::vector<Profile> psi,
                                     bool allow_indicator) {
  if (static_cast<int>(psi.size()) != rule.type_count())
    throw DimensionError("make_cylindrical: profile count mismatch");
  for (const Profile& p : psi)
    for (const ProfileTerm& t : p) {
      if (t.kind == ProfileKind::Indicator && !allow_indicator)
        throw PreconditionError(
            "make_cylindrical: indicator profiles do not vanish on the boundary (calibration only)");
      if (t.kind == ProfileKind::Poly && (t.nx < 1 || static_cast<int>(t.coeffs.size()) < t.nx))
        throw DimensionError("make_cylindrical: malformed poly coefficients");
    }

  CylindricalFunction f;
  f.psi = std::move(psi);
  double sup = 0.0, slope = 0.0;
  for (int type = 0; type < rule.type_count(); ++type) {
    const Support& s = rule.prototiles[type].support;
    Vec lo, hi;
    s.bbox(lo, hi);
    if (rule.d == 1) {
      const int n = 2048;
      const double h = (hi.x - lo.x) / n;
      double prev = 0.0;
      for (int i = 0; i <= n; ++i) {
        const double val = eval_profile(rule, type, f.psi[type], Vec{lo.x + i * h});
        sup = std::max(sup, std::abs(val));
        if (i > 0) slope = std::max(slope, std::abs(val - prev) / h);
        prev = val;
      }
    } else {
      const int n = 128;
      const double hx = (hi.x - lo.x) / n;
      const double hy = (hi.y - lo.y) / n;
      std::vector<double> row(n + 1, 0.0);
      for (int j = 0; j <= n; ++j) {
        double prev = 0.0;
        for (int i = 0; i <= n; ++i) {
          const double val =
              eval_profile(rule, type, f.psi[type], Vec{lo.x + i * hx, lo.y + j * hy});
          sup = std::max(sup, std::abs(val));
          if (i > 0) slope = std::max(slope, std::abs(val - prev) / hx);
          if (j > 0) slope = std::max(slope, std::abs(val - row[i]) / hy);
          prev = val;
          row[i] = val;
        }
      }
    }
  }
  f.sup_norm = sup;
  f.lipschitz_norm = sup + slope;
  return f;
}

namespace {

std::vector<Profile> uniform_profiles(const SubstitutionRule& rule, ProfileKind kind,
                                      const std::vector<double>& weights) {
  std::vector<Profile> psi(rule.type_count());
  for (int i = 0; i < rule.type_count(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    if (w != 0.0) psi[i].push_back({kind, w, {}, 0, 0});
  }
  return psi;
}

}  // namespace

CylindricalFunction zero_function(const SubstitutionRule& rule) {
  return make_cylindrical(rule, std::vector<Profile>(rule.type_count()));
}

CylindricalFunction hat_function(const SubstitutionRule& rule, const std::vector<double>& weights) {
  return make_cylindrical(rule, uniform_profiles(rule, ProfileKind::Hat, weights));
}

CylindricalFunction bump_function(const SubstitutionRule& rule, const std::vector<double>& weights) {
  return make_cylindrical(rule, uniform_profiles(rule, ProfileKind::Bump, weights));
}

CylindricalFunction constant_function(const SubstitutionRule& rule) {
  return make_cylindrical(rule, uniform_profiles(rule, ProfileKind::Indicator, {}), true);
}

// ---------------------------------------------------------------------------
// PatchIndex
// ---------------------------------------------------------------------------

PatchIndex::PatchIndex(const SubstitutionRule& rule, const Patch& patch)
    : rule_(&rule), patch_(&patch), d_(rule.d) {
  double diam = 1.0;
  for (const Prototile& t : rule.prototiles) diam = std::max(diam, t.support.diameter());
  tol_ = 1e-9 * diam;
  if (d_ == 1) {
    order_.resize(patch.tiles.size());
    for (std::size_t i = 0; i < patch.tiles.size(); ++i) order_[i] = static_cast<int>(i);
    std::sort(order_.begin(), order_.end(), [&](int a, int b) {
      const double la = rule.prototiles[patch.tiles[a].type].support.vertices[0].x +
                        patch.tiles[a].translation.x;
      const double lb = rule.prototiles[patch.tiles[b].type].support.vertices[0].x +
                        patch.tiles[b].translation.x;
      if (la != lb) return la < lb;
      return a < b;
    });
    lefts_.resize(order_.size());
    for (std::size_t k = 0; k < order_.size(); ++k) {
      const auto& tile = patch.tiles[order_[k]];
      lefts_[k] = rule.prototiles[tile.type].support.vertices[0].x + tile.translation.x;
    }
    return;
  }
  lo_ = Vec{1e300, 1e300};
  hi_ = Vec{-1e300, -1e300};
  for (const auto& tile : patch.tiles) {
    Vec plo, phi;
    rule.prototiles[tile.type].support.translated(tile.translation).bbox(plo, phi);
    lo_.x = std::min(lo_.x, plo.x);
    lo_.y = std::min(lo_.y, plo.y);
    hi_.x = std::max(hi_.x, phi.x);
    hi_.y = std::max(hi_.y, phi.y);
  }
  cell_ = diam;
  nx_ = std::max(1, static_cast<int>((hi_.x - lo_.x) / cell_) + 1);
  ny_ = std::max(1, static_cast<int>((hi_.y - lo_.y) / cell_) + 1);
  cells_.assign(static_cast<std::size_t>(nx_) * ny_, {});
  for (std::size_t i = 0; i < patch.tiles.size(); ++i) {
    Vec plo, phi;
    rule.prototiles[patch.tiles[i].type]
        .support.translated(patch.tiles[i].translation)
        .bbox(plo, phi);
    const int x0 = std::clamp(static_cast<int>((plo.x - lo_.x) / cell_), 0, nx_ - 1);
    const int x1 = std::clamp(static_cast<int>((phi.x - lo_.x) / cell_), 0, nx_ - 1);
    const int y0 = std::clamp(static_cast<int>((plo.y - lo_.y) / cell_), 0, ny_ - 1);
    const int y1 = std::clamp(static_cast<int>((phi.y - lo_.y) / cell_), 0, ny_ - 1);
    for (int cx = x0; cx <= x1; ++cx)
      for (int cy = y0; cy <= y1; ++cy)
        cells_[static_cast<std::size_t>(cy) * nx_ + cx].push_back(static_cast<int>(i));
  }
}

int PatchIndex::locate(const Vec& s) const {
  const auto& tiles = patch_->tiles;
  if (d_ == 1) {
    // rightmost tile with left <= s.x, then walk left across boundary ties
    auto it = std::upper_bound(lefts_.begin(), lefts_.end(), s.x + tol_);
    int best = -1;
    for (std::size_t k = it - lefts_.begin(); k-- > 0;) {
      const int idx = order_[k];
      const auto& tile = tiles[idx];
      const Support& sup = rule_->prototiles[tile.type].support;
      const double left = sup.vertices[0].x + tile.translation.x;
      const double right = sup.vertices[1].x + tile.translation.x;
      if (left > s.x + tol_) continue;
      if (right >= s.x - tol_) {
        if (best < 0 || idx < best) best = idx;
      }
      if (s.x - left > 2.0 * cell_ && k + 8 < lefts_.size()) break;
      if (left < s.x - 2.0 * (sup.vertices[1].x - sup.vertices[0].x) - 1.0) break;
    }
    return best;
  }
  if (s.x < lo_.x - tol_ || s.x > hi_.x + tol_ || s.y < lo_.y - tol_ || s.y > hi_.y + tol_)
    return -1;
  const int cx = std::clamp(static_cast<int>((s.x - lo_.x) / cell_), 0, nx_ - 1);
  const int cy = std::clamp(static_cast<int>((s.y - lo_.y) / cell_), 0, ny_ - 1);
  int best = -1;
  for (int idx : cells_[static_cast<std::size_t>(cy) * nx_ + cx]) {
    const auto& tile = tiles[idx];
    const Support placed = rule_->prototiles[tile.type].support.translated(tile.translation);
    if (placed.contains(s, tol_) && (best < 0 || idx < best)) best = idx;
  }
  return best;
}

// ---------------------------------------------------------------------------
// Fejer kernel
// ---------------------------------------------------------------------------

double fejer(int d, double R, const Vec& y) {
  if (R <= 0) throw DimensionError("fejer: R must be positive");
  double prod = 1.0;
  for (int i = 0; i < d; ++i) {
    const double yi = y[i];
    if (yi == 0.0) {
      prod *= R;
      continue;
    }
    const double s = std::sin(M_PI * R * yi) / (M_PI * yi);
    prod *= s * s / R;
  }
  return prod;
}

// ---------------------------------------------------------------------------
// Oscillatory quadrature (panelled Gauss-Legendre)
// ---------------------------------------------------------------------------

namespace {

constexpr int kQuadOrder = 16;

int panel_count(double osc, double length) {
  const double cycles = std::abs(osc) * length;
  return std::clamp(static_cast<int>(std::ceil(2.0 * cycles)) + 1, 1, 1 << 16);
}

template <typename F>
cdouble panel_gl_interval(const F& fn, double a, double b, int panels) {
  const QuadRule& rule = gauss_legendre(kQuadOrder);
  const double h = (b - a) / panels;
  cdouble acc = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * h;
    cdouble local = 0.0;
    for (int q = 0; q < kQuadOrder; ++q) local += rule.weight[q] * fn(mid + 0.5 * h * rule.node[q]);
    acc += local * (0.5 * h);
  }
  return acc;
}

template <typename F>
cdouble adaptive_interval(const F& fn, double a, double b, double osc, double scale_hint) {
  int panels = panel_count(osc, b - a);
  cdouble prev = panel_gl_interval(fn, a, b, panels);
  for (int round = 0; round < 8; ++round) {
    panels *= 2;
    const cdouble cur = panel_gl_interval(fn, a, b, panels);
    if (std::abs(cur - prev) <= 1e-9 * std::abs(cur) + 1e-14 * scale_hint) return cur;
    prev = cur;
  }
  throw PrecisionError("quadrature: interval integral did not converge");
}

template <typename F>
cdouble panel_gl_box(const F& fn, const Vec& lo, const Vec& hi, int px, int py) {
  const QuadRule& rule = gauss_legendre(kQuadOrder);
  const double hx = (hi.x - lo.x) / px;
  const double hy = (hi.y - lo.y) / py;
  cdouble acc = 0.0;
  for (int pxi = 0; pxi < px; ++pxi) {
    const double mx = lo.x + (pxi + 0.5) * hx;
    for (int pyi = 0; pyi < py; ++pyi) {
      const double my = lo.y + (pyi + 0.5) * hy;
      cdouble local = 0.0;
      for (int qx = 0; qx < kQuadOrder; ++qx)
        for (int qy = 0; qy < kQuadOrder; ++qy)
          local += rule.weight[qx] * rule.weight[qy] *
                   fn(Vec{mx + 0.5 * hx * rule.node[qx], my + 0.5 * hy * rule.node[qy]});
      acc += local * (0.25 * hx * hy);
    }
  }
  return acc;
}

template <typename F>
cdouble adaptive_box(const F& fn, const Vec& lo, const Vec& hi, const Vec& osc, double scale_hint) {
  int px = panel_count(osc.x, hi.x - lo.x);
  int py = panel_count(osc.y, hi.y - lo.y);
  cdouble prev = panel_gl_box(fn, lo, hi, px, py);
  for (int round = 0; round < 6; ++round) {
    px *= 2;
    py *= 2;
    const cdouble cur = panel_gl_box(fn, lo, hi, px, py);
    if (std::abs(cur - prev) <= 1e-9 * std::abs(cur) + 1e-14 * scale_hint) return cur;
    prev = cur;
  }
  throw PrecisionError("quadrature: box integral did not converge");
}

// Integral over a triangle via the Duffy transform.
template <typename F>
cdouble triangle_integral(const F& fn, const Vec& v0, const Vec& v1, const Vec& v2, double osc) {
  const double area =
      0.5 * std::abs((v1.x - v0.x) * (v2.y - v0.y) - (v2.x - v0.x) * (v1.y - v0.y));
  if (area == 0.0) return 0.0;
  const double diam = std::max({norm2(v1 - v0), norm2(v2 - v0), norm2(v2 - v1)});
  const int panels = panel_count(osc, diam);
  const QuadRule& rule = gauss_legendre(kQuadOrder);
  auto mapped = [&](double u, double v) {
    // square -> triangle, Jacobian u
    const double x = u;
    const double y = u * v;
    const Vec p{v0.x + x * (v1.x - v0.x) + y * (v2.x - v1.x),
                v0.y + x * (v1.y - v0.y) + y * (v2.y - v1.y)};
    return fn(p) * u;
  };
  cdouble prev = 0.0;
  int px = panels;
  for (int round = 0; round < 6; ++round) {
    cdouble acc = 0.0;
    const double h = 1.0 / px;
    for (int pi = 0; pi < px; ++pi)
      for (int pj = 0; pj < px; ++pj) {
        const double mu = (pi + 0.5) * h;
        const double mv = (pj + 0.5) * h;
        cdouble local = 0.0;
        for (int qx = 0; qx < kQuadOrder; ++qx)
          for (int qy = 0; qy < kQuadOrder; ++qy)
            local += rule.weight[qx] * rule.weight[qy] *
                     mapped(mu + 0.5 * h * rule.node[qx], mv + 0.5 * h * rule.node[qy]);
        acc += local * (0.25 * h * h);
      }
    acc *= 2.0 * area;
    if (round > 0 && std::abs(acc - prev) <= 1e-9 * std::abs(acc) + 1e-14 * area) return acc;
    prev = acc;
    px *= 2;
  }
  throw PrecisionError("quadrature: triangle integral did not converge");
}

cdouble support_twisted_profile(const SubstitutionRule& rule, const CylindricalFunction& f,
                                int type, const Vec& omega, const Support& region) {
  // integral of e[omega.s] psi_type(s) over `region` (subset of the support)
  auto integrand1 = [&](double x) {
    return unit_phase(omega.x * x) * eval_profile(rule, type, f.psi[type], Vec{x});
  };
  auto integrand2 = [&](const Vec& p) {
    return unit_phase(dot(omega, p)) * eval_profile(rule, type, f.psi[type], p);
  };
  if (rule.d == 1) {
    const double a = region.vertices[0].x, b = region.vertices[1].x;
    return adaptive_interval(integrand1, a, b, omega.x, std::max(1.0, b - a));
  }
  if (region.is_axis_box()) {
    Vec lo, hi;
    region.bbox(lo, hi);
    return adaptive_box(integrand2, lo, hi, omega, std::max(1.0, region.volume()));
  }
  const Vec c = region.centroid();
  cdouble acc = 0.0;
  const double osc = std::max(std::abs(omega.x), std::abs(omega.y));
  const std::size_t n = region.vertices.size();
  for (std::size_t i = 0; i < n; ++i)
    acc += triangle_integral(integrand2, c, region.vertices[i], region.vertices[(i + 1) % n], osc);
  return acc;
}

}  // namespace

std::complex<double> psi_hat(const SubstitutionRule& rule, const CylindricalFunction& f, int type,
                             const Vec& omega) {
  return support_twisted_profile(rule, f, type, omega, rule.prototiles[type].support);
}

double evaluate(const CylindricalFunction& f, const SubstitutionRule& rule, const PatchIndex& index,
                const Vec& s) {
  const int idx = index.locate(s);
  if (idx < 0) throw PreconditionError("evaluate: point outside the patch");
  const auto& tile = index.patch().tiles[idx];
  return eval_profile(rule, tile.type, f.psi[tile.type], s - tile.translation);
}

// ---------------------------------------------------------------------------
// Mean and projection
// ---------------------------------------------------------------------------

namespace {

std::vector<double> type_frequencies(const SubstitutionRule& rule) {
  // Perron right eigenvector of S, normalized so sum freq_i vol_i = 1.
  const algebraic::IntMatrix s = substitution_matrix(rule);
  const int m = s.rows();
  std::vector<double> x(m, 1.0);
  for (int iter = 0; iter < 5000; ++iter) {
    std::vector<double> y(m, 0.0);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) y[i] += s.at(i, j).get_d() * x[j];
    double norm = 0.0;
    for (double v : y) norm = std::max(norm, v);
    double shift = 0.0;
    for (int i = 0; i < m; ++i) {
      y[i] /= norm;
      shift = std::max(shift, std::abs(y[i] - x[i]));
    }
    x = y;
    if (shift < 1e-15) break;
  }
  double total = 0.0;
  for (int i = 0; i < m; ++i) total += x[i] * rule.prototiles[i].volume;
  for (double& v : x) v /= total;
  return x;
}

}  // namespace

double mean(const CylindricalFunction& f, const SubstitutionRule& rule) {
  const std::vector<double> freq = type_frequencies(rule);
  double acc = 0.0;
  for (int i = 0; i < rule.type_count(); ++i)
    acc += freq[i] * psi_hat(rule, f, i, Vec{}).real();
  return acc;
}

CylindricalFunction zero_mean_project(const CylindricalFunction& f, const SubstitutionRule& rule) {
  const double mu = mean(f, rule);
  const CylindricalFunction hat = hat_function(rule);
  const double muHat = mean(hat, rule);
  std::vector<Profile> psi = f.psi;
  for (int i = 0; i < rule.type_count(); ++i)
    psi[i].push_back({ProfileKind::Hat, -mu / muHat, {}, 0, 0});
  return make_cylindrical(rule, std::move(psi), true);
}

// ---------------------------------------------------------------------------
// Twisted integrals
// ---------------------------------------------------------------------------

std::complex<double> twisted_integral_over(const SubstitutionRule& rule,
                                           const CylindricalFunction& f, const Patch& cube_patch,
                                           const Vec& omega) {
  const int m = rule.type_count();
  std::vector<cdouble> hat(m);
  for (int i = 0; i < m; ++i) hat[i] = psi_hat(rule, f, i, omega);
  std::vector<cdouble> sums(m, 0.0);
  for (const auto& tile : cube_patch.tiles)
    sums[tile.type] += unit_phase(dot(omega, tile.translation));
  cdouble acc = 0.0;
  for (int i = 0; i < m; ++i) acc += hat[i] * sums[i];
  return acc;
}

std::complex<double> twisted_integral(const SubstitutionRule& rule, const CylindricalFunction& f,
                                      double R, const Vec& omega) {
  return twisted_integral_over(rule, f, tiling::patch_in_cube_auto(rule, R), omega);
}

std::complex<double> twisted_integral_oracle_over(const SubstitutionRule& rule,
                                                  const CylindricalFunction& f,
                                                  const Patch& cube_patch, const Vec& omega) {
  const PatchIndex index(rule, cube_patch);
  auto f_at = [&](const Vec& s) { return unit_phase(dot(omega, s)) * evaluate(f, rule, index, s); };
  cdouble acc = 0.0;
  for (const auto& tile : cube_patch.tiles) {
    const Support placed = rule.prototiles[tile.type].support.translated(tile.translation);
    if (rule.d == 1) {
      acc += adaptive_interval([&](double x) { return f_at(Vec{x}); }, placed.vertices[0].x,
                               placed.vertices[1].x, omega.x, std::max(1.0, placed.volume()));
    } else if (placed.is_axis_box()) {
      Vec lo, hi;
      placed.bbox(lo, hi);
      acc += adaptive_box(f_at, lo, hi, omega, std::max(1.0, placed.volume()));
    } else {
      const Vec c = placed.centroid();
      const double osc = std::max(std::abs(omega.x), std::abs(omega.y));
      const std::size_t n = placed.vertices.size();
      for (std::size_t i = 0; i < n; ++i)
        acc += triangle_integral(f_at, c, placed.vertices[i], placed.vertices[(i + 1) % n], osc);
    }
  }
  return acc;
}

std::complex<double> twisted_integral_oracle(const SubstitutionRule& rule,
                                             const CylindricalFunction& f, double R,
                                             const Vec& omega) {
  return twisted_integral_oracle_over(rule, f, tiling::patch_in_cube_auto(rule, R), omega);
}

std::complex<double> tile_twisted_quadrature(const SubstitutionRule& rule,
                                             const CylindricalFunction& f,
                                             const tiling::PlacedTile& tile, const Vec& omega) {
  const Support placed = rule.prototiles[tile.type].support.translated(tile.translation);
  auto f_abs = [&](const Vec& s) {
    return unit_phase(dot(omega, s)) * eval_profile(rule, tile.type, f.psi[tile.type], s - tile.translation);
  };
  if (rule.d == 1) {
    return adaptive_interval([&](double x) { return f_abs(Vec{x}); }, placed.vertices[0].x,
                             placed.vertices[1].x, omega.x, std::max(1.0, placed.volume()));
  }
  if (placed.is_axis_box()) {
    Vec lo, hi;
    placed.bbox(lo, hi);
    return adaptive_box(f_abs, lo, hi, omega, std::max(1.0, placed.volume()));
  }
  const Vec c = placed.centroid();
  const double osc = std::max(std::abs(omega.x), std::abs(omega.y));
  const std::size_t n = placed.vertices.size();
  cdouble acc = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    acc += triangle_integral(f_abs, c, placed.vertices[i], placed.vertices[(i + 1) % n], osc);
  return acc;
}

// ---------------------------------------------------------------------------
// Windowed integral with exact boundary clipping (used by the quadratic-mean
// estimator; complete tiles go through psi_hat, clipped tiles by quadrature).
// ---------------------------------------------------------------------------

namespace {

double max_tile_diameter(const SubstitutionRule& rule) {
  double d = 0.0;
  for (const Prototile& t : rule.prototiles) d = std::max(d, t.support.diameter());
  return d;
}

// ]C_T[ leaves a ragged fringe of width up to D_max uncovered; a patch over
// C_{half + D_max} covers C_half completely.
Patch covering_patch(const SubstitutionRule& rule, double half) {
  return tiling::patch_in_cube_auto(rule, half + max_tile_diameter(rule) + 1e-9);
}

cdouble window_integral(const SubstitutionRule& rule, const CylindricalFunction& f,
                        const PatchIndex& index, const std::vector<cdouble>& hat, const Vec& lo,
                        const Vec& hi, const Vec& omega) {
  const Patch& patch = index.patch();
  cdouble acc = 0.0;
  const double tol = 1e-12 * std::max({1.0, std::abs(hi.x), std::abs(hi.y)});
  for (std::size_t i = 0; i < patch.tiles.size(); ++i) {
    const auto& tile = patch.tiles[i];
    const Support placed = rule.prototiles[tile.type].support.translated(tile.translation);
    Vec plo, phi;
    placed.bbox(plo, phi);
    if (phi.x <= lo.x || plo.x >= hi.x) continue;
    if (rule.d == 2 && (phi.y <= lo.y || plo.y >= hi.y)) continue;
    if (placed.inside_box(lo, hi, tol)) {
      acc += unit_phase(dot(omega, tile.translation)) * hat[tile.type];
      continue;
    }
    const Support clipped = tiling::clip_to_box(placed, lo, hi);
    if (clipped.vertices.empty()) continue;
    const Support local = clipped.translated(-tile.translation);
    acc += unit_phase(dot(omega, tile.translation)) *
           support_twisted_profile(rule, f, tile.type, omega, local);
  }
  return acc;
}

}  // namespace

Estimate g_r_estimate(const SubstitutionRule& rule, const CylindricalFunction& f, double R,
                      const Vec& omega, int sample_count) {
  if (sample_count < 1) throw DimensionError("g_r_estimate: need at least one sample");
  const double T = 4.0 * R;
  const Patch ambient = covering_patch(rule, T);
  const PatchIndex index(rule, ambient);
  const int m = rule.type_count();
  std::vector<cdouble> hat(m);
  for (int i = 0; i < m; ++i) hat[i] = psi_hat(rule, f, i, omega);

  const double half = 0.5 * R;
  const double range = T - half - 1e-9 * T;
  const double denom = std::pow(R, rule.d);
  double sum = 0.0, sumSq = 0.0;
  for (int k = 0; k < sample_count; ++k) {
    Vec t;
    if (rule.d == 1) {
      t = Vec{-range + 2.0 * range * kronecker1(k)};
    } else {
      const Vec u = kronecker2(k);
      t = Vec{-range + 2.0 * range * u.x, -range + 2.0 * range * u.y};
    }
    const Vec lo{t.x - half, t.y - half};
    const Vec hi{t.x + half, t.y + half};
    const cdouble s = window_integral(rule, f, index, hat, lo, hi, omega);
    const double v = std::norm(s) / denom;
    sum += v;
    sumSq += v * v;
  }
  Estimate est;
  est.value = sum / sample_count;
  if (sample_count > 1) {
    const double var =
        std::max(0.0, (sumSq - sum * sum / sample_count) / (sample_count - 1.0));
    est.std_error = std::sqrt(var / sample_count);
  }
  return est;
}

SpectralEstimate sigma_box_bound(const SubstitutionRule& rule, const CylindricalFunction& f,
                                 const Vec& omega, double r, int sample_count) {
  if (r <= 0.0 || r > 0.5) throw DimensionError("sigma_box_bound: r must lie in (0, 1/2]");
  SpectralEstimate out;
  out.omega = omega;
  out.r = r;
  out.R = 0.5 / r;
  const Estimate g = g_r_estimate(rule, f, out.R, omega, sample_count);
  out.g_r = g.value;
  const double scale = std::pow(M_PI * M_PI / (4.0 * out.R), rule.d);
  out.bound = scale * g.value;
  out.std_error = scale * g.std_error;
  return out;
}

// ---------------------------------------------------------------------------
// Correlations
// ---------------------------------------------------------------------------

double correlation_pitch(const SubstitutionRule& rule) {
  double inscribed = 1e300;
  for (const Prototile& t : rule.prototiles)
    inscribed = std::min(inscribed, t.support.inscribed_diameter());
  const double target = 0.5 * inscribed / 4.0;  // inradius / 4
  return std::pow(2.0, std::floor(std::log2(target)));
}

std::complex<double> correlation(const SubstitutionRule& rule, const CylindricalFunction& f,
                                 const CylindricalFunction& g, const Vec& s, double T) {
  const double h = correlation_pitch(rule);
  const long tu = std::lround(T / h);
  if (tu < 1) throw DimensionError("correlation: T too small for the quadrature pitch");
  const double cover = T + norm_inf(s) + 2.0 * h;
  const Patch ambient = covering_patch(rule, cover);
  const PatchIndex index(rule, ambient);
  const double vol = std::pow(2.0 * tu * h, rule.d);
  cdouble acc = 0.0;
  if (rule.d == 1) {
    for (long j = 0; j < 2 * tu; ++j) {
      const double t = (j + 0.5) * h - tu * h;
      acc += evaluate(f, rule, index, Vec{s.x + t}) * evaluate(g, rule, index, Vec{t});
    }
    return acc * h / vol;
  }
  for (long jx = 0; jx < 2 * tu; ++jx)
    for (long jy = 0; jy < 2 * tu; ++jy) {
      const Vec t{(jx + 0.5) * h - tu * h, (jy + 0.5) * h - tu * h};
      acc += evaluate(f, rule, index, s + t) * evaluate(g, rule, index, t);
    }
  return acc * h * h / vol;
}

namespace {

// Circular cross-correlation C[k] = sum_j A[k+j] conj(B[j]) via FFT; B is
// zero-padded to A's length, valid for lags 0..(NA-NB).
std::vector<cdouble> cross_correlate(const std::vector<cdouble>& a, const std::vector<cdouble>& b,
                                     int n1, int n2 /* 1 for d=1 */) {
  const std::size_t n = a.size();
  // caller pre-pads b into the full (n1, n2) grid
  std::vector<cdouble> bPad(n, 0.0);
  std::copy(b.begin(), b.end(), bPad.begin());

  std::vector<cdouble> fa(n), fb(n), prod(n), out(n);
  fftw_plan planA = fftw_plan_dft_2d(n1, n2, reinterpret_cast<fftw_complex*>(const_cast<cdouble*>(a.data())),
                                     reinterpret_cast<fftw_complex*>(fa.data()), FFTW_FORWARD,
                                     FFTW_ESTIMATE | FFTW_PRESERVE_INPUT);
  fftw_execute(planA);
  fftw_destroy_plan(planA);
  fftw_plan planB = fftw_plan_dft_2d(n1, n2, reinterpret_cast<fftw_complex*>(bPad.data()),
                                     reinterpret_cast<fftw_complex*>(fb.data()), FFTW_FORWARD,
                                     FFTW_ESTIMATE);
  fftw_execute(planB);
  fftw_destroy_plan(planB);
  for (std::size_t i = 0; i < n; ++i) prod[i] = fa[i] * std::conj(fb[i]);
  fftw_plan planC = fftw_plan_dft_2d(n1, n2, reinterpret_cast<fftw_complex*>(prod.data()),
                                     reinterpret_cast<fftw_complex*>(out.data()), FFTW_BACKWARD,
                                     FFTW_ESTIMATE);
  fftw_execute(planC);
  fftw_destroy_plan(planC);
  const double scale = 1.0 / static_cast<double>(n);
  for (auto& z : out) z *= scale;
  return out;
}

}  // namespace

double cesaro_correlation(const SubstitutionRule& rule, const CylindricalFunction& f,
                          const CylindricalFunction& g, double R, double T) {
  const double h = correlation_pitch(rule);
  if (T <= 0.0) T = std::max(R / 4.0, 32.0 * h);
  const long ru = std::lround(R / h);
  const long tu = std::max<long>(1, std::lround(T / h));
  if (ru < 1) throw DimensionError("cesaro_correlation: R too small for the quadrature pitch");
  const double rEff = ru * h;
  const double tEff = tu * h;

  const double cover = tEff + rEff + 2.0 * h;
  const Patch ambient = covering_patch(rule, cover);
  const PatchIndex index(rule, ambient);

  const long na = 2 * (tu + ru);  // f samples per axis, offset grid u_i = (i+0.5)h - (T+R)
  const long nb = 2 * tu;         // g samples per axis
  const double tVol = std::pow(2.0 * tEff, rule.d);

  if (rule.d == 1) {
    std::vector<cdouble> a(static_cast<std::size_t>(na));
    for (long i = 0; i < na; ++i)
      a[i] = evaluate(f, rule, index, Vec{(i + 0.5) * h - (tEff + rEff)});
    std::vector<cdouble> b(static_cast<std::size_t>(na), 0.0);
    for (long j = 0; j < nb; ++j) b[j] = evaluate(g, rule, index, Vec{(j + 0.5) * h - tEff});
    const std::vector<cdouble> corr = cross_correlate(a, b, 1, static_cast<int>(na));
    // corr[k] * h / (2T) approximates <f o phi_s, g> at s = k h - R
    double acc = 0.0;
    for (long k = 0; k <= 2 * ru; ++k) {
      const double w = (k == 0 || k == 2 * ru) ? 0.5 : 1.0;
      acc += w * std::norm(corr[k] * (h / tVol));
    }
    return acc * h / rEff;
  }

  const long side = na;
  std::vector<cdouble> a(static_cast<std::size_t>(side) * side, 0.0);
  for (long ix = 0; ix < side; ++ix)
    for (long iy = 0; iy < side; ++iy)
      a[static_cast<std::size_t>(ix) * side + iy] = evaluate(
          f, rule, index,
          Vec{(ix + 0.5) * h - (tEff + rEff), (iy + 0.5) * h - (tEff + rEff)});
  std::vector<cdouble> b(static_cast<std::size_t>(side) * side, 0.0);
  for (long jx = 0; jx < nb; ++jx)
    for (long jy = 0; jy < nb; ++jy)
      b[static_cast<std::size_t>(jx) * side + jy] =
          evaluate(g, rule, index, Vec{(jx + 0.5) * h - tEff, (jy + 0.5) * h - tEff});
  const std::vector<cdouble> corr =
      cross_correlate(a, b, static_cast<int>(side), static_cast<int>(side));
  double acc = 0.0;
  for (long kx = 0; kx <= 2 * ru; ++kx)
    for (long ky = 0; ky <= 2 * ru; ++ky) {
      const double w = ((kx == 0 || kx == 2 * ru) ? 0.5 : 1.0) *
                       ((ky == 0 || ky == 2 * ru) ? 0.5 : 1.0);
      acc += w * std::norm(corr[static_cast<std::size_t>(kx) * side + ky] * (h * h / tVol));
    }
  return acc * h * h / (rEff * rEff);
}

}  // namespace aps::birkhoff
