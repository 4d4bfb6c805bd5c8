#include "aps/tiling.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace aps::tiling {

// ---------------------------------------------------------------------------
// Support geometry
// ---------------------------------------------------------------------------

double Support::volume() const {
  if (d == 1) return vertices[1].x - vertices[0].x;
  double area = 0.0;
  const std::size_t n = vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec& p = vertices[i];
    const Vec& q = vertices[(i + 1) % n];
    area += p.x * q.y - q.x * p.y;
  }
  return 0.5 * area;
}

double Support::diameter() const {
  double best = 0.0;
  for (std::size_t i = 0; i < vertices.size(); ++i)
    for (std::size_t j = i + 1; j < vertices.size(); ++j)
      best = std::max(best, norm2(vertices[i] - vertices[j]));
  return best;
}

Vec Support::centroid() const {
  Vec c;
  for (const Vec& v : vertices) c = c + v;
  return c * (1.0 / static_cast<double>(vertices.size()));
}

bool Support::is_axis_box() const {
  if (d == 1) return true;
  if (vertices.size() != 4) return false;
  Vec lo, hi;
  bbox(lo, hi);
  for (const Vec& v : vertices) {
    const bool onX = std::abs(v.x - lo.x) < 1e-12 || std::abs(v.x - hi.x) < 1e-12;
    const bool onY = std::abs(v.y - lo.y) < 1e-12 || std::abs(v.y - hi.y) < 1e-12;
    if (!onX || !onY) return false;
  }
  return true;
}

double Support::inscribed_diameter() const {
  if (d == 1) return vertices[1].x - vertices[0].x;
  if (is_axis_box()) {
    Vec lo, hi;
    bbox(lo, hi);
    return std::min(hi.x - lo.x, hi.y - lo.y);
  }
  // Lower bound: ball centered at the centroid.
  const Vec c = centroid();
  double r = 1e300;
  const std::size_t n = vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec a = vertices[i];
    const Vec b = vertices[(i + 1) % n];
    const Vec e = b - a;
    const double len = norm2(e);
    if (len == 0) continue;
    // distance from c to the edge line
    r = std::min(r, std::abs(e.x * (c.y - a.y) - e.y * (c.x - a.x)) / len);
  }
  return 2.0 * r;
}

void Support::bbox(Vec& lo, Vec& hi) const {
  lo = hi = vertices[0];
  for (const Vec& v : vertices) {
    lo.x = std::min(lo.x, v.x);
    lo.y = std::min(lo.y, v.y);
    hi.x = std::max(hi.x, v.x);
    hi.y = std::max(hi.y, v.y);
  }
}

bool Support::contains(const Vec& p, double tol) const {
  if (d == 1) return p.x >= vertices[0].x - tol && p.x <= vertices[1].x + tol;
  const std::size_t n = vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec a = vertices[i];
    const Vec b = vertices[(i + 1) % n];
    const double cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
    if (cross < -tol * std::max(1.0, norm2(b - a))) return false;
  }
  return true;
}

bool Support::strictly_inside(const Vec& p, double margin) const {
  if (d == 1) return p.x > vertices[0].x + margin && p.x < vertices[1].x - margin;
  const std::size_t n = vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec a = vertices[i];
    const Vec b = vertices[(i + 1) % n];
    const double len = norm2(b - a);
    if (len == 0) continue;
    const double cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
    if (cross / len <= margin) return false;
  }
  return true;
}

bool Support::inside_box(const Vec& lo, const Vec& hi, double tol) const {
  for (const Vec& v : vertices) {
    if (v.x < lo.x - tol || v.x > hi.x + tol) return false;
    if (d == 2 && (v.y < lo.y - tol || v.y > hi.y + tol)) return false;
  }
  return true;
}

Support Support::transformed(const Mat& m) const {
  Support out;
  out.d = d;
  out.vertices.reserve(vertices.size());
  for (const Vec& v : vertices) out.vertices.push_back(m.apply(v));
  if (d == 1 && out.vertices[0].x > out.vertices[1].x) std::swap(out.vertices[0], out.vertices[1]);
  if (d == 2 && out.volume() < 0) std::reverse(out.vertices.begin(), out.vertices.end());
  return out;
}

Support Support::translated(const Vec& t) const {
  Support out = *this;
  for (Vec& v : out.vertices) v = v + t;
  return out;
}

double support_distance(const Support& a, const Support& b) {
  if (a.d == 1) {
    const double lo = std::max(a.vertices[0].x, b.vertices[0].x);
    const double hi = std::min(a.vertices[1].x, b.vertices[1].x);
    return std::max(0.0, lo - hi);
  }
  // Separating-axis test over both polygons' edge normals.
  auto project = [](const Support& s, const Vec& axis, double& lo, double& hi) {
    lo = 1e300;
    hi = -1e300;
    for (const Vec& v : s.vertices) {
      const double t = dot(v, axis);
      lo = std::min(lo, t);
      hi = std::max(hi, t);
    }
  };
  double gap = 0.0;
  for (const Support* s : {&a, &b}) {
    const std::size_t n = s->vertices.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec e = s->vertices[(i + 1) % n] - s->vertices[i];
      const double len = norm2(e);
      if (len == 0) continue;
      const Vec axis{-e.y / len, e.x / len};
      double alo, ahi, blo, bhi;
      project(a, axis, alo, ahi);
      project(b, axis, blo, bhi);
      gap = std::max(gap, std::max(blo - ahi, alo - bhi));
    }
  }
  return std::max(0.0, gap);
}

Support clip_to_box(const Support& s, const Vec& lo, const Vec& hi) {
  Support out;
  out.d = s.d;
  if (s.d == 1) {
    const double a = std::max(s.vertices[0].x, lo.x);
    const double b = std::min(s.vertices[1].x, hi.x);
    if (a < b) out.vertices = {Vec{a}, Vec{b}};
    return out;
  }
  // Sutherland-Hodgman against the four box half-planes.
  std::vector<Vec> poly = s.vertices;
  auto clip = [&](auto inside, auto intersect) {
    std::vector<Vec> next;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n && n > 0; ++i) {
      const Vec cur = poly[i];
      const Vec prev = poly[(i + n - 1) % n];
      const bool curIn = inside(cur);
      const bool prevIn = inside(prev);
      if (curIn) {
        if (!prevIn) next.push_back(intersect(prev, cur));
        next.push_back(cur);
      } else if (prevIn) {
        next.push_back(intersect(prev, cur));
      }
    }
    poly = std::move(next);
  };
  auto lerpAtX = [](const Vec& p, const Vec& q, double x) {
    const double t = (x - p.x) / (q.x - p.x);
    return Vec{x, p.y + t * (q.y - p.y)};
  };
  auto lerpAtY = [](const Vec& p, const Vec& q, double y) {
    const double t = (y - p.y) / (q.y - p.y);
    return Vec{p.x + t * (q.x - p.x), y};
  };
  clip([&](const Vec& v) { return v.x >= lo.x; }, [&](const Vec& p, const Vec& q) { return lerpAtX(p, q, lo.x); });
  clip([&](const Vec& v) { return v.x <= hi.x; }, [&](const Vec& p, const Vec& q) { return lerpAtX(p, q, hi.x); });
  clip([&](const Vec& v) { return v.y >= lo.y; }, [&](const Vec& p, const Vec& q) { return lerpAtY(p, q, lo.y); });
  clip([&](const Vec& v) { return v.y <= hi.y; }, [&](const Vec& p, const Vec& q) { return lerpAtY(p, q, hi.y); });
  if (poly.size() >= 3) out.vertices = std::move(poly);
  return out;
}

// ---------------------------------------------------------------------------
// Spectral helpers on the expansion
// ---------------------------------------------------------------------------

namespace {

std::vector<std::complex<double>> expansion_eigenvalues(const Mat& L) {
  if (L.d == 1) return {std::complex<double>(L.a[0][0], 0.0)};
  const double tr = L.a[0][0] + L.a[1][1];
  const double det = L.det();
  const std::complex<double> disc = std::sqrt(std::complex<double>(tr * tr - 4.0 * det, 0.0));
  return {0.5 * (tr - disc), 0.5 * (tr + disc)};
}

double perron_eigenvalue(const algebraic::IntMatrix& s, std::vector<double>* vec_out = nullptr) {
  const int m = s.rows();
  std::vector<double> x(m, 1.0);
  double lambda = 0.0;
  for (int iter = 0; iter < 2000; ++iter) {
    std::vector<double> y(m, 0.0);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) y[i] += s.at(i, j).get_d() * x[j];
    double norm = 0.0;
    for (double v : y) norm = std::max(norm, std::abs(v));
    if (norm == 0.0) break;
    for (double& v : y) v /= norm;
    double shift = 0.0;
    for (int i = 0; i < m; ++i) shift = std::max(shift, std::abs(y[i] - x[i]));
    x = y;
    lambda = norm;
    if (shift < 1e-15) break;
  }
  if (vec_out) *vec_out = x;
  return lambda;
}

}  // namespace

// ---------------------------------------------------------------------------
// validate / substitution_matrix / is_primitive
// ---------------------------------------------------------------------------

algebraic::IntMatrix substitution_matrix(const SubstitutionRule& rule) {
  const int m = rule.type_count();
  algebraic::IntMatrix s(m, m);
  for (int j = 0; j < m; ++j)
    for (const Child& c : rule.children[j]) s.at(c.type, j) += 1;
  return s;
}

PrimitivityResult is_primitive(const algebraic::IntMatrix& s) {
  const int m = s.rows();
  if (m != s.cols()) throw DimensionError("is_primitive: matrix not square");
  const int maxExp = (m - 1) * (m - 1) + 1;
  algebraic::IntMatrix power = s;
  for (int e = 1; e <= maxExp; ++e) {
    bool positive = true;
    for (int i = 0; i < m && positive; ++i)
      for (int j = 0; j < m && positive; ++j)
        if (power.at(i, j) <= 0) positive = false;
    if (positive) return {true, e};
    if (e < maxExp) power = power.mul(s);
  }
  return {false, 0};
}

GeometryStats validate(const SubstitutionRule& rule) {
  std::vector<std::string> issues;
  const int m = rule.type_count();
  if (rule.d != 1 && rule.d != 2) issues.push_back("dimension must be 1 or 2");
  if (m == 0) issues.push_back("no prototiles");
  if (static_cast<int>(rule.children.size()) != m) issues.push_back("children list size mismatch");
  if (rule.seed < 0 || rule.seed >= m) issues.push_back("seed out of range");
  if (!issues.empty()) throw ValidationError("malformed rule", issues);

  for (int i = 0; i < m; ++i) {
    const Prototile& t = rule.prototiles[i];
    std::ostringstream tag;
    tag << "prototile " << i;
    if (t.support.d != rule.d) issues.push_back(tag.str() + ": support dimension mismatch");
    if (rule.d == 1 && t.support.vertices.size() != 2)
      issues.push_back(tag.str() + ": interval needs two endpoints");
    if (rule.d == 2 && t.support.vertices.size() < 3)
      issues.push_back(tag.str() + ": polygon needs >= 3 vertices");
    if (!issues.empty()) throw ValidationError("malformed prototile", issues);
    if (t.support.volume() <= 0) issues.push_back(tag.str() + ": nonpositive volume");
    if (rule.d == 2) {
      // convexity, CCW
      const auto& v = t.support.vertices;
      const std::size_t n = v.size();
      for (std::size_t k = 0; k < n; ++k) {
        const Vec a = v[k], b = v[(k + 1) % n], c = v[(k + 2) % n];
        const double cross = (b.x - a.x) * (c.y - b.y) - (b.y - a.y) * (c.x - b.x);
        if (cross < -1e-12 * t.support.diameter()) {
          issues.push_back(tag.str() + ": polygon not convex CCW");
          break;
        }
      }
    }
    if (!t.support.contains(t.puncture, 1e-9 * std::max(1.0, t.support.diameter())))
      issues.push_back(tag.str() + ": puncture outside closed support");
  }

  // Expansiveness
  for (const auto& ev : expansion_eigenvalues(rule.expansion))
    if (std::abs(ev) <= 1.0 + 1e-12) issues.push_back("expansion eigenvalue inside closed unit disk");

  // Volume identity per parent, child supports inside L(supp), interior disjointness.
  const double det = std::abs(rule.expansion.det());
  for (int j = 0; j < m; ++j) {
    const Support parent = rule.prototiles[j].support.transformed(rule.expansion);
    double childVol = 0.0;
    for (std::size_t ci = 0; ci < rule.children[j].size(); ++ci) {
      const Child& c = rule.children[j][ci];
      if (c.type < 0 || c.type >= m) {
        std::ostringstream msg;
        msg << "parent " << j << ": child type out of range";
        issues.push_back(msg.str());
        continue;
      }
      childVol += rule.prototiles[c.type].volume;
      const Support placed = rule.prototiles[c.type].support.translated(c.displacement);
      Vec plo, phi;
      placed.bbox(plo, phi);
      const double tol = 1e-7 * std::max(1.0, parent.diameter());
      for (const Vec& v : placed.vertices) {
        if (!parent.contains(v, tol)) {
          std::ostringstream msg;
          msg << "parent " << j << " child " << ci << ": support leaves L(supp)";
          issues.push_back(msg.str());
          break;
        }
      }
    }
    const double target = det * rule.prototiles[j].volume;
    if (std::abs(childVol - target) > 1e-9 * std::max(1.0, std::abs(target))) {
      std::ostringstream msg;
      msg << "parent " << j << ": volume identity violated (children " << childVol << " vs det*vol "
          << target << ")";
      issues.push_back(msg.str());
    }
    // Sampled interior-disjointness, backed by the exact volume identity.
    for (std::size_t ci = 0; ci < rule.children[j].size(); ++ci) {
      for (std::size_t cj = ci + 1; cj < rule.children[j].size(); ++cj) {
        const Child& a = rule.children[j][ci];
        const Child& b = rule.children[j][cj];
        const Support sa = rule.prototiles[a.type].support.translated(a.displacement);
        const Support sb = rule.prototiles[b.type].support.translated(b.displacement);
        if (support_distance(sa, sb) > 0) continue;
        Vec lo, hi;
        sa.bbox(lo, hi);
        const double margin = 1e-9 * std::max(1.0, sa.diameter());
        int hits = 0;
        for (int k = 0; k < 256; ++k) {
          Vec p;
          if (rule.d == 1) {
            p = Vec{lo.x + (hi.x - lo.x) * kronecker1(k)};
          } else {
            const Vec u = kronecker2(k);
            p = Vec{lo.x + (hi.x - lo.x) * u.x, lo.y + (hi.y - lo.y) * u.y};
          }
          if (!sa.strictly_inside(p, margin)) continue;
          if (sb.strictly_inside(p, margin)) {
            ++hits;
            break;
          }
        }
        if (hits > 0) {
          std::ostringstream msg;
          msg << "parent " << j << ": children " << ci << " and " << cj << " overlap in the interior";
          issues.push_back(msg.str());
        }
      }
    }
  }

  const algebraic::IntMatrix s = substitution_matrix(rule);
  const PrimitivityResult prim = is_primitive(s);
  if (!prim.primitive) issues.push_back("substitution matrix not primitive");

  GeometryStats stats;
  stats.theta = perron_eigenvalue(s);
  if (std::abs(stats.theta - det) > 1e-9 * std::max(1.0, stats.theta))
    issues.push_back("Perron eigenvalue of S does not match det(L)");

  if (!issues.empty()) throw ValidationError("rule validation failed", issues);

  stats.d_max = 0.0;
  stats.d_min = 1e300;
  stats.v_min = 1e300;
  for (const Prototile& t : rule.prototiles) {
    stats.d_max = std::max(stats.d_max, t.support.diameter());
    stats.d_min = std::min(stats.d_min, t.support.inscribed_diameter());
    stats.v_min = std::min(stats.v_min, t.volume);
  }
  return stats;
}

// ---------------------------------------------------------------------------
// Supertiles
// ---------------------------------------------------------------------------

mpz_class supertile_count(const SubstitutionRule& rule, int type, int n) {
  const int m = rule.type_count();
  algebraic::IntMatrix power = algebraic::IntMatrix::identity(m);
  const algebraic::IntMatrix s = substitution_matrix(rule);
  for (int k = 0; k < n; ++k) power = power.mul(s);
  mpz_class total = 0;
  for (int i = 0; i < m; ++i) total += power.at(i, type);
  return total;
}

namespace {

struct SupertileBuilder {
  const SubstitutionRule& rule;
  std::vector<Mat> l_pow;  // L^0 .. L^n
  Patch out;
  bool provenance;

  void expand(int type, int level, const Vec& translation, std::vector<int>& path) {
    if (level == 0) {
      if (provenance) {
        for (int k = 0; k < static_cast<int>(path.size()); ++k) {
          // nothing to do per tile: ranges recorded on instance close
        }
        out.src_index.push_back(static_cast<int>(out.tiles.size()));
      }
      out.tiles.push_back({type, translation});
      return;
    }
    int instanceIdx = -1;
    if (provenance) {
      auto& levelList = out.instances[level - 1];
      instanceIdx = static_cast<int>(levelList.size());
      levelList.push_back({type, translation, static_cast<int>(out.tiles.size()), 0});
    }
    for (const Child& c : rule.children[type]) {
      const Vec disp = l_pow[level - 1].apply(c.displacement);
      expand(c.type, level - 1, translation + disp, path);
    }
    if (provenance) out.instances[level - 1][instanceIdx].end = static_cast<int>(out.tiles.size());
  }
};

}  // namespace

Patch supertile(const SubstitutionRule& rule, int type, int n, bool with_provenance,
                std::size_t tile_budget) {
  if (type < 0 || type >= rule.type_count()) throw DimensionError("supertile: type out of range");
  if (n < 0) throw DimensionError("supertile: negative order");
  const mpz_class count = supertile_count(rule, type, n);
  if (count > static_cast<unsigned long>(tile_budget))
    throw ResourceError("supertile: tile count " + count.get_str() + " exceeds budget");

  SupertileBuilder builder{rule, {}, {}, with_provenance};
  builder.l_pow.resize(n + 1);
  builder.l_pow[0] = Mat::identity(rule.d);
  for (int k = 1; k <= n; ++k) builder.l_pow[k] = rule.expansion.mul(builder.l_pow[k - 1]);
  builder.out.tiles.reserve(count.get_ui());
  if (with_provenance) {
    builder.out.provenance_levels = n;
    builder.out.instances.resize(n);
  }
  std::vector<int> path;
  builder.expand(type, n, Vec{}, path);
  return builder.out;
}

SubstitutionRule rule_power(const SubstitutionRule& rule, int p) {
  if (p < 1) throw DimensionError("rule_power: power must be >= 1");
  if (p == 1) return rule;
  SubstitutionRule out = rule;
  out.name = rule.name + "^" + std::to_string(p);
  out.expansion = rule.expansion.pow(p);
  out.children.assign(rule.type_count(), {});
  for (int j = 0; j < rule.type_count(); ++j) {
    const Patch patch = supertile(rule, j, p);
    out.children[j].reserve(patch.tiles.size());
    for (const PlacedTile& t : patch.tiles) out.children[j].push_back({t.type, t.translation});
  }
  return out;
}

std::vector<Vec> control_points(const SubstitutionRule& rule, const std::vector<int>& choice) {
  const int m = rule.type_count();
  if (static_cast<int>(choice.size()) != m) throw DimensionError("control_points: choice size mismatch");
  for (int j = 0; j < m; ++j)
    if (choice[j] < 0 || choice[j] >= static_cast<int>(rule.children[j].size()))
      throw DimensionError("control_points: child index out of range");
  const Mat lInv = rule.expansion.inverse();
  std::vector<Vec> p(m);
  // p_j = L^{-1}(s*(j) + p_{t(j)}); L^{-1} is a contraction, iterate to fixpoint.
  for (int iter = 0; iter < 400; ++iter) {
    double shift = 0.0;
    std::vector<Vec> next(m);
    for (int j = 0; j < m; ++j) {
      const Child& c = rule.children[j][choice[j]];
      next[j] = lInv.apply(c.displacement + p[c.type]);
      shift = std::max(shift, norm_inf(next[j] - p[j]));
    }
    p = std::move(next);
    if (shift < 1e-16) break;
  }
  for (int j = 0; j < m; ++j) {
    const Child& c = rule.children[j][choice[j]];
    const Vec residual = rule.expansion.apply(p[j]) - (c.displacement + p[c.type]);
    if (norm_inf(residual) > 1e-10)
      throw PrecisionError("control_points: fixed point iteration did not converge");
  }
  return p;
}

FixedPointConfig fixed_point_config(const SubstitutionRule& rule, int max_power) {
  for (int p = 1; p <= max_power; ++p) {
    SubstitutionRule powered = rule_power(rule, p);
    const Prototile& seedTile = powered.prototiles[powered.seed];
    const Mat shifted = [&] {
      Mat m = powered.expansion;
      for (int i = 0; i < m.d; ++i) m.a[i][i] -= 1.0;
      return m;
    }();
    int bestChild = -1;
    double bestDist = 0.0;
    Vec bestPoint;
    const auto& kids = powered.children[powered.seed];
    for (std::size_t ci = 0; ci < kids.size(); ++ci) {
      if (kids[ci].type != powered.seed) continue;
      // candidate control point solves (L^p - I) x = s
      const Vec x = shifted.inverse().apply(kids[ci].displacement);
      // distance to the boundary
      double dist = -1.0;
      if (rule.d == 1) {
        dist = std::min(x.x - seedTile.support.vertices[0].x, seedTile.support.vertices[1].x - x.x);
      } else {
        dist = 1e300;
        const auto& v = seedTile.support.vertices;
        for (std::size_t k = 0; k < v.size(); ++k) {
          const Vec a = v[k], b = v[(k + 1) % v.size()];
          const double len = norm2(b - a);
          if (len == 0) continue;
          dist = std::min(dist, ((b.x - a.x) * (x.y - a.y) - (b.y - a.y) * (x.x - a.x)) / len);
        }
      }
      if (dist > bestDist + 1e-12) {
        bestDist = dist;
        bestChild = static_cast<int>(ci);
        bestPoint = x;
      }
    }
    if (bestChild < 0 || bestDist < 1e-6 * seedTile.support.diameter()) continue;

    FixedPointConfig cfg;
    cfg.power = p;
    cfg.choice.assign(powered.type_count(), 0);
    cfg.choice[powered.seed] = bestChild;
    cfg.powered = std::move(powered);
    cfg.control = control_points(cfg.powered, cfg.choice);
    // The seed control point must agree with the direct solve.
    if (norm_inf(cfg.control[cfg.powered.seed] - bestPoint) > 1e-9)
      throw PrecisionError("fixed_point_config: control point mismatch");
    return cfg;
  }
  throw PreconditionError("fixed_point_config: no self-nested interior control point up to power " +
                          std::to_string(max_power));
}

namespace {

// Support of the recentered order-n supertile of the fixed-point config.
Support recentered_support(const FixedPointConfig& cfg, int n) {
  const SubstitutionRule& r = cfg.powered;
  Support s = r.prototiles[r.seed].support.translated(-cfg.control[r.seed]);
  Mat power = Mat::identity(r.d);
  for (int k = 0; k < n; ++k) power = power.mul(r.expansion);
  return s.transformed(power);
}

bool covers_cube(const FixedPointConfig& cfg, int n, double R) {
  const Support s = recentered_support(cfg, n);
  const double tol = 1e-9 * std::max(1.0, R);
  if (cfg.powered.d == 1)
    return s.vertices[0].x <= -R - tol && s.vertices[1].x >= R + tol;
  for (const Vec corner : {Vec{-R, -R}, Vec{R, -R}, Vec{R, R}, Vec{-R, R}})
    if (!s.contains(corner, -tol)) return false;
  return true;
}

}  // namespace

Patch patch_in_cube(const SubstitutionRule& rule, int n, double R) {
  const FixedPointConfig cfg = fixed_point_config(rule);
  if (!covers_cube(cfg, n, R)) {
    int minimal = n + 1;
    while (minimal < 64 && !covers_cube(cfg, minimal, R)) ++minimal;
    throw CoverageError("patch_in_cube: order does not cover the cube", minimal);
  }
  Patch big = supertile(cfg.powered, cfg.powered.seed, n, /*with_provenance=*/true);
  Mat power = Mat::identity(rule.d);
  for (int k = 0; k < n; ++k) power = power.mul(cfg.powered.expansion);
  const Vec shift = -power.apply(cfg.control[cfg.powered.seed]);

  const double tol = 1e-9 * std::max(1.0, R);
  const Vec lo{-R, -R}, hi{R, R};
  Patch out;
  out.provenance_levels = big.provenance_levels;
  out.instances = big.instances;
  for (auto& level : out.instances)
    for (InstanceRange& inst : level) inst.translation = inst.translation + shift;
  for (std::size_t i = 0; i < big.tiles.size(); ++i) {
    const PlacedTile tile{big.tiles[i].type, big.tiles[i].translation + shift};
    const Support placed = rule.prototiles[tile.type].support.translated(tile.translation);
    if (!placed.inside_box(lo, hi, tol)) continue;
    out.tiles.push_back(tile);
    out.src_index.push_back(static_cast<int>(i));
  }
  return out;
}

Patch patch_in_cube_auto(const SubstitutionRule& rule, double R, FixedPointConfig* config_out,
                         int* order_out) {
  const FixedPointConfig cfg = fixed_point_config(rule);
  int n = 0;
  while (n < 64 && !covers_cube(cfg, n, R)) ++n;
  if (n >= 64) throw CoverageError("patch_in_cube_auto: cannot cover cube", -1);
  if (config_out) *config_out = cfg;
  if (order_out) *order_out = n;
  return patch_in_cube(rule, n, R);
}

// ---------------------------------------------------------------------------
// Tower decomposition
// ---------------------------------------------------------------------------

std::vector<TowerLayer> tower_decompose(const SubstitutionRule& rule, const Patch& patch) {
  if (!patch.has_provenance()) throw Error("tower_decompose: patch lacks supertile genealogy");
  const int n = patch.provenance_levels;

  // For each generator-supertile tile index, the patch tile holding it (or -1).
  std::map<int, int> present;
  for (std::size_t i = 0; i < patch.tiles.size(); ++i) present[patch.src_index[i]] = static_cast<int>(i);
  std::vector<bool> claimed(patch.tiles.size(), false);

  std::vector<TowerLayer> layers(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) layers[k].order = k;

  for (int k = n; k >= 1; --k) {
    for (const InstanceRange& inst : patch.instances[k - 1]) {
      bool full = true;
      std::vector<int> members;
      members.reserve(inst.end - inst.begin);
      for (int src = inst.begin; src < inst.end && full; ++src) {
        auto it = present.find(src);
        if (it == present.end() || claimed[it->second])
          full = false;
        else
          members.push_back(it->second);
      }
      if (!full) continue;
      for (int idx : members) claimed[idx] = true;
      layers[k].supertiles.push_back({inst.type, inst.translation});
      layers[k].tile_indices.push_back(std::move(members));
    }
  }
  for (std::size_t i = 0; i < patch.tiles.size(); ++i) {
    if (claimed[i]) continue;
    layers[0].supertiles.push_back(patch.tiles[i]);
    layers[0].tile_indices.push_back({static_cast<int>(i)});
  }
  return layers;
}

// ---------------------------------------------------------------------------
// Adjacency differences / return vectors / generators
// ---------------------------------------------------------------------------

namespace {

double patch_diameter(const SubstitutionRule& rule, const Patch& patch) {
  Vec lo{1e300, 1e300}, hi{-1e300, -1e300};
  for (const PlacedTile& t : patch.tiles) {
    Vec plo, phi;
    rule.prototiles[t.type].support.translated(t.translation).bbox(plo, phi);
    lo.x = std::min(lo.x, plo.x);
    lo.y = std::min(lo.y, plo.y);
    hi.x = std::max(hi.x, phi.x);
    hi.y = std::max(hi.y, phi.y);
  }
  return std::max(hi.x - lo.x, hi.y - lo.y);
}

void dedup_insert(std::vector<Vec>& out, const Vec& v, double tol) {
  for (const Vec& w : out)
    if (vec_close(v, w, tol)) return;
  out.push_back(v);
}

}  // namespace

std::vector<Vec> adjacency_differences(const SubstitutionRule& rule, const Patch& patch) {
  std::vector<Vec> out;
  if (patch.tiles.size() < 2) return out;
  const double tol = 1e-9 * std::max(1.0, patch_diameter(rule, patch));
  std::vector<Support> placed;
  placed.reserve(patch.tiles.size());
  for (const PlacedTile& t : patch.tiles)
    placed.push_back(rule.prototiles[t.type].support.translated(t.translation));
  for (std::size_t i = 0; i < patch.tiles.size(); ++i) {
    for (std::size_t j = 0; j < patch.tiles.size(); ++j) {
      if (i == j) continue;
      if (support_distance(placed[i], placed[j]) > 1e-9) continue;
      const Vec pi = patch.tiles[i].translation + rule.prototiles[patch.tiles[i].type].puncture;
      const Vec pj = patch.tiles[j].translation + rule.prototiles[patch.tiles[j].type].puncture;
      dedup_insert(out, pi - pj, tol);
    }
  }
  std::sort(out.begin(), out.end(), [tol](const Vec& a, const Vec& b) { return vec_less(a, b, 0.0); });
  return out;
}

std::vector<GoodReturnVector> good_return_vectors(const SubstitutionRule& rule) {
  const int m = rule.type_count();
  const double tol = 1e-9 * std::max(1.0, rule.expansion.norm_inf() *
                                              rule.prototiles[0].support.diameter() * 4.0);
  // Candidate (v, type) pairs from parent 0, then intersect over all parents.
  struct Cand {
    Vec v;
    int type;
  };
  std::vector<Cand> cands;
  auto pairsOf = [&](int parent, int type) {
    std::vector<Vec> disp;
    for (const Child& c : rule.children[parent])
      if (c.type == type) disp.push_back(c.displacement);
    return disp;
  };
  for (int type = 0; type < m; ++type) {
    const std::vector<Vec> disp = pairsOf(0, type);
    for (std::size_t a = 0; a < disp.size(); ++a)
      for (std::size_t b = 0; b < disp.size(); ++b)
        if (a != b) cands.push_back({disp[a] - disp[b], type});
  }
  std::vector<GoodReturnVector> out;
  for (const Cand& cand : cands) {
    if (norm_inf(cand.v) <= tol) continue;
    bool everywhere = true;
    for (int parent = 0; parent < m && everywhere; ++parent) {
      const std::vector<Vec> disp = pairsOf(parent, cand.type);
      bool found = false;
      for (std::size_t a = 0; a < disp.size() && !found; ++a)
        for (std::size_t b = 0; b < disp.size() && !found; ++b)
          if (a != b && vec_close(disp[a] - disp[b], cand.v, tol)) found = true;
      everywhere = found;
    }
    if (!everywhere) continue;
    bool merged = false;
    for (GoodReturnVector& g : out) {
      if (vec_close(g.v, cand.v, tol)) {
        if (std::find(g.types.begin(), g.types.end(), cand.type) == g.types.end())
          g.types.push_back(cand.type);
        merged = true;
        break;
      }
    }
    if (!merged) out.push_back({cand.v, {cand.type}});
  }
  std::sort(out.begin(), out.end(),
            [](const GoodReturnVector& a, const GoodReturnVector& b) { return vec_less(a.v, b.v, 0.0); });
  for (GoodReturnVector& g : out) std::sort(g.types.begin(), g.types.end());
  return out;
}

std::optional<std::vector<long>> integer_coordinates(const std::vector<Vec>& generators, int d,
                                                     const Vec& w, long bound, double tol) {
  const int n = static_cast<int>(generators.size());
  if (n == 0) return std::nullopt;
  const double scale = [&] {
    double s = norm_inf(w);
    for (const Vec& g : generators) s = std::max(s, norm_inf(g));
    return std::max(1.0, s);
  }();

  // Pick d pivot columns maximizing conditioning; remaining columns get
  // bounded integer enumeration.
  std::vector<int> pivots;
  if (d == 1) {
    int best = 0;
    for (int i = 1; i < n; ++i)
      if (std::abs(generators[i].x) > std::abs(generators[best].x)) best = i;
    if (std::abs(generators[best].x) < 1e-12 * scale) return std::nullopt;
    pivots = {best};
  } else {
    double bestDet = 0.0;
    int bi = -1, bj = -1;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const double det = std::abs(generators[i].x * generators[j].y - generators[i].y * generators[j].x);
        if (det > bestDet) {
          bestDet = det;
          bi = i;
          bj = j;
        }
      }
    if (bi < 0 || bestDet < 1e-12 * scale * scale) return std::nullopt;
    pivots = {bi, bj};
  }
  std::vector<int> rest;
  for (int i = 0; i < n; ++i)
    if (std::find(pivots.begin(), pivots.end(), i) == pivots.end()) rest.push_back(i);

  auto solve_pivots = [&](const Vec& target) -> std::array<double, 2> {
    if (d == 1) return {target.x / generators[pivots[0]].x, 0.0};
    const Vec& u = generators[pivots[0]];
    const Vec& v = generators[pivots[1]];
    const double det = u.x * v.y - u.y * v.x;
    return {(target.x * v.y - target.y * v.x) / det, (u.x * target.y - u.y * target.x) / det};
  };

  std::vector<long> result;
  int hits = 0;
  // Enumerate integer choices for the non-pivot coordinates.
  std::vector<long> t(rest.size(), -bound);
  while (true) {
    Vec target = w;
    for (std::size_t k = 0; k < rest.size(); ++k)
      target = target - generators[rest[k]] * static_cast<double>(t[k]);
    const auto c = solve_pivots(target);
    bool integral = true;
    std::array<long, 2> ci{};
    for (int k = 0; k < d; ++k) {
      ci[k] = std::lround(c[k]);
      if (std::abs(c[k] - static_cast<double>(ci[k])) > tol || std::abs(ci[k]) > 1000000) integral = false;
    }
    if (integral) {
      // verify residual
      Vec check;
      std::vector<long> coeffs(n, 0);
      for (int k = 0; k < d; ++k) coeffs[pivots[k]] = ci[k];
      for (std::size_t k = 0; k < rest.size(); ++k) coeffs[rest[k]] = t[k];
      for (int i = 0; i < n; ++i) check = check + generators[i] * static_cast<double>(coeffs[i]);
      if (norm_inf(check - w) <= tol * scale) {
        ++hits;
        result = coeffs;
        if (hits > 1) return std::nullopt;  // ambiguous at this bound: refuse
      }
    }
    // advance odometer
    std::size_t k = 0;
    for (; k < rest.size(); ++k) {
      if (t[k] < bound) {
        ++t[k];
        break;
      }
      t[k] = -bound;
    }
    if (rest.empty() || k == rest.size()) break;
  }
  if (hits == 1) return result;
  return std::nullopt;
}

std::vector<Vec> reduce_generators(const std::vector<Vec>& diffs, int d) {
  std::vector<Vec> sorted = diffs;
  std::sort(sorted.begin(), sorted.end(), [](const Vec& a, const Vec& b) {
    const double na = norm2(a), nb = norm2(b);
    if (std::abs(na - nb) > 1e-12) return na < nb;
    return vec_less(a, b, 0.0);
  });
  std::vector<Vec> basis;
  for (const Vec& w : sorted) {
    if (norm_inf(w) < 1e-12) continue;
    if (!basis.empty() && integer_coordinates(basis, d, w).has_value()) continue;
    basis.push_back(w);
  }
  return basis;
}

GeneratorData generator_data(const SubstitutionRule& rule, const std::vector<Vec>& generators) {
  const int n = static_cast<int>(generators.size());
  if (n == 0) throw DimensionError("generator_data: empty generator set");
  // Rank check
  if (rule.d == 2) {
    double best = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        best = std::max(best, std::abs(generators[i].x * generators[j].y -
                                       generators[i].y * generators[j].x));
    if (best < 1e-10) throw PreconditionError("generator_data: generators do not span R^d");
  } else {
    bool nonzero = false;
    for (const Vec& g : generators) nonzero = nonzero || std::abs(g.x) > 1e-12;
    if (!nonzero) throw PreconditionError("generator_data: generators do not span R^d");
  }

  GeneratorData data;
  data.generators = generators;
  data.m = algebraic::IntMatrix(n, n);
  double vmax = 0.0;
  for (const Vec& g : generators) vmax = std::max(vmax, norm_inf(g));
  for (int j = 0; j < n; ++j) {
    const Vec target = rule.expansion.apply(generators[j]);
    const auto coeffs = integer_coordinates(generators, rule.d, target);
    if (!coeffs) {
      throw NonIntegralityError("generator_data: L*v_" + std::to_string(j) +
                                    " is not an integer combination of the generators",
                                norm_inf(target));
    }
    for (int i = 0; i < n; ++i) data.m.at(i, j) = (*coeffs)[i];
  }
  // Residual of L V = V M.
  double residual = 0.0;
  for (int j = 0; j < n; ++j) {
    Vec rhs;
    for (int i = 0; i < n; ++i) rhs = rhs + generators[i] * data.m.at(i, j).get_d();
    residual = std::max(residual, norm_inf(rule.expansion.apply(generators[j]) - rhs));
  }
  data.residual = residual;
  const double limit = 1e-8 * rule.expansion.norm_inf() * std::max(1.0, vmax);
  if (residual > limit)
    throw NonIntegralityError("generator_data: residual above tolerance", residual);
  return data;
}

SubstitutionRule product_rule(const SubstitutionRule& a, const SubstitutionRule& b,
                              const std::string& name) {
  if (a.d != 1 || b.d != 1) throw DimensionError("product_rule: factors must be 1-dimensional");
  SubstitutionRule out;
  out.name = name;
  out.d = 2;
  out.expansion = Mat::diag(a.expansion.a[0][0], b.expansion.a[0][0]);
  const int ma = a.type_count(), mb = b.type_count();
  out.prototiles.resize(static_cast<std::size_t>(ma) * mb);
  for (int i = 0; i < ma; ++i)
    for (int j = 0; j < mb; ++j) {
      Prototile t;
      t.id = i * mb + j;
      t.label = a.prototiles[i].label + b.prototiles[j].label;
      const double x0 = a.prototiles[i].support.vertices[0].x;
      const double x1 = a.prototiles[i].support.vertices[1].x;
      const double y0 = b.prototiles[j].support.vertices[0].x;
      const double y1 = b.prototiles[j].support.vertices[1].x;
      t.support.d = 2;
      t.support.vertices = {Vec{x0, y0}, Vec{x1, y0}, Vec{x1, y1}, Vec{x0, y1}};
      t.puncture = Vec{a.prototiles[i].puncture.x, b.prototiles[j].puncture.x};
      t.volume = t.support.volume();
      out.prototiles[t.id] = t;
    }
  out.children.resize(out.prototiles.size());
  for (int i = 0; i < ma; ++i)
    for (int j = 0; j < mb; ++j) {
      auto& list = out.children[static_cast<std::size_t>(i) * mb + j];
      for (const Child& ca : a.children[i])
        for (const Child& cb : b.children[j])
          list.push_back({ca.type * mb + cb.type, Vec{ca.displacement.x, cb.displacement.x}});
    }
  out.seed = a.seed * mb + b.seed;
  return out;
}

}  // namespace aps::tiling
