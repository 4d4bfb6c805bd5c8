#include "aps/cocycle.hpp"

#include <algorithm>
#include <cmath>

namespace aps::cocycle {

using tiling::GoodReturnVector;
using tiling::Patch;
using tiling::SubstitutionRule;

double torus_norm(double t) { return torus_dist(t); }

std::complex<double> translation_sum(const Patch& patch, int type, const Vec& omega) {
  std::complex<double> acc = 0.0;
  for (const auto& tile : patch.tiles)
    if (tile.type == type) acc += unit_phase(dot(omega, tile.translation));
  return acc;
}

std::complex<double> structure_factor(const SubstitutionRule& rule, const Patch& patch, int type,
                                      const Vec& omega) {
  return unit_phase(dot(omega, rule.prototiles[type].puncture)) * translation_sum(patch, type, omega);
}

namespace {

void check_phase_precision(const SubstitutionRule& rule, int q) {
  double maxDisp = 0.0;
  for (const auto& parent : rule.children)
    for (const auto& c : parent) maxDisp = std::max(maxDisp, norm_inf(c.displacement));
  const double growth = std::pow(rule.expansion.norm_inf(), q) * maxDisp;
  if (growth > 9.0e15)  // ~2^53: doubles can no longer resolve the phase mod 1
    throw PrecisionError("cocycle: level " + std::to_string(q) +
                         " displacement magnitude exceeds double precision");
}

std::vector<int> realizable_types(const std::vector<GoodReturnVector>& good) {
  std::vector<int> types;
  for (const auto& g : good)
    for (int t : g.types)
      if (std::find(types.begin(), types.end(), t) == types.end()) types.push_back(t);
  std::sort(types.begin(), types.end());
  return types;
}

double max_entry(const algebraic::IntMatrix& s) {
  double best = 0.0;
  for (int i = 0; i < s.rows(); ++i)
    for (int j = 0; j < s.cols(); ++j) best = std::max(best, s.at(i, j).get_d());
  return best;
}

}  // namespace

CocycleStep step_matrix(const SubstitutionRule& rule, int q, const Vec& omega) {
  if (q < 0) throw DimensionError("step_matrix: negative level");
  check_phase_precision(rule, q);
  const int m = rule.type_count();
  Mat lq = Mat::identity(rule.d);
  for (int i = 0; i < q; ++i) lq = rule.expansion.mul(lq);
  CocycleStep step;
  step.omega = omega;
  step.level = q;
  step.matrix = CMat(m);
  for (int j = 0; j < m; ++j)
    for (const auto& c : rule.children[j])
      step.matrix.at(j, c.type) += unit_phase(dot(omega, lq.apply(c.displacement)));
  return step;
}

CocycleProduct cocycle_product(const SubstitutionRule& rule, int n, const Vec& omega) {
  if (n < 0) throw DimensionError("cocycle_product: negative order");
  CocycleProduct out;
  out.omega = omega;
  out.n = n;
  out.matrix = CMat::identity(rule.type_count());
  for (int q = 0; q < n; ++q) out.matrix = step_matrix(rule, q, omega).matrix.mul(out.matrix);
  return out;
}

double xi_ratio(const algebraic::IntMatrix& subst, const std::vector<double>& x,
                const std::vector<int>& realizable) {
  if (realizable.empty()) throw PreconditionError("xi_ratio: no realizable types");
  const int m = subst.rows();
  double xmax = 0.0;
  for (double v : x) xmax = std::max(xmax, v);
  const double denom = 2.0 * m * max_entry(subst) * xmax;
  double best = 1e300;
  for (int k : realizable) best = std::min(best, x[k] / denom);
  return best;
}

double mass_constant(const SubstitutionRule& rule) {
  const auto good = tiling::good_return_vectors(rule);
  if (good.empty())
    throw PreconditionError(
        "mass_constant: no good return vectors; pass a higher power of the rule");
  const auto types = realizable_types(good);
  const algebraic::IntMatrix s = substitution_matrix(rule);
  const algebraic::IntMatrix st = s.transpose();
  const int m = s.rows();

  std::vector<double> x(m, 1.0);
  double best = xi_ratio(s, x, types);
  std::vector<double> prevDir = x;
  for (int l = 1; l <= 10000; ++l) {
    std::vector<double> next(m, 0.0);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) next[i] += st.at(i, j).get_d() * x[j];
    double nmax = 0.0;
    for (double v : next) nmax = std::max(nmax, v);
    for (double& v : next) v /= nmax;  // Xi is scale-invariant
    x = next;
    best = std::min(best, xi_ratio(s, x, types));
    double shift = 0.0;
    for (int i = 0; i < m; ++i) shift = std::max(shift, std::abs(x[i] - prevDir[i]));
    prevDir = x;
    if (l > 4 && shift < 1e-10) break;
  }
  const double lnorm = rule.expansion.norm_inf();
  return std::min(best, (lnorm - 1.0) / (lnorm + 1.0));
}

RieszBound riesz_bound(const SubstitutionRule& rule, int n, const Vec& omega,
                       const std::vector<GoodReturnVector>& good, double mass) {
  if (good.empty()) throw PreconditionError("riesz_bound: empty good return vector set");
  RieszBound out;
  out.mass = mass;
  out.factors.reserve(n);
  Mat lq = Mat::identity(rule.d);
  for (int l = 0; l < n; ++l) {
    double worst = 0.0;
    for (const auto& g : good) {
      const double t = torus_norm(dot(omega, lq.apply(g.v)));
      worst = std::max(worst, t * t);
    }
    const double factor = 1.0 - mass * worst;
    out.factors.push_back(factor);
    out.product *= factor;
    lq = rule.expansion.mul(lq);
  }
  return out;
}

RieszBound riesz_bound(const SubstitutionRule& rule, int n, const Vec& omega) {
  return riesz_bound(rule, n, omega, tiling::good_return_vectors(rule), mass_constant(rule));
}

StepInequalityResult step_inequality_check(const SubstitutionRule& rule, int q, const Vec& omega,
                                           const std::vector<double>& x) {
  const auto good = tiling::good_return_vectors(rule);
  if (good.empty()) throw PreconditionError("step_inequality_check: empty good return vector set");
  const int m = rule.type_count();
  if (static_cast<int>(x.size()) != m) throw DimensionError("step_inequality_check: x size mismatch");
  for (double v : x)
    if (v <= 0) throw PreconditionError("step_inequality_check: x must be entrywise positive");

  Mat lq = Mat::identity(rule.d);
  for (int i = 0; i < q; ++i) lq = rule.expansion.mul(lq);

  // Maximizing good return vector at this level; ties resolved canonically.
  double worst = -1.0;
  const GoodReturnVector* chosen = nullptr;
  for (const auto& g : good) {
    const double t = torus_norm(dot(omega, lq.apply(g.v)));
    if (t > worst + 1e-15) {
      worst = t;
      chosen = &g;
    }
  }
  const int kStar = chosen->types.front();

  const algebraic::IntMatrix s = substitution_matrix(rule);
  double xmax = 0.0;
  for (double v : x) xmax = std::max(xmax, v);
  const double xi = x[kStar] / (2.0 * m * max_entry(s) * xmax);

  const CMat step = step_matrix(rule, q, omega).matrix;
  StepInequalityResult result;
  result.slack = 1e300;
  double scale = 0.0;
  for (int j = 0; j < m; ++j) {
    double lhs = 0.0, stx = 0.0;
    for (int k = 0; k < m; ++k) {
      lhs += std::abs(step.at(j, k)) * x[k];
      stx += s.at(k, j).get_d() * x[k];  // (S^T x)(j)
    }
    const double rhs = (1.0 - xi * worst * worst) * stx;
    result.slack = std::min(result.slack, rhs - lhs);
    scale = std::max(scale, stx);
  }
  result.ok = result.slack >= -1e-12 * std::max(1.0, scale);
  return result;
}

double factor_growth_bound(const SubstitutionRule& rule, double R, const Vec& omega,
                           const std::vector<double>& f) {
  (void)omega;  // the bound depends on omega only through the supplied sequence
  if (R < 2.0) throw DimensionError("factor_growth_bound: R >= 2 required");
  const tiling::GeometryStats stats = tiling::validate(rule);
  const double lnorm = rule.expansion.norm_inf();
  const double xi = 0.5 * (lnorm + 1.0);

  if (f.size() < 2) throw ContractError("factor_growth_bound: sequence too short");
  for (std::size_t i = 0; i + 1 < f.size(); ++i) {
    if (f[i + 1] > f[i] * (1.0 + 1e-12) || f[i + 1] < f[i] / xi * (1.0 - 1e-12))
      throw ContractError("factor_growth_bound: sequence violates F(n)/xi <= F(n+1) <= F(n)");
  }

  const int d = rule.d;
  const double sqrtd = std::sqrt(static_cast<double>(d));
  const int nTop = std::max(
      0, static_cast<int>(std::floor(std::log(2.0 * sqrtd * R / stats.d_min) / std::log(lnorm))));
  if (static_cast<std::size_t>(nTop) >= f.size())
    throw ContractError("factor_growth_bound: sequence shorter than the tower height");

  // Perron sandwich constant c2 with #zeta^k(T_j) <= c2 theta^k.
  const algebraic::IntMatrix s = substitution_matrix(rule);
  double c2 = 1.0;
  {
    algebraic::IntMatrix power = algebraic::IntMatrix::identity(s.rows());
    for (int k = 0; k <= std::min(nTop, 25); ++k) {
      for (int j = 0; j < s.cols(); ++j) {
        double count = 0.0;
        for (int i = 0; i < s.rows(); ++i) count += power.at(i, j).get_d();
        c2 = std::max(c2, count / std::pow(stats.theta, k));
      }
      power = power.mul(s);
    }
  }

  double vmax = 0.0;
  for (const auto& t : rule.prototiles) vmax = std::max(vmax, t.volume);

  const double fullCube = std::pow(2.0 * R, d);
  double sum = 0.0;
  for (int k = 0; k <= nTop; ++k) {
    const double reach = 2.0 * stats.d_max * std::pow(lnorm, k + 1);
    const double outer = std::pow(2.0 * R + reach, d);
    const double inner = std::pow(std::max(0.0, 2.0 * R - reach), d);
    const double ring = std::min(fullCube, outer - inner);
    const double countBound = ring / (stats.v_min * std::pow(stats.theta, k));
    sum += countBound * c2 * std::pow(stats.theta, k) * f[k];
  }
  const double mainTerm = vmax * sum;
  // Boundary strip term, kept even though the integrals exclude partial tiles.
  const double delta = std::pow(2.0 * R + 2.0 * stats.d_max, d) -
                       std::pow(std::max(0.0, 2.0 * R - 2.0 * stats.d_max), d);
  return mainTerm + delta;
}

}  // namespace aps::cocycle
