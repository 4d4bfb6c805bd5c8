#include "aps/weakmixing.hpp"

#include <algorithm>
#include <cmath>

namespace aps::weakmixing {

using algebraic::SpectrumGroup;
using tiling::GeneratorData;
using tiling::SubstitutionRule;

double omega_v_norm(const Vec& omega, const std::vector<Vec>& generators) {
  double best = 0.0;
  for (const Vec& v : generators) best = std::max(best, std::abs(dot(omega, v)));
  return best;
}

EpsilonTrace epsilon_trace(const GeneratorData& gd, const Vec& omega, int n_max) {
  if (n_max < 0 || n_max > 10000) throw DimensionError("epsilon_trace: n_max out of range");
  const int n = gd.m.rows();
  EpsilonTrace trace;
  trace.omega = omega;
  trace.omega_tilde.resize(n);
  for (int i = 0; i < n; ++i) trace.omega_tilde[i] = dot(omega, gd.generators[i]);

  std::vector<double> eps(n);
  for (int i = 0; i < n; ++i) eps[i] = centered_frac(trace.omega_tilde[i]);
  trace.eps.push_back(eps);
  // eps_{k+1} = centered_frac(M^T eps_k); integer parts never materialize, so
  // the recursion is exact mod 1 at every step.
  for (int k = 0; k < n_max; ++k) {
    std::vector<double> next(n, 0.0);
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int j = 0; j < n; ++j) acc += gd.m.at(j, i).get_d() * eps[j];  // (M^T)(i,j) = M(j,i)
      next[i] = centered_frac(acc);
    }
    eps = std::move(next);
    trace.eps.push_back(eps);
  }
  trace.max_norm.reserve(trace.eps.size());
  for (const auto& row : trace.eps) {
    double norm = 0.0;
    for (double v : row) norm = std::max(norm, std::abs(v));
    trace.max_norm.push_back(norm);
  }
  return trace;
}

WindowCheckResult window_check(const EpsilonTrace& trace, double delta0, int window_ratio) {
  if (window_ratio < 1) throw DimensionError("window_check: window ratio must be >= 1");
  WindowCheckResult out;
  const int last = static_cast<int>(trace.max_norm.size()) - 1;
  for (int n = 0; n <= last; ++n) {
    const int hi = std::min(last, n == 0 ? 0 : n * window_ratio);
    for (int k = n; k <= hi; ++k) {
      if (trace.max_norm[k] >= delta0) {
        out.found = true;
        out.n = n;
        out.witness = k;
        return out;
      }
    }
  }
  return out;
}

EigenvalueDiagnostic eigenvalue_criterion(const GeneratorData& gd, const Vec& omega, int n_max,
                                          const std::vector<std::vector<long>>& vectors) {
  const int n = gd.m.rows();
  std::vector<std::vector<long>> combos = vectors;
  if (combos.empty()) {
    combos.resize(n);
    for (int i = 0; i < n; ++i) {
      combos[i].assign(n, 0);
      combos[i][i] = 1;
    }
  }
  const EpsilonTrace trace = epsilon_trace(gd, omega, n_max);
  EigenvalueDiagnostic diag;
  diag.deviation.reserve(trace.eps.size());
  for (const auto& eps : trace.eps) {
    double worst = 0.0;
    for (const auto& combo : combos) {
      double tau = 0.0;
      for (int i = 0; i < n; ++i) tau += static_cast<double>(combo[i]) * eps[i];
      worst = std::max(worst, 2.0 * std::abs(std::sin(M_PI * centered_frac(tau))));
    }
    diag.deviation.push_back(worst);
  }
  const int tail = std::min<int>(10, static_cast<int>(diag.deviation.size()));
  diag.convergent = true;
  for (int k = 0; k < tail; ++k) {
    const std::size_t idx = diag.deviation.size() - 1 - k;
    if (diag.deviation[idx] >= 1e-3) diag.convergent = false;
    diag.trailing_eps = std::max(diag.trailing_eps, trace.max_norm[idx]);
  }
  return diag;
}

EigenvalueSearchResult eigenvalue_grid_search(const GeneratorData& gd, double a, double b,
                                              double pitch, int n_verify) {
  if (pitch <= 0) throw DimensionError("eigenvalue_grid_search: pitch must be positive");
  for (const Vec& v : gd.generators)
    if (v.y != 0.0) throw UnsupportedError("eigenvalue_grid_search: d = 1 only");

  // Largest-slope generator for the Newton refinement.
  int pivot = 0;
  for (std::size_t i = 1; i < gd.generators.size(); ++i)
    if (std::abs(gd.generators[i].x) > std::abs(gd.generators[pivot].x)) pivot = static_cast<int>(i);
  const double vPivot = gd.generators[pivot].x;
  // Expansion factor recovered from M acting on the generator row space.
  double lambda = 0.0;
  {
    const EpsilonTrace probe = epsilon_trace(gd, Vec{0.0}, 0);
    (void)probe;
    // |lambda| = Perron eigenvalue of M (equals the 1-d expansion)
    const int n = gd.m.rows();
    std::vector<double> x(n, 1.0);
    for (int iter = 0; iter < 500; ++iter) {
      std::vector<double> y(n, 0.0);
      double norm = 0.0;
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) y[i] += std::abs(gd.m.at(i, j).get_d()) * x[j];
        norm = std::max(norm, y[i]);
      }
      for (double& v : y) v /= norm;
      x = y;
      lambda = norm;
    }
  }

  EigenvalueSearchResult out;
  const long k0 = static_cast<long>(std::floor(a / pitch)) + 1;
  const long k1 = static_cast<long>(std::floor(b / pitch + 1e-9));
  const int detectHi = 12;
  for (long k = k0; k <= k1; ++k) {
    const double omega0 = k * pitch;
    if (omega0 <= 0.5 * pitch) continue;
    ++out.grid_points;
    EpsilonTrace trace = epsilon_trace(gd, Vec{omega0}, detectHi);
    // Sliding detection window: early indices still carry the intrinsic decay
    // of a true eigenvalue, late ones the grid offset amplified by lambda^n.
    double score = 1e300;
    for (int lo = 3; lo + 5 <= detectHi; ++lo) {
      double windowMax = 0.0;
      for (int n = lo; n <= lo + 5; ++n) windowMax = std::max(windowMax, trace.max_norm[n]);
      score = std::min(score, windowMax);
    }
    if (score >= 0.1) continue;
    ++out.candidates;

    // Newton refinement on the pivot residue at increasing levels: the slot
    // eps_N(pivot) is linear in omega with slope lambda^N v_pivot near a true
    // eigenvalue, and the iteration computes it exactly mod 1.
    double omega = omega0;
    for (int level = 10; level <= 40; level += 2) {
      const EpsilonTrace t = epsilon_trace(gd, Vec{omega}, level);
      const double slope = std::pow(lambda, level) * vPivot;
      if (!std::isfinite(slope) || std::abs(slope) < 1e-12) break;
      omega -= t.eps[level][pivot] / slope;
      if (std::abs(omega - omega0) > pitch) break;  // left the grid cell
    }
    if (std::abs(omega - omega0) > pitch) continue;
    if (std::abs(omega) <= 0.5 * pitch) continue;  // trivial character
    const EigenvalueDiagnostic diag = eigenvalue_criterion(gd, Vec{omega}, n_verify);
    if (!diag.convergent || diag.trailing_eps >= 1e-3) continue;
    bool duplicate = false;
    for (double w : out.found)
      if (std::abs(w - omega) < 1e-6) duplicate = true;
    if (!duplicate) out.found.push_back(omega);
  }
  std::sort(out.found.begin(), out.found.end());
  return out;
}

tiling::GeneratorData derive_generators(const SubstitutionRule& rule) {
  double dmax = 0.0;
  for (const auto& t : rule.prototiles) dmax = std::max(dmax, t.support.diameter());
  const tiling::Patch patch = tiling::patch_in_cube_auto(rule, 3.0 * dmax);
  const std::vector<Vec> diffs = tiling::adjacency_differences(rule, patch);
  if (diffs.empty()) throw PreconditionError("derive_generators: no adjacency differences");
  const std::vector<Vec> basis = tiling::reduce_generators(diffs, rule.d);
  return tiling::generator_data(rule, basis);
}

std::vector<SpectrumGroup> expansion_spectrum(const SubstitutionRule& rule,
                                              const GeneratorData& gd) {
  const algebraic::IntPolynomial cp = algebraic::char_poly(gd.m);
  const algebraic::Factorization fact = algebraic::irreducible_factors(cp);

  // Numeric eigenvalues of L with multiplicities.
  std::vector<std::complex<double>> eig;
  if (rule.d == 1) {
    eig = {std::complex<double>(rule.expansion.a[0][0], 0.0)};
  } else {
    const double tr = rule.expansion.a[0][0] + rule.expansion.a[1][1];
    const double det = rule.expansion.det();
    const std::complex<double> disc = std::sqrt(std::complex<double>(tr * tr - 4.0 * det, 0.0));
    eig = {0.5 * (tr - disc), 0.5 * (tr + disc)};
  }

  std::vector<SpectrumGroup> groups;
  std::vector<bool> matched(eig.size(), false);
  for (const auto& [factor, mult] : fact.factors) {
    (void)mult;
    const std::vector<algebraic::RootCluster> roots = algebraic::complex_roots(factor, 1e-8);
    SpectrumGroup group;
    group.min_poly = factor;
    for (const algebraic::RootCluster& root : roots) {
      int count = 0;
      for (std::size_t e = 0; e < eig.size(); ++e) {
        if (matched[e]) continue;
        if (std::abs(eig[e] - root.center) <= std::max(1e-6, 1e3 * root.radius)) {
          matched[e] = true;
          ++count;
        }
      }
      if (count > 0) {
        group.elements.push_back(root);
        group.multiplicities.push_back(count);
      }
    }
    if (!group.elements.empty()) groups.push_back(std::move(group));
  }
  for (std::size_t e = 0; e < eig.size(); ++e)
    if (!matched[e])
      throw PrecisionError("expansion_spectrum: eigenvalue of L not matched to charpoly(M) roots");
  return groups;
}

WeakMixingVerdict classify_substitution(const SubstitutionRule& rule, const Assertions& assertions) {
  WeakMixingVerdict out;
  out.assertions = assertions;
  tiling::validate(rule);
  const tiling::PrimitivityResult prim = tiling::is_primitive(tiling::substitution_matrix(rule));
  out.primitive = prim.primitive;
  out.primitivity_exponent = prim.exponent;

  if (rule.d == 1) {
    out.diagonalizable = true;
  } else {
    const double tr = rule.expansion.a[0][0] + rule.expansion.a[1][1];
    const double det = rule.expansion.det();
    const double disc = tr * tr - 4.0 * det;
    const bool scalar = std::abs(rule.expansion.a[0][1]) < 1e-12 &&
                        std::abs(rule.expansion.a[1][0]) < 1e-12 &&
                        std::abs(rule.expansion.a[0][0] - rule.expansion.a[1][1]) < 1e-12;
    out.diagonalizable = scalar || std::abs(disc) > 1e-9;
  }

  const GeneratorData gd = derive_generators(rule);
  out.algebraic = algebraic::classify_family(expansion_spectrum(rule, gd));

  const bool totallyNonPisot =
      out.algebraic.verdict == algebraic::FamilyVerdict::TOTALLY_NON_PISOT ||
      out.algebraic.verdict == algebraic::FamilyVerdict::STRONGLY_TOTALLY_NON_PISOT;
  if (!out.primitive) {
    out.reason = "substitution matrix not primitive";
  } else if (!out.diagonalizable) {
    out.reason = "expansion not diagonalizable";
  } else if (!assertions.aperiodic) {
    out.reason = "aperiodicity not asserted";
  } else if (!assertions.injective) {
    out.reason = "injectivity not asserted";
  } else if (!totallyNonPisot) {
    out.reason = "spectrum is not totally non-Pisot (" +
                 algebraic::verdict_name(out.algebraic.verdict) + ")";
  } else {
    out.verdict = Verdict::WEAKLY_MIXING_BY_THM;
    out.reason = "primitive + asserted hypotheses + " +
                 algebraic::verdict_name(out.algebraic.verdict);
    return out;
  }
  out.verdict = Verdict::INCONCLUSIVE;
  return out;
}

}  // namespace aps::weakmixing
