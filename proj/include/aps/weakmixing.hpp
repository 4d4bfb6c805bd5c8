#pragma once

#include <optional>
#include <string>
#include <vector>

#include "aps/algebraic.hpp"
#include "aps/tiling.hpp"

namespace aps::weakmixing {

struct EpsilonTrace {
  Vec omega;
  std::vector<double> omega_tilde;       // V^T omega
  std::vector<std::vector<double>> eps;  // eps[n] in (-1/2, 1/2]^N, n = 0..n_max
  std::vector<double> max_norm;          // per n, max |eps_n|_inf
};

struct WindowCheckResult {
  bool found = false;
  int n = -1;        // first n with max over [n, Zn] of |eps|_inf >= delta0
  int witness = -1;  // index attaining the max
};

struct EigenvalueDiagnostic {
  std::vector<double> deviation;  // per n: max_v |e[(L^T)^n omega . v] - 1|
  bool convergent = false;        // deviations below 1e-3 on the last 10 indices
  double trailing_eps = 0.0;      // max |eps_n|_inf over the last 10 indices
};

struct EigenvalueSearchResult {
  std::vector<double> found;  // refined eigenvalue candidates, ascending
  long grid_points = 0;
  long candidates = 0;  // coarse detections before refinement
};

enum class Verdict { WEAKLY_MIXING_BY_THM, INCONCLUSIVE };

struct Assertions {
  bool aperiodic = false;
  bool injective = false;
};

struct WeakMixingVerdict {
  algebraic::AlgebraicSpectrumReport algebraic;
  bool primitive = false;
  int primitivity_exponent = 0;
  bool diagonalizable = false;
  Assertions assertions;
  Verdict verdict = Verdict::INCONCLUSIVE;
  std::string reason;
};

double omega_v_norm(const Vec& omega, const std::vector<Vec>& generators);

EpsilonTrace epsilon_trace(const tiling::GeneratorData& gd, const Vec& omega, int n_max);

WindowCheckResult window_check(const EpsilonTrace& trace, double delta0, int window_ratio = 4);

// Deviation diagnostic for the eigenvalue criterion; `vectors` are integer
// coordinate rows over the generators (defaults to the generators themselves).
EigenvalueDiagnostic eigenvalue_criterion(const tiling::GeneratorData& gd, const Vec& omega,
                                          int n_max,
                                          const std::vector<std::vector<long>>& vectors = {});

// Grid search over (a, b] at the given pitch with Newton refinement of the
// residues (d = 1 only); returns every refined omega whose trace verifies.
EigenvalueSearchResult eigenvalue_grid_search(const tiling::GeneratorData& gd, double a, double b,
                                              double pitch, int n_verify = 30);

// Spectrum of the expansion grouped by the irreducible factors of charpoly(M).
std::vector<algebraic::SpectrumGroup> expansion_spectrum(const tiling::SubstitutionRule& rule,
                                                         const tiling::GeneratorData& gd);

// Generators derived from the adjacency differences of a cube patch.
tiling::GeneratorData derive_generators(const tiling::SubstitutionRule& rule);

WeakMixingVerdict classify_substitution(const tiling::SubstitutionRule& rule,
                                        const Assertions& assertions);

}  // namespace aps::weakmixing
