#pragma once

#include <complex>
#include <optional>
#include <vector>

#include "aps/tiling.hpp"

namespace aps::birkhoff {

// ---------------------------------------------------------------------------
// Cylindrical observables: one profile per tile type, every term vanishing on
// the support boundary (the indicator kind exists only behind a validation
// bypass for estimator calibration).
// ---------------------------------------------------------------------------

enum class ProfileKind { Zero, Indicator, Hat, Bump, Poly };

struct ProfileTerm {
  ProfileKind kind = ProfileKind::Zero;
  double weight = 1.0;
  // Poly: tensor coefficients c[i + nx*j] for u^i v^j in unit coordinates,
  // multiplied by a boundary-vanishing hat.
  std::vector<double> coeffs;
  int nx = 0, ny = 0;
};

using Profile = std::vector<ProfileTerm>;

struct CylindricalFunction {
  std::vector<Profile> psi;  // per type
  double sup_norm = 0.0;       // numeric estimate on a fixed grid
  double lipschitz_norm = 0.0; // sup + Lipschitz constant estimate
};

CylindricalFunction make_cylindrical(const tiling::SubstitutionRule& rule,
                                     std::vector<Profile> psi, bool allow_indicator = false);

// Convenience builders.
CylindricalFunction zero_function(const tiling::SubstitutionRule& rule);
CylindricalFunction hat_function(const tiling::SubstitutionRule& rule,
                                 const std::vector<double>& weights = {});
CylindricalFunction bump_function(const tiling::SubstitutionRule& rule,
                                  const std::vector<double>& weights = {});
// Constant-one observable (indicator blend); calibration only.
CylindricalFunction constant_function(const tiling::SubstitutionRule& rule);

double eval_profile(const tiling::SubstitutionRule& rule, int type, const Profile& profile,
                    const Vec& point);

// ---------------------------------------------------------------------------
// Point location inside a patch (grid hash; ties on shared boundaries resolve
// to the lowest tile index).
// ---------------------------------------------------------------------------

class PatchIndex {
 public:
  PatchIndex(const tiling::SubstitutionRule& rule, const tiling::Patch& patch);
  int locate(const Vec& s) const;  // -1 when outside every tile
  const tiling::Patch& patch() const { return *patch_; }

 private:
  const tiling::SubstitutionRule* rule_;
  const tiling::Patch* patch_;
  int d_;
  double tol_;
  // d = 1: tiles sorted by left endpoint
  std::vector<int> order_;
  std::vector<double> lefts_;
  // d = 2: uniform grid of candidate lists
  Vec lo_, hi_;
  double cell_ = 1.0;
  int nx_ = 0, ny_ = 0;
  std::vector<std::vector<int>> cells_;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

// d-dimensional Fejer kernel, removable singularity at y_i = 0 evaluated as R.
double fejer(int d, double R, const Vec& y);

// Fourier transform of the type-i profile over its support.
std::complex<double> psi_hat(const tiling::SubstitutionRule& rule, const CylindricalFunction& f,
                             int type, const Vec& omega);

// Cylindrical evaluation f(phi_s X) through the patch.
double evaluate(const CylindricalFunction& f, const tiling::SubstitutionRule& rule,
                const PatchIndex& index, const Vec& s);

double mean(const CylindricalFunction& f, const tiling::SubstitutionRule& rule);
CylindricalFunction zero_mean_project(const CylindricalFunction& f,
                                      const tiling::SubstitutionRule& rule);

// Factorized twisted integral over the complete tiles of ]C_R[.
std::complex<double> twisted_integral(const tiling::SubstitutionRule& rule,
                                      const CylindricalFunction& f, double R, const Vec& omega);
std::complex<double> twisted_integral_over(const tiling::SubstitutionRule& rule,
                                           const CylindricalFunction& f,
                                           const tiling::Patch& cube_patch, const Vec& omega);

// Independent oracle: tile-by-tile quadrature with point-located evaluation.
std::complex<double> twisted_integral_oracle(const tiling::SubstitutionRule& rule,
                                             const CylindricalFunction& f, double R,
                                             const Vec& omega);

// Quadrature of e[omega.s] psi_type(s - t) over one placed tile in absolute
// coordinates (no phase factorization).
std::complex<double> tile_twisted_quadrature(const tiling::SubstitutionRule& rule,
                                             const CylindricalFunction& f,
                                             const tiling::PlacedTile& tile, const Vec& omega);
std::complex<double> twisted_integral_oracle_over(const tiling::SubstitutionRule& rule,
                                                  const CylindricalFunction& f,
                                                  const tiling::Patch& cube_patch,
                                                  const Vec& omega);

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

// Quadratic-mean estimator: windows of side R (so the constant function
// reproduces the Fejer kernel exactly), averaged over a low-discrepancy set of
// translations inside an ambient cube patch.
Estimate g_r_estimate(const tiling::SubstitutionRule& rule, const CylindricalFunction& f, double R,
                      const Vec& omega, int sample_count);

struct SpectralEstimate {
  Vec omega;
  double r = 0.0;
  double R = 0.0;            // dual scale, r = 1/(2R)
  double g_r = 0.0;          // estimated quadratic mean
  double bound = 0.0;        // (pi^{2d}/(4R)^d) * g_r
  double std_error = 0.0;    // propagated estimator standard error
};

SpectralEstimate sigma_box_bound(const tiling::SubstitutionRule& rule, const CylindricalFunction& f,
                                 const Vec& omega, double r, int sample_count = 256);

// Spatial correlation <f o phi_s, g> over C_T and its Cesaro mean over C_R.
std::complex<double> correlation(const tiling::SubstitutionRule& rule, const CylindricalFunction& f,
                                 const CylindricalFunction& g, const Vec& s, double T);
double cesaro_correlation(const tiling::SubstitutionRule& rule, const CylindricalFunction& f,
                          const CylindricalFunction& g, double R, double T = -1.0);

// Grid pitch used by the correlation quadrature (power of two below
// min-inradius/4, so dyadic window sizes align with the grid).
double correlation_pitch(const tiling::SubstitutionRule& rule);

}  // namespace aps::birkhoff
