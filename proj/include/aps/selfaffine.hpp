#pragma once

#include <complex>

#include "aps/birkhoff.hpp"
#include "aps/tiling.hpp"

namespace aps::selfaffine {

struct DeformationData {
  int d = 1;
  Mat a;                 // exp(a) = L
  double sigma = 0.0;    // d / log(det L)
  double norm_a = 0.0;   // operator sup-norm of a
  bool auto_squared = false;
};

// Principal matrix logarithm of the expansion. Throws when L has an
// eigenvalue on the closed negative real axis or det(L) <= 0.
DeformationData matrix_log(const Mat& l);

// Deformation for a rule; squares the rule transparently when L has a
// negative real eigenvalue (flag recorded in the result).
struct RuleDeformation {
  DeformationData data;
  tiling::SubstitutionRule rule;  // the effective (possibly squared) rule
};
RuleDeformation deformation_for_rule(const tiling::SubstitutionRule& rule);

// g_t = exp(t a)
Mat flow(const DeformationData& def, double t);

// B_R = g_{sigma log R} C_1 as a vertex list; Vol(B_R) = R^d Vol(C_1).
tiling::Support domain_B(const DeformationData& def, double R);

std::complex<double> twisted_integral_deformed(const tiling::SubstitutionRule& rule,
                                               const DeformationData& def,
                                               const birkhoff::CylindricalFunction& f, double R,
                                               const Vec& omega);

std::complex<double> twisted_integral_deformed_oracle(const tiling::SubstitutionRule& rule,
                                                      const DeformationData& def,
                                                      const birkhoff::CylindricalFunction& f,
                                                      double R, const Vec& omega);

birkhoff::Estimate g_tilde(const tiling::SubstitutionRule& rule, const DeformationData& def,
                           const birkhoff::CylindricalFunction& f, double R, const Vec& omega,
                           int sample_count);

// M_r = 2r g^T_{-sigma log(2r)}
Mat deformation_matrix(const DeformationData& def, double r);

struct DeformedBox {
  tiling::Support box;          // M_r^{-1} C^omega_r
  bool inscribed_cube_ok = false;  // C_{r^{sigma |a|}} subset of M_r^{-1} C^0_r, vertexwise
  double inscribed_half = 0.0;     // r^{sigma |a|}
};
DeformedBox deformed_box(const DeformationData& def, const Vec& omega, double r);

}  // namespace aps::selfaffine
