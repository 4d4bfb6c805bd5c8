#pragma once

#include <optional>
#include <string>
#include <vector>

#include "aps/algebraic.hpp"
#include "aps/util.hpp"

namespace aps::tiling {

// ---------------------------------------------------------------------------
// Polytope supports: an interval for d = 1 (two vertices, y == 0) or a convex
// CCW polygon for d = 2.
// ---------------------------------------------------------------------------

struct Support {
  int d = 1;
  std::vector<Vec> vertices;

  double volume() const;    // length / area
  double diameter() const;  // max pairwise vertex distance
  // Diameter of a ball guaranteed to fit inside (exact for intervals and
  // axis-aligned boxes, a centroid-based lower bound for general polygons).
  double inscribed_diameter() const;
  Vec centroid() const;
  void bbox(Vec& lo, Vec& hi) const;
  bool contains(const Vec& p, double tol) const;        // closed support
  bool strictly_inside(const Vec& p, double margin) const;
  bool inside_box(const Vec& lo, const Vec& hi, double tol) const;
  bool is_axis_box() const;
  Support transformed(const Mat& m) const;  // orientation re-fixed to CCW
  Support translated(const Vec& t) const;
};

// Gap between two supports (0 when they overlap or touch).
double support_distance(const Support& a, const Support& b);

// Clip a support to an axis-aligned box; empty result has no vertices.
Support clip_to_box(const Support& s, const Vec& lo, const Vec& hi);

// ---------------------------------------------------------------------------
// Rules and patches
// ---------------------------------------------------------------------------

struct Prototile {
  int id = 0;
  std::string label;  // "a", "b", ... for reporting
  Support support;
  Vec puncture;
  double volume = 0.0;  // derived at construction
};

struct Child {
  int type = 0;
  Vec displacement;
};

struct SubstitutionRule {
  std::string name;
  int d = 1;
  Mat expansion;
  std::vector<Prototile> prototiles;
  std::vector<std::vector<Child>> children;  // per parent type
  int seed = 0;

  int type_count() const { return static_cast<int>(prototiles.size()); }
};

struct PlacedTile {
  int type = 0;
  Vec translation;
};

struct InstanceRange {
  int type = 0;
  Vec translation;
  int begin = 0;  // tile index range in the generating supertile
  int end = 0;
};

// A finite patch. When generated with genealogy, `instances[k-1]` lists the
// order-k supertile instances of the generating supertile and `src_index`
// maps each tile back into it.
struct Patch {
  std::vector<PlacedTile> tiles;
  int provenance_levels = 0;
  std::vector<std::vector<InstanceRange>> instances;
  std::vector<int> src_index;

  bool has_provenance() const { return provenance_levels > 0; }
};

struct GeometryStats {
  double d_max = 0.0;   // max prototile support diameter
  double d_min = 0.0;   // inscribed-ball diameter guaranteed for every prototile
  double v_min = 0.0;   // min prototile volume
  double theta = 0.0;   // Perron-Frobenius eigenvalue of the substitution matrix
};

struct PrimitivityResult {
  bool primitive = false;
  int exponent = 0;  // witnessing power when primitive
};

struct GeneratorData {
  std::vector<Vec> generators;  // columns of V
  algebraic::IntMatrix m;       // N x N integer matrix with L V = V M
  double residual = 0.0;        // max-norm of L V - V M
};

struct GoodReturnVector {
  Vec v;
  std::vector<int> types;  // prototile types realizing v inside every first-order image
};

struct FixedPointConfig {
  SubstitutionRule powered;
  int power = 1;
  std::vector<int> choice;   // chosen child index per type, for `powered`
  std::vector<Vec> control;  // control points of `powered`
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

GeometryStats validate(const SubstitutionRule& rule);

algebraic::IntMatrix substitution_matrix(const SubstitutionRule& rule);

PrimitivityResult is_primitive(const algebraic::IntMatrix& s);

// Exact tile count of zeta^n(T_j) (column sum of S^n).
mpz_class supertile_count(const SubstitutionRule& rule, int type, int n);

Patch supertile(const SubstitutionRule& rule, int type, int n, bool with_provenance = false,
                std::size_t tile_budget = 20'000'000);

SubstitutionRule rule_power(const SubstitutionRule& rule, int p);

std::vector<Vec> control_points(const SubstitutionRule& rule, const std::vector<int>& choice);

// Smallest power whose seed admits a self-nested child with a strictly
// interior control point; backs every fixed-point patch construction.
FixedPointConfig fixed_point_config(const SubstitutionRule& rule, int max_power = 8);

// Sub-patch of the recentered fixed-point supertile fully inside [-R, R]^d.
// `n` is the supertile order of the powered rule from fixed_point_config.
Patch patch_in_cube(const SubstitutionRule& rule, int n, double R);

// Cube patch at the minimal order that covers C_R; returns the config used.
Patch patch_in_cube_auto(const SubstitutionRule& rule, double R, FixedPointConfig* config_out = nullptr,
                         int* order_out = nullptr);

struct TowerLayer {
  int order = 0;
  std::vector<PlacedTile> supertiles;            // order-k instances (type + translation)
  std::vector<std::vector<int>> tile_indices;    // patch tile indices per instance
};

std::vector<TowerLayer> tower_decompose(const SubstitutionRule& rule, const Patch& patch);

std::vector<Vec> adjacency_differences(const SubstitutionRule& rule, const Patch& patch);

std::vector<GoodReturnVector> good_return_vectors(const SubstitutionRule& rule);

GeneratorData generator_data(const SubstitutionRule& rule, const std::vector<Vec>& generators);

// Express w as an integer combination of the generators (bounded search over
// the excess dimensions); nullopt when no combination matches.
std::optional<std::vector<long>> integer_coordinates(const std::vector<Vec>& generators, int d,
                                                     const Vec& w, long bound = 64,
                                                     double tol = 1e-6);

// Greedy Z-basis of the group generated by a finite difference set.
std::vector<Vec> reduce_generators(const std::vector<Vec>& diffs, int d);

// Cartesian product of two 1-d rules (first factor on the x axis).
SubstitutionRule product_rule(const SubstitutionRule& a, const SubstitutionRule& b,
                              const std::string& name);

}  // namespace aps::tiling
