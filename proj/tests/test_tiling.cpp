#include "doctest.h"

#include <cmath>
#include <set>

#include "aps/fixtures.hpp"
#include "aps/tiling.hpp"

using namespace aps;
using namespace aps::tiling;

namespace {

const double kLambda13 = 0.5 * (1.0 + std::sqrt(13.0));
const double kPhi = 0.5 * (1.0 + std::sqrt(5.0));

bool has_tile(const Patch& patch, int type, double x, double tol = 1e-9) {
  for (const auto& t : patch.tiles)
    if (t.type == type && std::abs(t.translation.x - x) <= tol) return true;
  return false;
}

}  // namespace

TEST_CASE("validate accepts the fixtures and computes stats") {
  for (const std::string& name : fixtures::names()) {
    const SubstitutionRule rule = fixtures::get(name);
    const GeometryStats stats = validate(rule);
    CHECK(stats.theta == doctest::Approx(std::abs(rule.expansion.det())).epsilon(1e-9));
    CHECK(stats.v_min > 0);
    CHECK(stats.d_max >= stats.d_min);
  }
}

TEST_CASE("validate reports volume-identity violations with the parent") {
  // np13 with the b tile stretched to length 1.1
  SubstitutionRule broken = fixtures::get("np13");
  broken.prototiles[1].support.vertices[1] = Vec{1.1};
  broken.prototiles[1].volume = 1.1;
  try {
    validate(broken);
    CHECK(false);
  } catch (const ValidationError& e) {
    bool parentA = false;
    for (const auto& issue : e.issues)
      if (issue.find("parent 0") != std::string::npos &&
          issue.find("volume identity") != std::string::npos)
        parentA = true;
    CHECK(parentA);
  }
}

TEST_CASE("substitution_matrix") {
  const auto s13 = substitution_matrix(fixtures::get("np13"));
  CHECK(s13 == algebraic::IntMatrix::from_ints(2, 2, {1, 1, 3, 0}));
  const auto sf = substitution_matrix(fixtures::get("fib"));
  CHECK(sf == algebraic::IntMatrix::from_ints(2, 2, {1, 1, 1, 0}));
  // product rule: Kronecker product of the factors
  const auto sp = substitution_matrix(fixtures::get("npprod"));
  const auto s21 = substitution_matrix(fixtures::get("np21"));
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      CHECK(sp.at(i, j) == s13.at(i / 2, j / 2) * s21.at(i % 2, j % 2));
}

TEST_CASE("is_primitive") {
  const auto res = is_primitive(algebraic::IntMatrix::from_ints(2, 2, {1, 1, 3, 0}));
  CHECK(res.primitive);
  CHECK(res.exponent == 2);
  CHECK_FALSE(is_primitive(algebraic::IntMatrix::identity(2)).primitive);
  CHECK_FALSE(is_primitive(algebraic::IntMatrix::from_ints(2, 2, {0, 1, 1, 0})).primitive);
}

TEST_CASE("supertile tiles and counts") {
  const SubstitutionRule np13 = fixtures::get("np13");
  const Patch first = supertile(np13, 0, 1);
  REQUIRE(first.tiles.size() == 4);
  CHECK(has_tile(first, 0, 0.0));
  CHECK(has_tile(first, 1, kLambda13));
  CHECK(has_tile(first, 1, kLambda13 + 1.0));
  CHECK(has_tile(first, 1, kLambda13 + 2.0));

  // zeta^2(b) = zeta(a)
  const Patch b2 = supertile(np13, 1, 2);
  REQUIRE(b2.tiles.size() == first.tiles.size());
  for (const auto& t : first.tiles) CHECK(has_tile(b2, t.type, t.translation.x));

  CHECK(supertile(np13, 0, 3).tiles.size() == 19);
  CHECK(supertile(np13, 0, 0).tiles.size() == 1);

  // exact count identity over all fixtures
  for (const std::string& name : fixtures::names()) {
    const SubstitutionRule rule = fixtures::get(name);
    const int maxOrder = rule.d == 1 ? 8 : 6;
    for (int type = 0; type < rule.type_count(); ++type)
      for (int n = 0; n <= maxOrder; ++n)
        CHECK(mpz_class(supertile(rule, type, n).tiles.size()) ==
              supertile_count(rule, type, n));
  }
}

TEST_CASE("supertile volume conservation") {
  for (const std::string& name : {"np13", "fib", "npprod"}) {
    const SubstitutionRule rule = fixtures::get(name);
    const double det = std::abs(rule.expansion.det());
    for (int n = 1; n <= (rule.d == 1 ? 7 : 4); ++n) {
      const Patch patch = supertile(rule, rule.seed, n);
      double total = 0.0;
      for (const auto& t : patch.tiles) total += rule.prototiles[t.type].volume;
      const double want = std::pow(det, n) * rule.prototiles[rule.seed].volume;
      CHECK(std::abs(total - want) <= 1e-9 * n * want);
    }
  }
}

TEST_CASE("supertile budget") {
  CHECK_THROWS_AS(supertile(fixtures::get("np13"), 0, 30, false, 1000), ResourceError);
}

TEST_CASE("rule_power") {
  const SubstitutionRule fib = fixtures::get("fib");
  const SubstitutionRule fib2 = rule_power(fib, 2);
  // zeta^2(a) = a b a with the middle b at phi and the second a at phi + 1
  REQUIRE(fib2.children[0].size() == 3);
  bool a0 = false, bPhi = false, aPhi1 = false;
  for (const auto& c : fib2.children[0]) {
    if (c.type == 0 && std::abs(c.displacement.x) < 1e-12) a0 = true;
    if (c.type == 1 && std::abs(c.displacement.x - kPhi) < 1e-12) bPhi = true;
    if (c.type == 0 && std::abs(c.displacement.x - (kPhi + 1.0)) < 1e-12) aPhi1 = true;
  }
  CHECK(a0);
  CHECK(bPhi);
  CHECK(aPhi1);

  const SubstitutionRule np13 = fixtures::get("np13");
  CHECK(substitution_matrix(rule_power(np13, 2)) ==
        algebraic::IntMatrix::from_ints(2, 2, {4, 1, 3, 3}));
  // powers compose with the substitution matrix exactly
  for (int p = 1; p <= 4; ++p) {
    algebraic::IntMatrix want = algebraic::IntMatrix::identity(2);
    for (int k = 0; k < p; ++k) want = want.mul(substitution_matrix(np13));
    CHECK(substitution_matrix(rule_power(np13, p)) == want);
  }
}

TEST_CASE("patch_in_cube") {
  const SubstitutionRule np13 = fixtures::get("np13");
  FixedPointConfig cfg;
  int order = 0;
  const Patch patch = patch_in_cube_auto(np13, 3.0, &cfg, &order);
  CHECK(cfg.power == 2);
  REQUIRE(!patch.tiles.empty());
  double lo = 1e300, hi = -1e300;
  for (const auto& t : patch.tiles) {
    const Support s = np13.prototiles[t.type].support.translated(t.translation);
    lo = std::min(lo, s.vertices[0].x);
    hi = std::max(hi, s.vertices[1].x);
    CHECK(s.vertices[0].x >= -3.0 - 1e-9);
    CHECK(s.vertices[1].x <= 3.0 + 1e-9);
  }
  // nothing omitted: the uncovered margin at either end is shorter than the
  // longest tile
  const double lambda = 0.5 * (1.0 + std::sqrt(13.0));
  CHECK(lo <= -3.0 + lambda);
  CHECK(hi >= 3.0 - lambda);

  // coverage error announces the minimal order
  try {
    patch_in_cube(np13, 0, 100.0);
    CHECK(false);
  } catch (const CoverageError& e) {
    CHECK(e.minimal_n > 0);
    CHECK_NOTHROW(patch_in_cube(np13, e.minimal_n, 100.0));
  }

  // fib: tile count in C_R equals the count from the fixed-point word
  const SubstitutionRule fib = fixtures::get("fib");
  const Patch fibPatch = patch_in_cube_auto(fib, kPhi * kPhi);
  double covered = 0.0;
  for (const auto& t : fibPatch.tiles) covered += fib.prototiles[t.type].volume;
  CHECK(covered <= 2.0 * kPhi * kPhi);
  CHECK(covered >= 2.0 * kPhi * kPhi - 2.0 * kPhi);
}

TEST_CASE("tower_decompose") {
  const SubstitutionRule np13sq = rule_power(fixtures::get("np13"), 2);

  // exactly an order-2 supertile
  const Patch whole = supertile(np13sq, 0, 2, true);
  const auto layers = tower_decompose(np13sq, whole);
  REQUIRE(layers.size() == 3);
  CHECK(layers[2].supertiles.size() == 1);
  CHECK(layers[1].supertiles.empty());
  CHECK(layers[0].supertiles.empty());

  // drop one tile: the top layer disappears and the counts still add up
  Patch chipped = whole;
  chipped.tiles.pop_back();
  chipped.src_index.pop_back();
  const auto chippedLayers = tower_decompose(np13sq, chipped);
  CHECK(chippedLayers[2].supertiles.empty());
  std::size_t counted = 0;
  std::set<int> seen;
  for (const auto& layer : chippedLayers)
    for (const auto& indices : layer.tile_indices)
      for (int idx : indices) {
        counted++;
        CHECK(seen.insert(idx).second);  // layers are disjoint
      }
  CHECK(counted == chipped.tiles.size());

  // single-tile patch sits in layer zero
  Patch single = whole;
  single.tiles.resize(1);
  single.src_index.resize(1);
  const auto singleLayers = tower_decompose(np13sq, single);
  CHECK(singleLayers[0].supertiles.size() == 1);

  // reassembly: layer-k instances expand to exactly the patch tiles
  const Patch cube = patch_in_cube_auto(np13sq, 30.0);
  const auto cubeLayers = tower_decompose(np13sq, cube);
  std::vector<PlacedTile> rebuilt;
  for (const auto& layer : cubeLayers) {
    for (const auto& inst : layer.supertiles) {
      if (layer.order == 0) {
        rebuilt.push_back(inst);
        continue;
      }
      for (const auto& t : supertile(np13sq, inst.type, layer.order).tiles)
        rebuilt.push_back({t.type, t.translation + inst.translation});
    }
  }
  REQUIRE(rebuilt.size() == cube.tiles.size());
  for (const auto& t : cube.tiles) {
    bool found = false;
    for (const auto& r : rebuilt)
      if (r.type == t.type && std::abs(r.translation.x - t.translation.x) < 1e-9) found = true;
    CHECK(found);
  }
}

TEST_CASE("adjacency_differences") {
  const SubstitutionRule np13 = fixtures::get("np13");
  const auto adj = adjacency_differences(np13, supertile(np13, 0, 1));
  auto contains = [&](double v) {
    for (const Vec& w : adj)
      if (std::abs(w.x - v) < 1e-9) return true;
    return false;
  };
  CHECK(contains(kLambda13));
  CHECK(contains(-kLambda13));
  CHECK(contains(1.0));
  CHECK(contains(-1.0));

  Patch single;
  single.tiles.push_back({0, Vec{}});
  CHECK(adjacency_differences(np13, single).empty());

  const SubstitutionRule fib = fixtures::get("fib");
  const auto adjF = adjacency_differences(fib, supertile(fib, 0, 2));
  auto containsF = [&](double v) {
    for (const Vec& w : adjF)
      if (std::abs(w.x - v) < 1e-9) return true;
    return false;
  };
  CHECK(containsF(kPhi));
  CHECK(containsF(-kPhi));
}

TEST_CASE("good_return_vectors") {
  const SubstitutionRule np13 = fixtures::get("np13");
  CHECK(good_return_vectors(np13).empty());
  const auto good = good_return_vectors(rule_power(np13, 2));
  bool hasOne = false;
  for (const auto& g : good)
    if (std::abs(g.v.x - 1.0) < 1e-9) {
      hasOne = true;
      CHECK(g.types == std::vector<int>{1});
    }
  CHECK(hasOne);
}

TEST_CASE("control_points") {
  const SubstitutionRule np13 = fixtures::get("np13");
  // choosing the a-child at 0 for both types pins every control point at 0
  const auto trivial = control_points(np13, {0, 0});
  CHECK(std::abs(trivial[0].x) < 1e-12);
  CHECK(std::abs(trivial[1].x) < 1e-12);

  // fib with choice b@phi for a and a@0 for b
  const SubstitutionRule fib = fixtures::get("fib");
  const auto points = control_points(fib, {1, 0});
  // p_a = (phi + p_b)/phi, p_b = p_a/phi  =>  p_a = phi^2/(phi^2 - 1) ... solve directly
  const double pa = points[0].x, pb = points[1].x;
  CHECK(std::abs(pa - (kPhi + pb) / kPhi) < 1e-12);
  CHECK(std::abs(pb - pa / kPhi) < 1e-12);

  // determinism
  const auto again = control_points(fib, {1, 0});
  CHECK(again[0].x == points[0].x);
  CHECK(again[1].x == points[1].x);
}

TEST_CASE("generator_data") {
  const SubstitutionRule np13 = fixtures::get("np13");
  const auto gd = generator_data(np13, {Vec{1.0}, Vec{kLambda13}});
  CHECK(gd.m == algebraic::IntMatrix::from_ints(2, 2, {0, 3, 1, 1}));
  CHECK(gd.residual <= 1e-8);

  const SubstitutionRule fib = fixtures::get("fib");
  const auto gdF = generator_data(fib, {Vec{1.0}, Vec{kPhi}});
  CHECK(gdF.m == algebraic::IntMatrix::from_ints(2, 2, {0, 1, 1, 1}));

  // integer expansion with a single generator
  SubstitutionRule doubling = fixtures::get("np13");
  doubling.expansion = Mat::diag(2.0);
  const auto gd2 = generator_data(doubling, {Vec{1.0}});
  CHECK(gd2.m == algebraic::IntMatrix::from_ints(1, 1, {2}));

  // char_poly(M) contains the minimal polynomial of the expansion eigenvalue
  const auto cp = algebraic::char_poly(gd.m);
  const auto fact = algebraic::irreducible_factors(cp);
  bool hasMinPoly = false;
  for (const auto& [f, mult] : fact.factors)
    if (f == algebraic::IntPolynomial::from_ints({-3, -1, 1})) hasMinPoly = true;
  CHECK(hasMinPoly);

  CHECK_THROWS_AS(generator_data(np13, {Vec{1.0}}), NonIntegralityError);
}

TEST_CASE("rule JSON round trip and quadratic literals") {
  const SubstitutionRule np13 = fixtures::get("np13");
  const SubstitutionRule back = fixtures::rule_from_json(fixtures::rule_to_json(np13));
  CHECK(back.d == np13.d);
  CHECK(back.expansion.a[0][0] == np13.expansion.a[0][0]);
  REQUIRE(back.children.size() == np13.children.size());
  for (std::size_t j = 0; j < back.children.size(); ++j) {
    REQUIRE(back.children[j].size() == np13.children[j].size());
    for (std::size_t c = 0; c < back.children[j].size(); ++c)
      CHECK(back.children[j][c].displacement.x ==
            doctest::Approx(np13.children[j][c].displacement.x).epsilon(1e-15));
  }

  const std::string quadratic = R"({
    "name": "mini",
    "dimension": 1,
    "expansion": [{"quadratic": [1, 1, 13]}],
    "prototiles": [
      {"label": "a", "vertices": [[0], [{"quadratic": [1, 1, 13]}]], "puncture": [0]},
      {"label": "b", "vertices": [[0], [1]], "puncture": [0]}
    ],
    "children": [
      [{"type": 0, "displacement": [0]},
       {"type": 1, "displacement": [{"quadratic": [1, 1, 13]}]},
       {"type": 1, "displacement": [{"quadratic": [3, 1, 13]}]},
       {"type": 1, "displacement": [{"quadratic": [5, 1, 13]}]}],
      [{"type": 0, "displacement": [0]}]
    ],
    "seed": 0
  })";
  const SubstitutionRule mini = fixtures::rule_from_json(quadratic);
  CHECK(mini.expansion.a[0][0] == doctest::Approx(kLambda13).epsilon(1e-15));
  CHECK_NOTHROW(validate(mini));
}
