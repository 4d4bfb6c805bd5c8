#include "aps/fixtures.hpp"

#include <cmath>

#include "json.hpp"

namespace aps::fixtures {

using tiling::Child;
using tiling::Prototile;
using tiling::SubstitutionRule;

SubstitutionRule two_letter_rule(const std::string& name, int k) {
  // a -> a b^k, b -> a; lengths (lambda, 1) with lambda^2 = lambda + k.
  const double lambda = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * k));
  SubstitutionRule rule;
  rule.name = name;
  rule.d = 1;
  rule.expansion = Mat::diag(lambda);
  Prototile a;
  a.id = 0;
  a.label = "a";
  a.support.d = 1;
  a.support.vertices = {Vec{0.0}, Vec{lambda}};
  a.puncture = Vec{0.0};
  a.volume = lambda;
  Prototile b;
  b.id = 1;
  b.label = "b";
  b.support.d = 1;
  b.support.vertices = {Vec{0.0}, Vec{1.0}};
  b.puncture = Vec{0.0};
  b.volume = 1.0;
  rule.prototiles = {a, b};
  std::vector<Child> childrenA{{0, Vec{0.0}}};
  for (int i = 0; i < k; ++i) childrenA.push_back({1, Vec{lambda + i}});
  rule.children = {childrenA, {{0, Vec{0.0}}}};
  rule.seed = 0;
  return rule;
}

SubstitutionRule get(const std::string& name) {
  if (name == "fib") return two_letter_rule("fib", 1);
  if (name == "np13") return two_letter_rule("np13", 3);
  if (name == "np21") return two_letter_rule("np21", 5);
  if (name == "npprod")
    return tiling::product_rule(two_letter_rule("np13", 3), two_letter_rule("np21", 5), "npprod");
  if (name == "isoprod")
    return tiling::product_rule(two_letter_rule("np13", 3), two_letter_rule("np13", 3), "isoprod");
  throw Error("unknown fixture: " + name);
}

std::vector<std::string> names() { return {"fib", "np13", "np21", "npprod", "isoprod"}; }

// ---------------------------------------------------------------------------
// JSON rule files. Numbers are doubles, decimal strings, or exact quadratic
// expressions {"quadratic": [p, q, r]} meaning (p + q*sqrt(r)) / 2.
// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

double parse_number(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return std::stod(j.get<std::string>());
  if (j.is_object() && j.contains("quadratic")) {
    const auto& q = j.at("quadratic");
    if (!q.is_array() || q.size() != 3) throw Error("quadratic expression needs [p, q, r]");
    const double p = q[0].get<double>();
    const double c = q[1].get<double>();
    const double r = q[2].get<double>();
    if (r < 0) throw Error("quadratic radicand must be nonnegative");
    return 0.5 * (p + c * std::sqrt(r));
  }
  throw Error("unrecognized number encoding in rule file");
}

Vec parse_vec(const json& j, int d) {
  if (!j.is_array() || static_cast<int>(j.size()) != d) throw Error("vector arity mismatch");
  Vec v;
  v.x = parse_number(j[0]);
  if (d == 2) v.y = parse_number(j[1]);
  return v;
}

nlohmann::ordered_json vec_to_json(const Vec& v, int d) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  out.push_back(v.x);
  if (d == 2) out.push_back(v.y);
  return out;
}

}  // namespace

SubstitutionRule rule_from_json(const std::string& text) {
  const json doc = json::parse(text);
  SubstitutionRule rule;
  rule.name = doc.value("name", "rule");
  rule.d = doc.at("dimension").get<int>();
  if (rule.d != 1 && rule.d != 2) throw Error("rule file: dimension must be 1 or 2");

  const auto& exp = doc.at("expansion");
  if (!exp.is_array() || static_cast<int>(exp.size()) != rule.d * rule.d)
    throw Error("rule file: expansion must be row-major with d*d entries");
  rule.expansion.d = rule.d;
  for (int i = 0; i < rule.d; ++i)
    for (int j = 0; j < rule.d; ++j) rule.expansion.a[i][j] = parse_number(exp[i * rule.d + j]);

  int id = 0;
  for (const auto& pj : doc.at("prototiles")) {
    Prototile t;
    t.id = id;
    t.label = pj.value("label", std::string(1, static_cast<char>('a' + id)));
    t.support.d = rule.d;
    for (const auto& vj : pj.at("vertices")) t.support.vertices.push_back(parse_vec(vj, rule.d));
    t.puncture = parse_vec(pj.at("puncture"), rule.d);
    t.volume = t.support.volume();
    rule.prototiles.push_back(t);
    ++id;
  }

  for (const auto& parent : doc.at("children")) {
    std::vector<Child> list;
    for (const auto& cj : parent) {
      Child c;
      c.type = cj.at("type").get<int>();
      c.displacement = parse_vec(cj.at("displacement"), rule.d);
      list.push_back(c);
    }
    rule.children.push_back(std::move(list));
  }
  rule.seed = doc.value("seed", 0);
  return rule;
}

std::string rule_to_json(const SubstitutionRule& rule) {
  using nlohmann::ordered_json;
  ordered_json doc;
  doc["name"] = rule.name;
  doc["dimension"] = rule.d;
  ordered_json exp = ordered_json::array();
  for (int i = 0; i < rule.d; ++i)
    for (int j = 0; j < rule.d; ++j) exp.push_back(rule.expansion.a[i][j]);
  doc["expansion"] = exp;
  doc["prototiles"] = ordered_json::array();
  for (const Prototile& t : rule.prototiles) {
    ordered_json pj;
    pj["label"] = t.label;
    pj["vertices"] = ordered_json::array();
    for (const Vec& v : t.support.vertices) pj["vertices"].push_back(vec_to_json(v, rule.d));
    pj["puncture"] = vec_to_json(t.puncture, rule.d);
    doc["prototiles"].push_back(pj);
  }
  doc["children"] = ordered_json::array();
  for (const auto& parent : rule.children) {
    ordered_json list = ordered_json::array();
    for (const Child& c : parent) {
      ordered_json cj;
      cj["type"] = c.type;
      cj["displacement"] = vec_to_json(c.displacement, rule.d);
      list.push_back(cj);
    }
    doc["children"].push_back(list);
  }
  doc["seed"] = rule.seed;
  return doc.dump(2);
}

}  // namespace aps::fixtures
