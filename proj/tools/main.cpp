#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "aps/birkhoff.hpp"
#include "aps/cocycle.hpp"
#include "aps/fixtures.hpp"
#include "aps/selfaffine.hpp"
#include "aps/tiling.hpp"
#include "aps/weakmixing.hpp"

namespace {

using namespace aps;

struct RuleSource {
  std::string fixture;
  std::string rule_path;
  int power = 1;
};

tiling::SubstitutionRule load_rule(const RuleSource& src) {
  tiling::SubstitutionRule rule;
  if (!src.rule_path.empty()) {
    std::ifstream in(src.rule_path);
    if (!in) throw Error("cannot open rule file: " + src.rule_path);
    std::stringstream buf;
    buf << in.rdbuf();
    rule = fixtures::rule_from_json(buf.str());
  } else if (!src.fixture.empty()) {
    rule = fixtures::get(src.fixture);
  } else {
    throw Error("no rule given: use --fixture or --rule");
  }
  if (src.power > 1) rule = tiling::rule_power(rule, src.power);
  return rule;
}

void add_rule_options(CLI::App* cmd, RuleSource& src) {
  cmd->add_option("--fixture", src.fixture, "embedded fixture name (fib, np13, np21, npprod, isoprod)");
  cmd->add_option("--rule", src.rule_path, "rule file (JSON)");
  cmd->add_option("--power", src.power, "replace the rule by its p-th power")->default_val(1);
}

void write_output(const std::string& out_path, const std::string& content) {
  if (out_path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw Error("cannot open output file: " + out_path);
  out << content;
}

// Values like "0.37", "2^-5"; ranges "a..b" step dyadically from a toward b.
double parse_value(const std::string& text) {
  const auto caret = text.find("^");
  if (caret != std::string::npos) {
    const double base = std::stod(text.substr(0, caret));
    const double exp = std::stod(text.substr(caret + 1));
    return std::pow(base, exp);
  }
  return std::stod(text);
}

std::vector<double> parse_value_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      out.push_back(parse_value(item));
      continue;
    }
    const double a = parse_value(item.substr(0, dots));
    const double b = parse_value(item.substr(dots + 2));
    if (a <= 0 || b <= 0) throw Error("dyadic range endpoints must be positive: " + item);
    double v = a;
    if (a <= b) {
      for (; v <= b * (1 + 1e-12); v *= 2.0) out.push_back(v);
    } else {
      for (; v >= b * (1 - 1e-12); v *= 0.5) out.push_back(v);
    }
  }
  return out;
}

struct OmegaGrid {
  double a = 0.0, b = 0.0, pitch = 0.0;
  bool present = false;
  std::vector<double> points() const {
    std::vector<double> out;
    if (pitch <= 0) throw Error("omega grid pitch must be positive");
    const long k0 = static_cast<long>(std::ceil(a / pitch - 1e-9));
    const long k1 = static_cast<long>(std::floor(b / pitch + 1e-9));
    for (long k = k0; k <= k1; ++k) out.push_back(k * pitch);
    return out;
  }
};

OmegaGrid parse_omega_grid(const std::string& text) {
  OmegaGrid grid;
  std::stringstream ss(text);
  std::string a, b, p;
  if (!std::getline(ss, a, ':') || !std::getline(ss, b, ':') || !std::getline(ss, p, ':'))
    throw Error("omega grid must be a:b:pitch");
  grid.a = parse_value(a);
  grid.b = parse_value(b);
  grid.pitch = parse_value(p);
  grid.present = true;
  return grid;
}

std::string csv_row(const std::vector<std::string>& cells) {
  std::string row;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) row += ",";
    row += cells[i];
  }
  row += "\n";
  return row;
}

std::string fd(double v) { return format_double(v); }

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

int cmd_validate(const RuleSource& src) {
  tiling::SubstitutionRule rule;
  try {
    rule = load_rule(src);
    const tiling::GeometryStats stats = tiling::validate(rule);
    std::cout << "rule " << rule.name << ": valid\n";
    std::cout << "  types " << rule.type_count() << ", dimension " << rule.d << "\n";
    std::cout << "  theta " << fd(stats.theta) << " (= det L)\n";
    std::cout << "  D_max " << fd(stats.d_max) << ", D_min " << fd(stats.d_min) << ", V_min "
              << fd(stats.v_min) << "\n";
    return 0;
  } catch (const ValidationError& e) {
    std::cout << "rule invalid: " << e.what() << "\n";
    for (const std::string& issue : e.issues) std::cout << "  - " << issue << "\n";
    return 2;
  }
}

int cmd_classify(const RuleSource& src, bool assertAperiodic, bool assertInjective,
                 const std::string& out_path) {
  const tiling::SubstitutionRule rule = load_rule(src);
  weakmixing::Assertions assertions{assertAperiodic, assertInjective};
  const weakmixing::WeakMixingVerdict verdict = weakmixing::classify_substitution(rule, assertions);

  nlohmann::ordered_json doc;
  doc["schema_version"] = 1;
  doc["rule"] = rule.name;
  doc["primitive"] = verdict.primitive;
  doc["primitivity_exponent"] = verdict.primitivity_exponent;
  doc["diagonalizable"] = verdict.diagonalizable;
  doc["assertions"] = {{"aperiodic", assertions.aperiodic}, {"injective", assertions.injective}};
  doc["groups"] = nlohmann::ordered_json::array();
  for (std::size_t g = 0; g < verdict.algebraic.groups.size(); ++g) {
    const auto& group = verdict.algebraic.groups[g];
    nlohmann::ordered_json gj;
    gj["min_poly"] = group.min_poly.to_string();
    gj["elements"] = nlohmann::ordered_json::array();
    for (std::size_t e = 0; e < group.elements.size(); ++e) {
      gj["elements"].push_back({{"re", group.elements[e].center.real()},
                                {"im", group.elements[e].center.imag()},
                                {"radius", group.elements[e].radius},
                                {"multiplicity", group.multiplicities[e]}});
    }
    gj["verdict"] = algebraic::verdict_name(verdict.algebraic.group_verdicts[g]);
    gj["strongly_non_pisot"] = static_cast<bool>(verdict.algebraic.group_strong[g]);
    doc["groups"].push_back(gj);
  }
  doc["classification"] = algebraic::verdict_name(verdict.algebraic.verdict);
  doc["perron_ok"] = verdict.algebraic.perron_ok;
  doc["verdict"] = verdict.verdict == weakmixing::Verdict::WEAKLY_MIXING_BY_THM
                       ? "WEAKLY_MIXING_BY_THM"
                       : "INCONCLUSIVE";
  doc["reason"] = verdict.reason;
  write_output(out_path, doc.dump(2) + "\n");
  return 0;
}

int cmd_supertile(const RuleSource& src, const std::string& type_label, int n,
                  const std::string& out_path) {
  const tiling::SubstitutionRule rule = load_rule(src);
  int type = 0;
  if (!type_label.empty()) {
    bool found = false;
    for (const auto& t : rule.prototiles)
      if (t.label == type_label || std::to_string(t.id) == type_label) {
        type = t.id;
        found = true;
      }
    if (!found) throw Error("unknown prototile: " + type_label);
  } else {
    type = rule.seed;
  }
  const tiling::Patch patch = tiling::supertile(rule, type, n);
  std::string csv = rule.d == 1 ? "type,label,x\n" : "type,label,x,y\n";
  for (const auto& tile : patch.tiles) {
    std::vector<std::string> cells{std::to_string(tile.type), rule.prototiles[tile.type].label,
                                   fd(tile.translation.x)};
    if (rule.d == 2) cells.push_back(fd(tile.translation.y));
    csv += csv_row(cells);
  }
  write_output(out_path, csv);
  return 0;
}

int cmd_cocycle_sweep(const RuleSource& src, const OmegaGrid& grid, int n, int threads,
                      const std::string& out_path) {
  const tiling::SubstitutionRule rule = load_rule(src);
  if (rule.d != 1) throw Error("cocycle-sweep omega grid is one-dimensional; use d = 1 rules");
  const auto good = tiling::good_return_vectors(rule);
  const double mass = cocycle::mass_constant(rule);
  const auto points = grid.present ? grid.points() : std::vector<double>{};
  const mpz_class maxCountZ = [&] {
    mpz_class best = 0;
    for (int j = 0; j < rule.type_count(); ++j)
      best = std::max(best, tiling::supertile_count(rule, j, n));
    return best;
  }();
  const double maxCount = maxCountZ.get_d();

  std::vector<std::string> rows(points.size());
  parallel_for(points.size(), resolve_thread_count(threads), [&](std::size_t i) {
    const Vec omega{points[i]};
    const cocycle::CocycleProduct prod = cocycle::cocycle_product(rule, n, omega);
    const cocycle::RieszBound bound = cocycle::riesz_bound(rule, n, omega, good, mass);
    const double piMax = prod.matrix.max_abs();
    const double ratio = piMax / (maxCount * bound.product);
    rows[i] = csv_row({fd(points[i]), std::to_string(n), fd(piMax), fd(bound.product), fd(ratio)});
  });
  std::string csv = "omega,n,pi_max,riesz_product,ratio\n";
  for (const std::string& row : rows) csv += row;
  write_output(out_path, csv);
  return 0;
}

int cmd_spectral_decay(const RuleSource& src, double omega, const std::vector<double>& rs,
                       int samples, int threads, const std::string& out_path) {
  const tiling::SubstitutionRule rule = load_rule(src);
  const birkhoff::CylindricalFunction f =
      birkhoff::zero_mean_project(birkhoff::hat_function(rule), rule);
  std::vector<std::string> rows(rs.size());
  std::vector<double> bounds(rs.size());
  parallel_for(rs.size(), resolve_thread_count(threads), [&](std::size_t i) {
    const birkhoff::SpectralEstimate est =
        birkhoff::sigma_box_bound(rule, f, Vec{omega}, rs[i], samples);
    bounds[i] = est.bound;
    rows[i] = csv_row({fd(rs[i]), fd(est.bound), fd(est.std_error), ""});
  });
  std::string csv = "r,bound,std_error,fitted_exponent\n";
  for (const std::string& row : rows) csv += row;
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < rs.size(); ++i) {
    if (bounds[i] > 0) {
      xs.push_back(std::log(std::log(1.0 / rs[i])));
      ys.push_back(std::log(bounds[i]));
    }
  }
  const double exponent = xs.size() >= 2 ? -ls_slope(xs, ys) : 0.0;
  csv += csv_row({"fit", "", "", fd(exponent)});
  write_output(out_path, csv);
  return 0;
}

int cmd_correlation_decay(const RuleSource& src, const std::vector<double>& Rs, int threads,
                          const std::string& out_path) {
  const tiling::SubstitutionRule rule = load_rule(src);
  const birkhoff::CylindricalFunction f =
      birkhoff::zero_mean_project(birkhoff::hat_function(rule), rule);
  std::vector<std::string> rows(Rs.size());
  std::vector<double> values(Rs.size());
  parallel_for(Rs.size(), resolve_thread_count(threads), [&](std::size_t i) {
    values[i] = birkhoff::cesaro_correlation(rule, f, f, Rs[i]);
    rows[i] = csv_row({fd(Rs[i]), fd(values[i]), fd(0.0), ""});
  });
  std::string csv = "R,cesaro,std_error,fitted_exponent\n";
  for (const std::string& row : rows) csv += row;
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < Rs.size(); ++i) {
    if (values[i] > 0) {
      xs.push_back(std::log(std::log(Rs[i])));
      ys.push_back(std::log(values[i]));
    }
  }
  const double exponent = xs.size() >= 2 ? -ls_slope(xs, ys) : 0.0;
  csv += csv_row({"fit", "", "", fd(exponent)});
  write_output(out_path, csv);
  return 0;
}

int cmd_epsilon(const RuleSource& src, double omega, int n, const std::string& search,
                const std::string& out_path) {
  const tiling::SubstitutionRule rule = load_rule(src);
  const tiling::GeneratorData gd = weakmixing::derive_generators(rule);
  if (!search.empty()) {
    const OmegaGrid grid = parse_omega_grid(search);
    const weakmixing::EigenvalueSearchResult result =
        weakmixing::eigenvalue_grid_search(gd, grid.a, grid.b, grid.pitch);
    std::string csv = "omega\n";
    for (double w : result.found) csv += csv_row({fd(w)});
    write_output(out_path, csv);
    return 0;
  }
  const weakmixing::EpsilonTrace trace = weakmixing::epsilon_trace(gd, Vec{omega}, n);
  std::string csv = "n";
  for (std::size_t i = 0; i < gd.generators.size(); ++i)
    csv += ",eps" + std::to_string(i + 1);
  csv += ",norm\n";
  for (std::size_t k = 0; k < trace.eps.size(); ++k) {
    std::vector<std::string> cells{std::to_string(k)};
    for (double v : trace.eps[k]) cells.push_back(fd(v));
    cells.push_back(fd(trace.max_norm[k]));
    csv += csv_row(cells);
  }
  write_output(out_path, csv);
  return 0;
}

int cmd_selfaffine_decay(const RuleSource& src, double omegaX, double omegaY,
                         const std::vector<double>& rs, int samples, int threads,
                         const std::string& out_path) {
  const tiling::SubstitutionRule base = load_rule(src);
  const selfaffine::RuleDeformation def = selfaffine::deformation_for_rule(base);
  const tiling::SubstitutionRule& rule = def.rule;
  const birkhoff::CylindricalFunction f =
      birkhoff::zero_mean_project(birkhoff::bump_function(rule), rule);
  const Vec omega{omegaX, rule.d == 2 ? omegaY : 0.0};

  struct Row {
    double cube = 0.0, cubeErr = 0.0, deformed = 0.0, deformedErr = 0.0;
  };
  std::vector<Row> data(rs.size());
  parallel_for(rs.size(), resolve_thread_count(threads), [&](std::size_t i) {
    const double R = 0.5 / rs[i];
    const birkhoff::SpectralEstimate cube = birkhoff::sigma_box_bound(rule, f, omega, rs[i], samples);
    const birkhoff::Estimate tilde = selfaffine::g_tilde(rule, def.data, f, R, omega, samples);
    const double scale =
        std::pow(M_PI * M_PI / (4.0 * R), rule.d) * std::pow(2.0, rule.d);
    data[i] = Row{cube.bound, cube.std_error, scale * tilde.value, scale * tilde.std_error};
  });
  std::string csv = "r,bound,std_error,domain,fitted_exponent\n";
  for (std::size_t i = 0; i < rs.size(); ++i)
    csv += csv_row({fd(rs[i]), fd(data[i].cube), fd(data[i].cubeErr), "cube", ""});
  for (std::size_t i = 0; i < rs.size(); ++i)
    csv += csv_row({fd(rs[i]), fd(data[i].deformed), fd(data[i].deformedErr), "deformed", ""});
  for (const char* domain : {"cube", "deformed"}) {
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < rs.size(); ++i) {
      const double v = std::string(domain) == "cube" ? data[i].cube : data[i].deformed;
      if (v > 0) {
        xs.push_back(std::log(std::log(1.0 / rs[i])));
        ys.push_back(std::log(v));
      }
    }
    const double exponent = xs.size() >= 2 ? -ls_slope(xs, ys) : 0.0;
    csv += csv_row({"fit", "", "", domain, fd(exponent)});
  }
  write_output(out_path, csv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"aperiodic-spectra: spectral experiments on substitution tilings"};
  app.require_subcommand(1);

  RuleSource src;
  std::string outPath;
  int threads = 0;

  auto* validate = app.add_subcommand("validate", "check a substitution rule");
  add_rule_options(validate, src);

  auto* classify = app.add_subcommand("classify", "algebraic spectrum + weak mixing verdict");
  add_rule_options(classify, src);
  bool assertAperiodic = false, assertInjective = false;
  classify->add_flag("--assert-aperiodic", assertAperiodic, "assert the substitution is aperiodic");
  classify->add_flag("--assert-injective", assertInjective, "assert the substitution is injective");
  classify->add_option("--out", outPath, "output path");

  auto* supertile = app.add_subcommand("supertile", "emit the tiles of zeta^n(T)");
  add_rule_options(supertile, src);
  std::string typeLabel;
  int stOrder = 1;
  supertile->add_option("--type", typeLabel, "prototile label or index (default: seed)");
  supertile->add_option("--n", stOrder, "substitution order")->default_val(1);
  supertile->add_option("--out", outPath, "output path");

  auto* sweep = app.add_subcommand("cocycle-sweep", "max |Pi_n| and Riesz bound over an omega grid");
  add_rule_options(sweep, src);
  std::string gridText;
  int sweepN = 8;
  sweep->add_option("--omega-grid", gridText, "a:b:pitch")->required();
  sweep->add_option("--n", sweepN, "cocycle order")->default_val(8);
  sweep->add_option("--threads", threads, "worker threads");
  sweep->add_option("--out", outPath, "output path");

  auto* spectral = app.add_subcommand("spectral-decay", "sigma box bound decay experiment");
  add_rule_options(spectral, src);
  double omega = 0.37;
  std::string rList = "2^-3..2^-10";
  int samples = 256;
  spectral->add_option("--omega", omega, "spectral parameter")->default_val(0.37);
  spectral->add_option("--r", rList, "box half-widths (dyadic range)");
  spectral->add_option("--samples", samples, "translation samples")->default_val(256);
  spectral->add_option("--threads", threads, "worker threads");
  spectral->add_option("--out", outPath, "output path");

  auto* corr = app.add_subcommand("correlation-decay", "Cesaro correlation decay experiment");
  add_rule_options(corr, src);
  std::string rListCorr = "16..4096";
  corr->add_option("--R", rListCorr, "window sizes (dyadic range)");
  corr->add_option("--threads", threads, "worker threads");
  corr->add_option("--out", outPath, "output path");

  auto* epsilon = app.add_subcommand("epsilon", "epsilon trace / eigenvalue search");
  add_rule_options(epsilon, src);
  double epsOmega = 1.0;
  int epsN = 100;
  std::string searchText;
  epsilon->add_option("--omega", epsOmega, "spectral parameter")->default_val(1.0);
  epsilon->add_option("--n", epsN, "trace length")->default_val(100);
  epsilon->add_option("--search", searchText, "grid search a:b:pitch for eigenvalues");
  epsilon->add_option("--out", outPath, "output path");

  auto* sa = app.add_subcommand("selfaffine-decay", "deformed-domain decay experiment");
  add_rule_options(sa, src);
  double saOmegaX = 0.37, saOmegaY = 0.21;
  std::string saRList = "2^-2..2^-5";
  int saSamples = 64;
  sa->add_option("--omega", saOmegaX, "spectral parameter (x)")->default_val(0.37);
  sa->add_option("--omega-y", saOmegaY, "spectral parameter (y, d = 2)")->default_val(0.21);
  sa->add_option("--r", saRList, "box half-widths (dyadic range)");
  sa->add_option("--samples", saSamples, "translation samples")->default_val(64);
  sa->add_option("--threads", threads, "worker threads");
  sa->add_option("--out", outPath, "output path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(validate)) return cmd_validate(src);
    if (app.got_subcommand(classify)) return cmd_classify(src, assertAperiodic, assertInjective, outPath);
    if (app.got_subcommand(supertile)) return cmd_supertile(src, typeLabel, stOrder, outPath);
    if (app.got_subcommand(sweep))
      return cmd_cocycle_sweep(src, parse_omega_grid(gridText), sweepN, threads, outPath);
    if (app.got_subcommand(spectral))
      return cmd_spectral_decay(src, omega, parse_value_list(rList), samples, threads, outPath);
    if (app.got_subcommand(corr))
      return cmd_correlation_decay(src, parse_value_list(rListCorr), threads, outPath);
    if (app.got_subcommand(epsilon)) return cmd_epsilon(src, epsOmega, epsN, searchText, outPath);
    if (app.got_subcommand(sa))
      return cmd_selfaffine_decay(src, saOmegaX, saOmegaY, parse_value_list(saRList), saSamples,
                                  threads, outPath);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
