// hypercyc: command-line front end. Reports are JSON on stdout (or --report);
// everything except the trailing "timing" block is deterministic.
//
// Exit codes: 0 success, 2 certify verdict NotHypercyclic, 1 error,
// 64 malformed input.

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hypercyc/hypercyc.hpp"

using namespace hypercyc;

namespace {

constexpr const char* kVersion = "1.0.0";
constexpr int kExitVerdict = 2;
constexpr int kExitError = 1;
constexpr int kExitMalformed = 64;

struct Config {
  std::string input;
  std::string out;
  std::string report;
  double box = 2.0;
  double res = 0.1;
  std::string ladder = "10,20,40,80";
  double delta = 1e-2;
  int min_degree = -1;  // -1: command default
  double tol_comm = Tolerances{}.comm;
  double tol_struct = Tolerances{}.structure;
  std::uint64_t seed = 2024;
  std::string x;
  std::string targets = "random:100";
  std::uint32_t budget = 0;  // 0: command default
  std::size_t n = 2;
  std::string a = "2";
  std::string b;
  double threshold = 1e-3;
  bool probe_basis = false;
  std::size_t n_rho = DensePairSearch{}.n_rho;
  std::size_t n_theta = DensePairSearch{}.n_theta;
  std::uint64_t max_pairs = DensePairSearch{}.max_pairs;
  double target = DensePairSearch{}.target;
};

std::vector<std::uint32_t> parse_ladder(const std::string& s) {
  std::vector<std::uint32_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw ParseError("ladder", "cannot parse ladder \"" + s + "\"");
    out.push_back(static_cast<std::uint32_t>(v));
  }
  if (out.empty()) throw ParseError("ladder", "empty ladder");
  return out;
}

Tolerances tolerances(const Config& c) {
  Tolerances t;
  t.comm = c.tol_comm;
  t.structure = c.tol_struct;
  return t;
}

GeneratorFamily load_family(const Config& c, GeneratorSet* set = nullptr) {
  if (c.input.empty()) throw ParseError("input", "--input is required");
  GeneratorSet g = read_generator_set(c.input);
  GeneratorFamily f = verify_commuting(g.matrices, tolerances(c));
  if (set) *set = std::move(g);
  return f;
}

std::vector<ComplexVector> parse_targets(const Config& c, std::size_t n) {
  const std::string prefix = "random:";
  if (c.targets.rfind(prefix, 0) == 0) {
    std::size_t used = 0;
    unsigned long count = 0;
    const std::string num = c.targets.substr(prefix.size());
    try {
      count = std::stoul(num, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != num.size()) throw ParseError("targets", "cannot parse \"" + c.targets + "\"");
    return box_targets(n, count, c.box, c.seed);
  }
  std::vector<ComplexVector> out;
  std::stringstream ss(c.targets);
  std::string item;
  while (std::getline(ss, item, ';')) out.push_back(parse_vector(item, n));
  if (out.empty()) throw ParseError("targets", "no targets given");
  return out;
}

CertifyOptions certify_options(const Config& c) {
  CertifyOptions o;
  o.grid = Grid{c.box, c.res};
  o.ladder = parse_ladder(c.ladder);
  o.tol = tolerances(c);
  o.structure.structure_tol = c.tol_struct;
  return o;
}

struct Outcome {
  Json result;
  int exit_code = 0;
};

Outcome run_analyze(const Config& c, Json& cfg) {
  cfg["input"] = c.input;
  cfg["tol_comm"] = c.tol_comm;
  cfg["tol_struct"] = c.tol_struct;
  const GeneratorFamily f = load_family(c);
  const NormalForm nf = build_normal_form(f);
  StructureOptions so;
  so.structure_tol = c.tol_struct;
  const BlockStructureReport rep = rank_condition(nf, so);
  const ReferenceFrame frame = reference_frame(nf);
  return {Json{{"commutation_residual", f.commutation_residual()},
               {"normal_form", to_json(nf)},
               {"structure", to_json(rep)},
               {"u0", to_json(frame.u0())},
               {"v0", to_json(frame.v0())}},
          0};
}

Outcome run_certify(const Config& c, Json& cfg) {
  cfg["input"] = c.input;
  cfg["box"] = c.box;
  cfg["res"] = c.res;
  cfg["ladder"] = parse_ladder(c.ladder);
  cfg["tol_comm"] = c.tol_comm;
  cfg["tol_struct"] = c.tol_struct;
  cfg["probe_basis"] = c.probe_basis;
  const GeneratorFamily f = load_family(c);
  const CertifyOptions o = certify_options(c);
  const CertifyReport rep = certify_hypercyclic(f, o);
  Json result = to_json(rep);
  if (c.probe_basis) {
    std::vector<ComplexVector> basis;
    for (std::size_t i = 0; i < f.dim(); ++i)
      basis.push_back(ComplexVector::Unit(static_cast<Eigen::Index>(f.dim()), static_cast<Eigen::Index>(i)));
    const BasisProbeReport probe = basis_jset_probe(f, basis, o);
    result["basis_probe"] = Json{{"i0", probe.i0}, {"verdict", to_string(probe.verdict)}, {"ladder", to_json(probe.rungs)}};
  }
  return {std::move(result), rep.verdict == Verdict::NotHypercyclic ? kExitVerdict : 0};
}

Outcome run_jset(const Config& c, Json& cfg) {
  const std::uint32_t D = c.budget ? c.budget : 80;
  const std::uint32_t M = c.min_degree >= 0 ? static_cast<std::uint32_t>(c.min_degree) : 1;
  cfg["input"] = c.input;
  cfg["x"] = c.x;
  cfg["targets"] = c.targets;
  cfg["box"] = c.box;
  cfg["seed"] = c.seed;
  cfg["delta"] = c.delta;
  cfg["budget"] = D;
  cfg["min_degree"] = M;
  cfg["threshold"] = c.threshold;
  cfg["tol_comm"] = c.tol_comm;
  const GeneratorFamily f = load_family(c);
  if (c.x.empty()) throw ParseError("x", "--x is required");
  const ComplexVector x = parse_vector(c.x, f.dim());
  const auto targets = parse_targets(c, f.dim());
  WordBudget wb;
  wb.min_total_degree = M;
  wb.max_total_degree = D;
  JsetOptions jo;
  jo.tol = tolerances(c);
  const auto scores = jset_scores(f, x, targets, c.delta, wb, jo);
  Json table = Json::array();
  double worst = 0.0;
  std::size_t below = 0;
  for (const auto& s : scores) {
    table.push_back(to_json(s));
    worst = std::max(worst, s.best_distance);
    if (s.best_distance < c.threshold) ++below;
  }
  return {Json{{"x", to_json(x)},
               {"count", scores.size()},
               {"worst", worst},
               {"below_threshold", below},
               {"scores", std::move(table)}},
          0};
}

Outcome run_orbit(const Config& c, Json& cfg) {
  const std::uint32_t D = c.budget ? c.budget : 20;
  const std::uint32_t M = c.min_degree >= 0 ? static_cast<std::uint32_t>(c.min_degree) : 0;
  const std::string xs = c.x.empty() ? "v0" : c.x;
  cfg["input"] = c.input;
  cfg["x"] = xs;
  cfg["budget"] = D;
  cfg["min_degree"] = M;
  cfg["box"] = c.box;
  cfg["res"] = c.res;
  cfg["out"] = c.out;
  cfg["tol_comm"] = c.tol_comm;
  const GeneratorFamily f = load_family(c);
  const ComplexVector x = xs == "v0" ? reference_frame(build_normal_form(f)).v0() : parse_vector(xs, f.dim());
  WordBudget wb;
  wb.min_total_degree = M;
  wb.max_total_degree = D;
  const OrbitCloud cloud = orbit_sample(f, x, wb, tolerances(c));
  if (!c.out.empty()) {
    std::ofstream os(c.out);
    if (!os) throw Error(ErrorCode::InvalidArgument, "cannot write " + c.out);
    write_cloud_csv(os, cloud);
  }
  Json result{{"x", to_json(x)}, {"points", cloud.size()}};
  const double cells = std::pow(static_cast<double>(Grid{c.box, c.res}.cells_per_axis()), 2.0 * f.dim());
  if (cells <= kMaxDenseCells) {
    result["density"] = to_json(box_coverage(cloud.points, cloud.saturated, c.box, c.res));
  } else {
    // Too many cells for a dense grid: projection and sparse full coverage.
    OrbitScanOptions so;
    so.grid = Grid{c.box, c.res};
    so.min_degree = M;
    so.tol = tolerances(c);
    const CoverageRecorder rec = scan_orbit(f, x, D, so);
    double min_proj = 1.0;
    for (std::size_t p = 0; p < rec.projections()->pairs().size(); ++p)
      min_proj = std::min(min_proj, rec.projections()->coverage(p, D));
    result["density"] = Json{{"R", c.box},
                             {"h", c.res},
                             {"real_dims", 2 * f.dim()},
                             {"cells_hit", rec.full()->hits(D)},
                             {"cells_total", rec.full()->cells_total()},
                             {"coverage", rec.full()->coverage(D)},
                             {"min_projection", min_proj}};
  }
  return {std::move(result), 0};
}

DensePairSearch pair_search(const Config& c) {
  DensePairSearch s;
  s.n_rho = c.n_rho;
  s.n_theta = c.n_theta;
  s.max_pairs = c.max_pairs;
  s.target = c.target;
  s.grid = Grid{c.box, c.res};
  return s;
}

Outcome run_dense_pair(const Config& c, Json& cfg) {
  const Complex a = parse_complex(c.a);
  cfg["a"] = to_json(a);
  cfg["box"] = c.box;
  cfg["res"] = c.res;
  cfg["n_rho"] = c.n_rho;
  cfg["n_theta"] = c.n_theta;
  cfg["max_pairs"] = c.max_pairs;
  cfg["target"] = c.target;
  return {to_json(find_dense_pair(a, pair_search(c))), 0};
}

Outcome run_counterexample(const Config& c, Json& cfg) {
  const Complex a = parse_complex(c.a);
  const std::uint32_t D = c.budget ? c.budget : TheoremOptions{}.jset_max_degree;
  cfg["n"] = c.n;
  cfg["a"] = to_json(a);
  cfg["b"] = c.b.empty() ? Json("search") : to_json(parse_complex(c.b));
  cfg["out"] = c.out;
  cfg["targets"] = c.targets;
  cfg["seed"] = c.seed;
  cfg["delta"] = c.delta;
  cfg["budget"] = D;
  cfg["threshold"] = c.threshold;
  cfg["box"] = c.box;
  cfg["res"] = c.res;
  cfg["ladder"] = parse_ladder(c.ladder);
  DensePair pair;
  if (c.b.empty()) {
    pair = find_dense_pair(a, pair_search(c));
  } else {
    pair.a = a;
    pair.b = parse_complex(c.b);
    pair.grid = Grid{c.box, c.res};
    const BandScore s = pair_band_score(a, pair.b, c.max_pairs, pair.grid);
    pair.score = s.coverage;
    pair.pairs_used = s.pairs;
  }
  const CounterexampleFamily cex = build_counterexample(c.n, pair);
  if (!c.out.empty()) {
    GeneratorSet g;
    g.n = c.n;
    g.matrices = cex.family.generators();
    g.labels = cex.labels;
    std::ofstream os(c.out);
    if (!os) throw Error(ErrorCode::InvalidArgument, "cannot write " + c.out);
    os << serialize_generator_set(g);
  }
  TheoremOptions o;
  const std::string prefix = "random:";
  if (c.targets.rfind(prefix, 0) != 0) throw ParseError("targets", "counterexample takes --targets random:N");
  o.targets_per_k = parse_targets(c, c.n).size();
  o.seed = c.seed;
  o.delta = c.delta;
  o.jset_max_degree = D;
  o.jset_threshold = c.threshold;
  o.certify = certify_options(c);
  const TheoremReport rep = reproduce_theorem(c.n, pair, o);
  Json result{{"pair", to_json(pair)}, {"labels", cex.labels}, {"theorem", to_json(rep)}};
  return {std::move(result), rep.pass() ? 0 : kExitError};
}

Outcome run_validate(const Config& c, Json& cfg) {
  cfg["input"] = c.input;
  if (c.input.empty()) throw ParseError("input", "--input is required");
  const bool ok = validate_roundtrip(c.input);
  return {Json{{"roundtrip", ok}}, ok ? 0 : kExitError};
}

void emit(const Config& c, const Json& report) {
  const std::string text = report.dump(2) + "\n";
  if (c.report.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream os(c.report);
  os << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structure, certification and J-set tools for commuting matrix families"};
  app.require_subcommand(1);
  Config c;

  auto add_input = [&](CLI::App* s) { s->add_option("--input", c.input, "generator-set JSON file"); };
  auto add_report = [&](CLI::App* s) { s->add_option("--report", c.report, "write the report here instead of stdout"); };
  auto add_grid = [&](CLI::App* s) {
    s->add_option("--box", c.box, "box half-width R")->capture_default_str();
    s->add_option("--res", c.res, "cell width h")->capture_default_str();
  };
  auto add_tols = [&](CLI::App* s) {
    s->add_option("--tol-comm", c.tol_comm, "relative commutation tolerance")->capture_default_str();
    s->add_option("--tol-struct", c.tol_struct, "structure tolerance")->capture_default_str();
  };
  auto add_pair_search = [&](CLI::App* s) {
    s->add_option("--n-rho", c.n_rho, "modulus grid size")->capture_default_str();
    s->add_option("--n-theta", c.n_theta, "argument grid size")->capture_default_str();
    s->add_option("--max-pairs", c.max_pairs, "(k, l) pairs per score")->capture_default_str();
    s->add_option("--target", c.target, "coverage to reach")->capture_default_str();
  };

  auto* analyze = app.add_subcommand("analyze", "normal form and block rank report");
  add_input(analyze);
  add_report(analyze);
  add_tols(analyze);

  auto* certify = app.add_subcommand("certify", "empirical hypercyclicity verdict");
  add_input(certify);
  add_report(certify);
  add_grid(certify);
  add_tols(certify);
  certify->add_option("--ladder", c.ladder, "comma-separated degree budgets")->capture_default_str();
  certify->add_flag("--probe-basis", c.probe_basis, "also probe the standard basis (T_n families)");

  auto* jset = app.add_subcommand("jset", "J-set scores of x against targets");
  add_input(jset);
  add_report(jset);
  add_tols(jset);
  jset->add_option("--x", c.x, "e<k>, ones, or comma-separated complex entries");
  jset->add_option("--targets", c.targets, "random:N or ';'-separated vectors")->capture_default_str();
  jset->add_option("--box", c.box, "box half-width for random targets")->capture_default_str();
  jset->add_option("--seed", c.seed, "seed for random targets")->capture_default_str();
  jset->add_option("--delta", c.delta, "ball radius around x")->capture_default_str();
  jset->add_option("--budget", c.budget, "maximum total degree (default 80)");
  jset->add_option("--min-degree", c.min_degree, "minimum total degree (default 1)");
  jset->add_option("--threshold", c.threshold, "count scores below this")->capture_default_str();

  auto* orbit = app.add_subcommand("orbit", "orbit cloud CSV and grid coverage");
  add_input(orbit);
  add_report(orbit);
  add_grid(orbit);
  add_tols(orbit);
  orbit->add_option("--x", c.x, "start vector (default v0)");
  orbit->add_option("--out", c.out, "CSV file for the cloud");
  orbit->add_option("--budget", c.budget, "maximum total degree (default 20)");
  orbit->add_option("--min-degree", c.min_degree, "minimum total degree (default 0)");

  auto* cex = app.add_subcommand("counterexample", "build the diagonal family and check its properties");
  add_report(cex);
  add_grid(cex);
  add_pair_search(cex);
  cex->add_option("--n", c.n, "dimension (>= 2)")->capture_default_str();
  cex->add_option("--a", c.a, "complex a with |a| > 1")->capture_default_str();
  cex->add_option("--b", c.b, "complex b (default: searched)");
  cex->add_option("--out", c.out, "generator-set file to write");
  cex->add_option("--targets", c.targets, "random:N targets per slot")->capture_default_str();
  cex->add_option("--seed", c.seed, "seed for random targets")->capture_default_str();
  cex->add_option("--delta", c.delta, "ball radius around e_k")->capture_default_str();
  cex->add_option("--budget", c.budget, "J-set maximum total degree")->capture_default_str();
  cex->add_option("--threshold", c.threshold, "J-score threshold")->capture_default_str();
  cex->add_option("--ladder", c.ladder, "comma-separated degree budgets")->capture_default_str();

  auto* dense = app.add_subcommand("dense-pair", "search b with {a^k b^l} dense in the box");
  add_report(dense);
  add_grid(dense);
  add_pair_search(dense);
  dense->add_option("--a", c.a, "complex a with |a| > 1")->capture_default_str();

  auto* validate = app.add_subcommand("validate", "parse, serialize and re-parse a generator-set file");
  add_input(validate);
  add_report(validate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitMalformed;
  }

  CLI::App* sub = app.get_subcommands().front();
  Json report{{"command", sub->get_name()}, {"version", kVersion}};
  Json cfg = Json::object();
  const auto t0 = std::chrono::steady_clock::now();
  int code = 0;
  try {
    Outcome out;
    if (sub == analyze) out = run_analyze(c, cfg);
    else if (sub == certify) out = run_certify(c, cfg);
    else if (sub == jset) out = run_jset(c, cfg);
    else if (sub == orbit) out = run_orbit(c, cfg);
    else if (sub == cex) out = run_counterexample(c, cfg);
    else if (sub == dense) out = run_dense_pair(c, cfg);
    else out = run_validate(c, cfg);
    report["config"] = cfg;
    report["result"] = std::move(out.result);
    code = out.exit_code;
  } catch (const ParseError& e) {
    report["config"] = cfg;
    report["error"] = Json{{"code", to_string(e.code())}, {"field", e.field()}, {"message", e.what()}};
    std::cerr << "hypercyc: " << e.what() << "\n";
    code = kExitMalformed;
  } catch (const NotCommutingError& e) {
    report["config"] = cfg;
    report["error"] = Json{{"code", to_string(e.code())},
                           {"message", e.what()},
                           {"pair", {e.worst_pair().first + 1, e.worst_pair().second + 1}},
                           {"residual", e.residual()}};
    std::cerr << "hypercyc: " << e.what() << "\n";
    code = kExitError;
  } catch (const NoPairFoundError& e) {
    report["config"] = cfg;
    report["error"] = Json{{"code", to_string(e.code())},
                           {"message", e.what()},
                           {"best_score", e.best_score()},
                           {"best_rho", e.best_rho()},
                           {"best_theta", e.best_theta()}};
    std::cerr << "hypercyc: " << e.what() << "\n";
    code = kExitError;
  } catch (const Error& e) {
    report["config"] = cfg;
    report["error"] = Json{{"code", to_string(e.code())}, {"message", e.what()}};
    std::cerr << "hypercyc: " << e.what() << "\n";
    code = kExitError;
  } catch (const std::exception& e) {
    report["config"] = cfg;
    report["error"] = Json{{"code", "Internal"}, {"message", e.what()}};
    std::cerr << "hypercyc: " << e.what() << "\n";
    code = kExitError;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report["exit_code"] = code;
  report["timing"] = Json{{"wall_seconds", secs}, {"threads", thread_count()}};
  emit(c, report);
  return code;
}
