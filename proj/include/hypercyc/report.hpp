#pragma once

// JSON views of the analysis results, used by the command-line reports.

#include <string>
#include <vector>

#include "hypercyc/certify.hpp"
#include "hypercyc/counterexample.hpp"
#include "hypercyc/io.hpp"
#include "hypercyc/jset.hpp"

namespace hypercyc {

inline Json to_json(const Word& w) { return Json(w.exponents()); }

inline Json to_json(const NormalForm& nf) {
  Json tuples = Json::array();
  for (const auto& t : nf.block_tuples) {
    Json row = Json::array();
    for (auto z : t) row.push_back(to_json(z));
    tuples.push_back(std::move(row));
  }
  Json conj = Json::array();
  for (const auto& c : nf.conjugated) conj.push_back(to_json(c));
  return Json{{"n", nf.dim()},
              {"r", nf.r()},
              {"partition", nf.partition},
              {"spectral_groups", nf.spectral_groups},
              {"block_tuples", std::move(tuples)},
              {"cond_P", nf.cond_P},
              {"residual", nf.residual},
              {"P", to_json(nf.P)},
              {"conjugated", std::move(conj)}};
}

inline Json to_json(const BlockRank& b) {
  return Json{{"offset", b.offset}, {"size", b.size}, {"rank", b.rank}, {"full", b.full}};
}

inline Json to_json(const BlockStructureReport& r) {
  Json blocks = Json::array(), groups = Json::array();
  for (const auto& b : r.blocks) blocks.push_back(to_json(b));
  for (const auto& g : r.groups) groups.push_back(to_json(g));
  return Json{{"pass", r.pass}, {"obstruction", r.obstruction}, {"blocks", std::move(blocks)},
              {"groups", std::move(groups)}};
}

inline Json to_json(const CoverageRung& r) {
  return Json{{"max_degree", r.max_degree},
              {"words", r.words},
              {"min_projection", r.min_projection},
              {"projection_coverage", r.projection_coverage},
              {"full_coverage", r.full_coverage},
              {"full_cells_hit", r.full_cells_hit},
              {"full_cells_total", r.full_cells_total}};
}

inline Json to_json(const std::vector<CoverageRung>& rungs) {
  Json a = Json::array();
  for (const auto& r : rungs) a.push_back(to_json(r));
  return a;
}

inline Json to_json(const CertifyReport& r) {
  return Json{{"verdict", to_string(r.verdict)},
              {"reason", r.reason},
              {"v0", to_json(r.v0)},
              {"structure", to_json(r.structure)},
              {"partition", r.normal_form.partition},
              {"ladder", to_json(r.rungs)}};
}

inline Json to_json(const JsetScore& s) {
  return Json{{"y", to_json(s.y)},
              {"best_distance", s.best_distance},
              {"best_word", to_json(s.best_word)},
              {"words_evaluated", s.words_evaluated}};
}

inline Json to_json(const DensityReport& d) {
  return Json{{"R", d.R},
              {"h", d.h},
              {"real_dims", d.real_dims},
              {"cells_hit", d.cells_hit},
              {"cells_total", d.cells_total},
              {"coverage", d.coverage},
              {"points_used", d.points_used},
              {"saturated", d.saturated},
              {"outside", d.outside}};
}

inline Json to_json(const DensePair& p) {
  return Json{{"a", to_json(p.a)},
              {"b", to_json(p.b)},
              {"abs_b", std::abs(p.b)},
              {"arg_b", safe_arg(p.b)},
              {"score", p.score},
              {"pairs_used", p.pairs_used},
              {"grid", Json{{"R", p.grid.R}, {"h", p.grid.h}}}};
}

inline Json to_json(const WitnessReport& w) {
  Json steps = Json::array();
  for (const auto& s : w.steps)
    steps.push_back(Json{{"i", s.i},
                         {"j", s.j},
                         {"a_mk", to_json(s.a_mk)},
                         {"log_moduli", s.log_moduli},
                         {"log_x_distance", s.log_x_distance},
                         {"image_error", s.image_error}});
  return Json{{"k", w.k + 1},
              {"s", w.s + 1},
              {"y", to_json(w.y)},
              {"max_image_error", w.max_image_error},
              {"growth_ok", w.growth_ok},
              {"converges", w.converges},
              {"steps", std::move(steps)}};
}

inline Json to_json(const TheoremReport& r) {
  Json per_k = Json::array();
  for (std::size_t k = 0; k < r.jset_scores.size(); ++k) {
    double worst = 0.0;
    for (double d : r.jset_scores[k]) worst = std::max(worst, d);
    per_k.push_back(Json{{"k", k + 1}, {"targets", r.jset_scores[k].size()}, {"worst", worst}});
  }
  Json wit = Json::array();
  for (const auto& w : r.witnesses) wit.push_back(to_json(w));
  return Json{{"pass", r.pass()},
              {"jset", Json{{"pass", r.jset_pass}, {"worst", r.jset_worst}, {"per_k", std::move(per_k)}}},
              {"certify", Json{{"pass", r.certify_pass}, {"report", to_json(r.certify)}}},
              {"line_structure", Json{{"pass", r.line_pass}, {"points", r.line_points}, {"worst", r.line_worst}}},
              {"witness", Json{{"pass", r.witness_pass}, {"sequences", std::move(wit)}}}};
}

}  // namespace hypercyc
