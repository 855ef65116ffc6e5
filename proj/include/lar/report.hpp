#pragma once

// Report export: machine-readable JSON (no timings, so byte-identical across
// runs with the same seed), a human summary, and the model/counterexample/
// transcript/refinement artifacts.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"
#include "lar/lar.hpp"

namespace lar {

inline nlohmann::ordered_json report_json(const LarReport& rep) {
  using json = nlohmann::ordered_json;
  const auto& cfg = rep.config;
  json j;
  j["verdict"] = to_string(rep.verdict);
  j["reason"] = rep.reason;
  json prop;
  prop["text"] = rep.property.text;
  prop["threshold"] = rep.property.threshold;
  prop["atoms"] = json::array();
  for (const auto& a : rep.property.atoms) prop["atoms"].push_back(a.str());
  j["property"] = prop;
  j["config"] = {{"alpha", cfg.sprt.alpha},
                 {"beta", cfg.sprt.beta},
                 {"delta", cfg.sprt.delta},
                 {"epsilon_max", cfg.learner.epsilon_max},
                 {"max_iterations", cfg.max_iterations},
                 {"k_max", cfg.cex.k_max},
                 {"max_samples", cfg.sprt.max_samples},
                 {"svm_c", cfg.svm.c},
                 {"accuracy_threshold", cfg.svm.accuracy_threshold},
                 {"seed", cfg.seed}};
  j["predicates"] = json::array();
  for (const auto& p : rep.predicates.items()) j["predicates"].push_back(p.str());
  j["final_trace_count"] = rep.final_trace_count;

  json its = json::array();
  for (const auto& it : rep.iterations) {
    json r;
    r["index"] = it.index;
    r["predicates"] = it.predicates;
    r["traces"] = it.traces;
    r["states"] = it.states;
    r["transitions"] = it.transitions;
    r["epsilon"] = it.epsilon;
    r["bic"] = it.bic;
    r["candidates"] = json::array();
    for (const auto& c : it.candidates)
      r["candidates"].push_back(
          {{"epsilon", c.epsilon}, {"log_likelihood", c.log_likelihood}, {"bic", c.bic}, {"states", c.states}});
    r["reach_probability"] = it.reach_probability;
    r["satisfied"] = it.satisfied;
    if (it.counterexample)
      r["counterexample"] = {{"status", to_string(it.counterexample->status)},
                             {"paths", it.counterexample->paths.size()},
                             {"mass", it.counterexample->mass},
                             {"longest_path", it.counterexample->longest_path()}};
    if (it.sprt) {
      const Sprt& s = *it.sprt;
      r["sprt"] = {{"verdict", to_string(s.verdict())}, {"samples", s.samples()}, {"successes", s.successes()},
                   {"log_ratio", s.log_ratio()}, {"p0", s.p0()}, {"p1", s.p1()}, {"delta", s.delta()},
                   {"warning", s.warning()}, {"out_of_model", it.out_of_model}};
    }
    if (!it.ranked.empty()) {
      r["spurious_transitions"] = json::array();
      for (std::size_t k = 0; k < it.ranked.size() && k < 10; ++k) {
        const auto& t = it.ranked[k];
        r["spurious_transitions"].push_back({{"source", t.source}, {"target", t.target},
                                             {"model_prob", t.model_prob}, {"source_count", t.source_count},
                                             {"pair_count", t.pair_count}, {"p_diff", t.p_diff},
                                             {"zero_support", t.zero_support}});
      }
    }
    if (!it.refinement.empty()) {
      r["refinement"] = json::array();
      for (const auto& a : it.refinement)
        r["refinement"].push_back({{"source", a.source}, {"target", a.target}, {"p_diff", a.p_diff},
                                   {"positives", a.positives}, {"negatives", a.negatives},
                                   {"accuracy", a.accuracy}, {"predicate", a.predicate}, {"outcome", a.outcome}});
    }
    if (it.new_predicate) r["new_predicate"] = *it.new_predicate;
    its.push_back(r);
  }
  j["iterations"] = its;

  if (rep.model) j["model"] = {{"states", rep.model->size()}, {"transitions", rep.model->transition_count()}};
  if (rep.verdict == Verdict::Violated && !rep.iterations.empty() && rep.iterations.back().sprt) {
    const Sprt& s = *rep.iterations.back().sprt;
    j["error_bounds"] = {{"alpha", s.config().alpha}, {"beta", s.config().beta}, {"delta", s.delta()}};
  }
  return j;
}

inline std::string summary_text(const LarReport& rep) {
  std::string out;
  out += "property:   " + rep.property.text + "\n";
  out += "verdict:    " + std::string(to_string(rep.verdict)) + "\n";
  out += "reason:     " + rep.reason + "\n";
  if (rep.verdict == Verdict::Verified) out += "note:       the property is verified if the model is correct\n";
  if (rep.verdict == Verdict::Violated && !rep.iterations.empty() && rep.iterations.back().sprt) {
    const Sprt& s = *rep.iterations.back().sprt;
    out += "errors:     alpha=" + format_double(s.config().alpha) + " beta=" + format_double(s.config().beta) +
           " delta=" + format_double(s.delta()) + "\n";
  }
  out += "predicates:\n";
  for (const auto& p : rep.predicates.items()) out += "  " + p.str() + "\n";
  out += "traces:     " + std::to_string(rep.final_trace_count) + "\n\n";
  for (const auto& it : rep.iterations) {
    out += "iteration " + std::to_string(it.index) + ": " + std::to_string(it.states) + " states, eps " +
           format_double(it.epsilon) + ", P(F phi) = " + format_double(it.reach_probability);
    if (it.counterexample) out += ", counterexample " + std::to_string(it.counterexample->paths.size()) + " paths";
    if (it.sprt)
      out += ", sprt " + std::string(to_string(it.sprt->verdict())) + " after " + std::to_string(it.sprt->samples());
    if (it.new_predicate) out += ", new predicate " + *it.new_predicate;
    out += "\n";
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "  time ms: abstract %.1f learn %.1f check %.1f counterexample %.1f sprt %.1f refine %.1f\n",
                  it.times.abstract_ms, it.times.learn_ms, it.times.check_ms, it.times.counterexample_ms,
                  it.times.sprt_ms, it.times.refine_ms);
    out += buf;
  }
  return out;
}

inline std::string refinement_log(const LarReport& rep) {
  std::string out;
  for (const auto& it : rep.iterations) {
    if (it.refinement.empty()) continue;
    out += "iteration " + std::to_string(it.index) + "\n";
    for (const auto& a : it.refinement) {
      out += "  transition " + std::to_string(a.source) + " -> " + std::to_string(a.target) + " p_diff " +
             format_double(a.p_diff) + " positives " + std::to_string(a.positives) + " negatives " +
             std::to_string(a.negatives) + " accuracy " + format_double(a.accuracy) + " : " + a.outcome;
      if (!a.predicate.empty()) out += " : " + a.predicate;
      out += "\n";
    }
  }
  return out;
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write '" + p.string() + "'");
  out << text;
}

inline void export_report(const LarReport& rep, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file(dir / "report.json", report_json(rep).dump(2) + "\n");
  write_file(dir / "summary.txt", summary_text(rep));
  write_file(dir / "refinement.log", refinement_log(rep));
  if (rep.model) {
    std::vector<bool> target = target_states(*rep.model, rep.property.atoms.size());
    write_file(dir / "model.txt", write_explicit(*rep.model));
    write_file(dir / "model.dot", write_dot(*rep.model, target));
  }
  std::string transcripts;
  for (const auto& it : rep.iterations)
    if (it.sprt) transcripts += "# iteration " + std::to_string(it.index) + "\n" + it.sprt->transcript();
  if (!transcripts.empty()) write_file(dir / "sprt.txt", transcripts);
  if (!rep.iterations.empty() && rep.iterations.back().counterexample && rep.model)
    write_file(dir / "counterexample.txt", serialize_counterexample(*rep.model, *rep.iterations.back().counterexample));
}

}  // namespace lar
