#pragma once

// The learn-abstract-refine loop, property parsing and the sample-size planner.
//
// Property grammar:  P <= <r> [ F <condition> ]
// where <condition> is one or more predicates joined by '&'.

#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "lar/common.hpp"
#include "lar/counterexample.hpp"
#include "lar/dtmc.hpp"
#include "lar/learner.hpp"
#include "lar/pmc.hpp"
#include "lar/predicate.hpp"
#include "lar/refinement.hpp"
#include "lar/sampler.hpp"
#include "lar/sprt.hpp"
#include "lar/svm.hpp"
#include "lar/trace.hpp"

namespace lar {

struct Property {
  double threshold = 0.0;
  std::vector<Predicate> atoms;
  std::string text;
};

inline Property parse_property(const std::string& text) {
  std::size_t pos = 0;
  auto fail = [&](const std::string& msg) -> ParseError {
    return ParseError("property parse error at column " + std::to_string(pos + 1) + ": " + msg, 1, pos + 1);
  };
  auto skip = [&] {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  };
  auto expect = [&](const std::string& tok) {
    skip();
    if (text.compare(pos, tok.size(), tok) != 0) throw fail("expected '" + tok + "'");
    pos += tok.size();
  };
  Property p;
  p.text = trim(text);
  expect("P");
  skip();
  if (text.compare(pos, 2, "<=") != 0) throw fail("expected '<=' (only upper-bounded non-strict properties are supported)");
  pos += 2;
  skip();
  std::size_t start = pos;
  while (pos < text.size() && (std::isdigit(static_cast<unsigned char>(text[pos])) || text[pos] == '.' ||
                               text[pos] == 'e' || text[pos] == 'E' || text[pos] == '-' || text[pos] == '+'))
    ++pos;
  if (!parse_double(std::string_view(text).substr(start, pos - start), p.threshold)) {
    pos = start;
    throw fail("expected a probability");
  }
  if (p.threshold < 0.0 || p.threshold > 1.0) {
    pos = start;
    throw fail("threshold " + format_double(p.threshold) + " outside [0,1]");
  }
  expect("[");
  expect("F");
  skip();
  std::size_t close = text.rfind(']');
  if (close == std::string::npos || close < pos) throw fail("expected ']'");
  p.atoms = parse_condition(std::string_view(text).substr(pos, close - pos), pos);
  pos = close + 1;
  skip();
  if (pos != text.size()) throw fail("unexpected trailing input");
  return p;
}

/// Per-state visit count n0 with 2m²·exp(−2·n0·ε²) <= δ.
inline std::size_t sample_bound(std::size_t m, double eps, double delta) {
  if (m < 1) throw Error("sample_bound: m must be at least 1");
  if (!(eps > 0.0 && eps < 1.0)) throw Error("sample_bound: epsilon must lie in (0,1)");
  if (!(delta > 0.0 && delta < 1.0)) throw Error("sample_bound: delta must lie in (0,1)");
  double md = static_cast<double>(m);
  return static_cast<std::size_t>(std::ceil(std::log(2.0 * md * md / delta) / (2.0 * eps * eps)));
}

struct LarConfig {
  LearnerConfig learner;
  SprtConfig sprt;
  SvmOptions svm;
  CexOptions cex;
  ReachOptions reach;
  std::size_t max_iterations = 50;
  std::uint64_t seed = 1;
};

enum class Verdict { Verified, Violated, Inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Verified: return "verified";
    case Verdict::Violated: return "violated";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

struct PhaseTimes {
  double abstract_ms = 0, learn_ms = 0, check_ms = 0, counterexample_ms = 0, sprt_ms = 0, refine_ms = 0;
};

struct IterationRecord {
  std::size_t index = 0;
  std::vector<std::string> predicates;
  std::size_t traces = 0;
  std::size_t states = 0;
  std::size_t transitions = 0;
  double epsilon = 0.0;
  double bic = 0.0;
  std::vector<Candidate> candidates;
  double reach_probability = 0.0;
  bool satisfied = false;
  std::optional<Counterexample> counterexample;
  std::optional<Sprt> sprt;
  std::size_t out_of_model = 0;
  std::vector<TransitionStat> ranked;
  std::vector<RefinementAttempt> refinement;
  std::optional<std::string> new_predicate;
  PhaseTimes times;
};

struct LarReport {
  Verdict verdict = Verdict::Inconclusive;
  std::string reason;
  Property property;
  PredicateSet predicates;
  std::optional<Dtmc> model;
  std::vector<IterationRecord> iterations;
  std::size_t final_trace_count = 0;
  LarConfig config;
};

namespace detail {

inline double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

}  // namespace detail

inline LarReport run_lar(TraceSet traces, const Property& property, const LarConfig& cfg, Sampler& sampler) {
  if (traces.empty()) throw Error("lar: no input traces");
  if (traces.schema().names() != sampler.schema().names())
    throw Error("lar: sampler variables differ from the trace file header");
  LarReport rep;
  rep.property = property;
  rep.config = cfg;
  for (const auto& a : property.atoms) {
    a.check_schema(traces.schema());
    rep.predicates.add(a);
  }
  std::size_t atoms = rep.predicates.size();
  // Sprt validates its own configuration; fail before any work when the threshold makes it degenerate.
  if (property.threshold < 1.0) Sprt(property.threshold, cfg.sprt);

  Rng sampling_rng(derive_seed(cfg.seed, "sampling"));
  Rng svm_rng(derive_seed(cfg.seed, "svm"));
  using clock = std::chrono::steady_clock;

  auto finish = [&](Verdict v, std::string reason) {
    rep.verdict = v;
    rep.reason = std::move(reason);
    rep.final_trace_count = traces.size();
    return rep;
  };

  for (std::size_t it = 1; it <= cfg.max_iterations; ++it) {
    IterationRecord rec;
    rec.index = it;
    for (const auto& p : rep.predicates.items()) rec.predicates.push_back(p.str());
    rec.traces = traces.size();

    auto t0 = clock::now();
    auto abstract = abstract_trace_set(rep.predicates, traces);
    rec.times.abstract_ms = detail::elapsed_ms(t0);

    t0 = clock::now();
    LearnResult learned = select_model(abstract, cfg.learner);
    rec.times.learn_ms = detail::elapsed_ms(t0);
    rec.states = learned.model.size();
    rec.transitions = learned.model.transition_count();
    rec.epsilon = learned.epsilon;
    rec.bic = learned.bic;
    rec.candidates = learned.candidates;
    const Dtmc& model = learned.model;
    rep.model = model;

    t0 = clock::now();
    auto target = target_states(model, atoms);
    CheckResult chk = check(model, target, property.threshold, cfg.reach);
    rec.times.check_ms = detail::elapsed_ms(t0);
    rec.reach_probability = chk.probability;
    rec.satisfied = chk.satisfied;
    if (chk.satisfied) {
      rep.iterations.push_back(std::move(rec));
      return finish(Verdict::Verified, "the property is verified if the model is correct");
    }

    t0 = clock::now();
    Counterexample cex = build_counterexample(model, target, property.threshold, cfg.cex);
    rec.times.counterexample_ms = detail::elapsed_ms(t0);
    rec.counterexample = cex;
    if (cex.status != CexStatus::Found) {
      rep.iterations.push_back(std::move(rec));
      return finish(Verdict::Inconclusive, std::string("counterexample construction ") + to_string(cex.status));
    }

    t0 = clock::now();
    Abstraction abs(rep.predicates, traces.schema());
    SprtOutcome sp = test_counterexample(model, cex, target, abs, sampler, property.threshold, cfg.sprt, sampling_rng);
    rec.times.sprt_ms = detail::elapsed_ms(t0);
    rec.sprt = sp.test;
    rec.out_of_model = sp.out_of_model;
    traces.append(sp.sampled);
    if (sp.test.verdict() == SprtVerdict::AcceptH0) {
      rep.iterations.push_back(std::move(rec));
      return finish(Verdict::Violated, "counterexample confirmed by sequential testing");
    }
    if (sp.test.verdict() == SprtVerdict::Inconclusive) {
      rep.iterations.push_back(std::move(rec));
      return finish(Verdict::Inconclusive, "sequential test reached the sample cap");
    }

    t0 = clock::now();
    rec.ranked = identify_spurious_transitions(traces, model, rep.predicates);
    RefineResult ref = refine(traces, model, rep.predicates, rec.ranked, cfg.svm, svm_rng);
    rec.times.refine_ms = detail::elapsed_ms(t0);
    rec.refinement = ref.attempts;
    if (!ref.predicate) {
      rep.iterations.push_back(std::move(rec));
      return finish(Verdict::Inconclusive, "verification is unsuccessful: no predicate separates any spurious transition");
    }
    rec.new_predicate = ref.predicate->str();
    rep.predicates.add(*ref.predicate);
    rep.iterations.push_back(std::move(rec));
  }
  return finish(Verdict::Inconclusive, "iteration limit reached");
}

}  // namespace lar
