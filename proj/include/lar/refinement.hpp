#pragma once

// Spurious-transition ranking, transition counting with labeled data
// collection, and predicate synthesis from a linear classifier.

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lar/common.hpp"
#include "lar/dtmc.hpp"
#include "lar/predicate.hpp"
#include "lar/svm.hpp"
#include "lar/trace.hpp"

namespace lar {

struct TransitionStat {
  std::size_t source = 0;
  std::size_t target = 0;
  double model_prob = 0.0;
  std::size_t source_count = 0;  // #s
  std::size_t pair_count = 0;    // #<s,s'>
  double p_diff = 0.0;
  bool zero_support = false;
};

struct TransitionCount {
  std::size_t source_count = 0;
  std::size_t pair_count = 0;
  std::size_t out_of_model = 0;
  LabeledDataset data;  // positives = γ+, negatives = γ−
};

namespace detail {

/// Calls visit(trace, i, from, to) for each step i→i+1 taken from model state
/// `from`; `to` is empty when the observation leaves the model (walk stops).
template <class Visit>
void walk_steps(const Dtmc& d, const Abstraction& abs, const TraceSet& traces, Visit&& visit) {
  for (const auto& t : traces.traces()) {
    AbstractTrace a = abs.trace(t);
    auto cur = d.initial_by_tag(a[0]);
    if (!cur) continue;
    for (std::size_t i = 0; i + 1 < a.size(); ++i) {
      auto next = d.successor_by_tag(*cur, a[i + 1]);
      visit(t, i, *cur, next);
      if (!next) break;
      cur = next;
    }
  }
}

}  // namespace detail

inline TransitionCount count_transition(std::size_t source, std::size_t target, const TraceSet& traces,
                                        const PredicateSet& ps, const Dtmc& d) {
  Abstraction abs(ps, traces.schema());
  TransitionCount out;
  detail::walk_steps(d, abs, traces, [&](const ConcreteTrace& t, std::size_t i, std::size_t from,
                                         std::optional<std::size_t> to) {
    if (from != source) return;
    ++out.source_count;
    if (!to) ++out.out_of_model;
    if (to && *to == target) {
      ++out.pair_count;
      out.data.positives.push_back(t.states[i]);
    } else {
      out.data.negatives.push_back(t.states[i]);
    }
  });
  return out;
}

inline std::vector<TransitionStat> identify_spurious_transitions(const TraceSet& traces, const Dtmc& d,
                                                                 const PredicateSet& ps) {
  Abstraction abs(ps, traces.schema());
  std::vector<std::size_t> from_count(d.size(), 0);
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> pair_count;
  detail::walk_steps(d, abs, traces, [&](const ConcreteTrace&, std::size_t, std::size_t from,
                                         std::optional<std::size_t> to) {
    ++from_count[from];
    if (to) ++pair_count[{from, *to}];
  });
  std::vector<TransitionStat> out;
  for (std::size_t s = 0; s < d.size(); ++s)
    for (const auto& t : d.row(s)) {
      TransitionStat st;
      st.source = s;
      st.target = t.target;
      st.model_prob = t.prob;
      st.source_count = from_count[s];
      auto it = pair_count.find({s, t.target});
      st.pair_count = it == pair_count.end() ? 0 : it->second;
      st.zero_support = st.source_count == 0;
      double emp = st.zero_support ? 0.0 : static_cast<double>(st.pair_count) / static_cast<double>(st.source_count);
      st.p_diff = st.model_prob - emp;
      out.push_back(st);
    }
  std::stable_sort(out.begin(), out.end(), [](const TransitionStat& a, const TransitionStat& b) {
    if (a.zero_support != b.zero_support) return !a.zero_support;
    if (!a.zero_support && a.p_diff != b.p_diff) return a.p_diff > b.p_diff;
    if (a.source != b.source) return a.source < b.source;
    return a.target < b.target;
  });
  return out;
}

struct RefinementAttempt {
  std::size_t source = 0;
  std::size_t target = 0;
  double p_diff = 0.0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  double accuracy = 0.0;
  std::string predicate;  // empty when rejected
  std::string outcome;
};

struct RefineResult {
  std::optional<Predicate> predicate;
  std::vector<RefinementAttempt> attempts;
};

inline Predicate classifier_predicate(const LinearClassifier& clf, const VariableSchema& schema) {
  std::vector<Term> terms;
  for (std::size_t i = 0; i < clf.coef.size(); ++i)
    if (clf.coef[i] != 0.0) terms.push_back({schema.name(i), clf.coef[i]});
  return Predicate(std::move(terms), Rel::Ge, clf.threshold);
}

/// Tries ranked transitions in order until one yields a new, useful predicate.
inline RefineResult refine(const TraceSet& traces, const Dtmc& d, const PredicateSet& ps,
                           const std::vector<TransitionStat>& ranked, const SvmOptions& opt, Rng& rng) {
  RefineResult res;
  std::size_t before = distinct_abstract_states(ps, traces);
  for (const auto& st : ranked) {
    if (st.zero_support) continue;
    RefinementAttempt at;
    at.source = st.source;
    at.target = st.target;
    at.p_diff = st.p_diff;
    TransitionCount tc = count_transition(st.source, st.target, traces, ps, d);
    at.positives = tc.data.positives.size();
    at.negatives = tc.data.negatives.size();
    if (tc.data.positives.empty() || tc.data.negatives.empty()) {
      at.outcome = "one class empty";
      res.attempts.push_back(at);
      continue;
    }
    auto clf = train_linear_classifier(tc.data, opt, rng);
    if (!clf) {
      at.outcome = "no linear separator";
      res.attempts.push_back(at);
      continue;
    }
    LinearClassifier best = rationalize(minimize_features(*clf, tc.data, opt, rng), tc.data, opt);
    at.accuracy = best.accuracy;
    Predicate p = classifier_predicate(best, traces.schema());
    at.predicate = p.str();
    if (ps.contains(p)) {
      at.outcome = "duplicate predicate";
      res.attempts.push_back(at);
      continue;
    }
    PredicateSet extended = ps;
    extended.add(p);
    if (distinct_abstract_states(extended, traces) <= before) {
      at.outcome = "no new abstract state";
      res.attempts.push_back(at);
      continue;
    }
    at.outcome = "accepted";
    res.attempts.push_back(at);
    res.predicate = p;
    return res;
  }
  return res;
}

}  // namespace lar
