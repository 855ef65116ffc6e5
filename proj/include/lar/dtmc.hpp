#pragma once

// Discrete-time Markov chain: states tagged with a label (an abstract bit string
// for learned models), an initial distribution and a sparse row-stochastic matrix.

#include <algorithm>
#include <fstream>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lar/common.hpp"

namespace lar {

struct Transition {
  std::size_t target;
  double prob;
  bool operator==(const Transition&) const = default;
};

class Dtmc {
 public:
  static constexpr double kTolerance = 1e-12;

  Dtmc() = default;
  Dtmc(std::vector<std::string> tags, std::vector<double> initial,
       std::vector<std::vector<Transition>> rows, double tolerance = kTolerance)
      : tags_(std::move(tags)), initial_(std::move(initial)), rows_(std::move(rows)) {
    validate(tolerance);
  }

  std::size_t size() const { return tags_.size(); }
  const std::string& tag(std::size_t s) const { return tags_.at(s); }
  const std::vector<std::string>& tags() const { return tags_; }
  double initial(std::size_t s) const { return initial_.at(s); }
  const std::vector<double>& initial() const { return initial_; }
  const std::vector<Transition>& row(std::size_t s) const { return rows_.at(s); }

  std::size_t transition_count() const {
    std::size_t n = 0;
    for (const auto& r : rows_) n += r.size();
    return n;
  }

  double probability(std::size_t from, std::size_t to) const {
    check_state(from);
    check_state(to);
    for (const auto& t : rows_[from])
      if (t.target == to) return t.prob;
    return 0.0;
  }

  /// Successor of `from` carrying `tag`; symbol-determinism makes it unique.
  std::optional<std::size_t> successor_by_tag(std::size_t from, const std::string& tag) const {
    for (const auto& t : rows_.at(from))
      if (t.prob > 0.0 && tags_[t.target] == tag) return t.target;
    return std::nullopt;
  }

  std::optional<std::size_t> initial_by_tag(const std::string& tag) const {
    for (std::size_t s = 0; s < size(); ++s)
      if (initial_[s] > 0.0 && tags_[s] == tag) return s;
    return std::nullopt;
  }

  /// True iff no state has two positive-probability successors (or two initial
  /// states) with the same tag.
  bool symbol_deterministic() const {
    auto unique_tags = [&](const std::vector<std::size_t>& states) {
      std::vector<std::string> seen;
      for (auto s : states) seen.push_back(tags_[s]);
      std::sort(seen.begin(), seen.end());
      return std::adjacent_find(seen.begin(), seen.end()) == seen.end();
    };
    std::vector<std::size_t> init;
    for (std::size_t s = 0; s < size(); ++s)
      if (initial_[s] > 0.0) init.push_back(s);
    if (!unique_tags(init)) return false;
    for (const auto& r : rows_) {
      std::vector<std::size_t> succ;
      for (const auto& t : r)
        if (t.prob > 0.0) succ.push_back(t.target);
      if (!unique_tags(succ)) return false;
    }
    return true;
  }

  void check_state(std::size_t s) const {
    if (s >= size()) throw Error("unknown DTMC state " + std::to_string(s));
  }

  bool operator==(const Dtmc&) const = default;

 private:
  void validate(double tol) {
    if (tags_.empty()) throw Error("dtmc: no states");
    if (initial_.size() != tags_.size() || rows_.size() != tags_.size())
      throw Error("dtmc: tags, initial distribution and rows must have one entry per state");
    double init_sum = 0.0;
    for (double p : initial_) {
      if (!(p >= 0.0 && p <= 1.0)) throw Error("dtmc: initial probability outside [0,1]");
      init_sum += p;
    }
    if (std::abs(init_sum - 1.0) > tol)
      throw Error("dtmc: initial distribution sums to " + format_double(init_sum));
    for (std::size_t s = 0; s < rows_.size(); ++s) {
      auto& r = rows_[s];
      std::sort(r.begin(), r.end(), [](const Transition& a, const Transition& b) { return a.target < b.target; });
      std::vector<Transition> merged;
      double sum = 0.0;
      for (const auto& t : r) {
        if (t.target >= tags_.size()) throw Error("dtmc: transition to unknown state " + std::to_string(t.target));
        if (!(t.prob >= 0.0 && t.prob <= 1.0)) throw Error("dtmc: transition probability outside [0,1]");
        sum += t.prob;
        if (!merged.empty() && merged.back().target == t.target)
          merged.back().prob += t.prob;
        else
          merged.push_back(t);
      }
      if (std::abs(sum - 1.0) > tol)
        throw Error("dtmc: row " + std::to_string(s) + " sums to " + format_double(sum));
      r = std::move(merged);
    }
  }

  std::vector<std::string> tags_;
  std::vector<double> initial_;
  std::vector<std::vector<Transition>> rows_;
};

/// Product of step probabilities along `path` (no initial weight).
inline double path_probability(const Dtmc& d, const std::vector<std::size_t>& path) {
  if (path.empty()) throw Error("path_probability: empty path");
  for (auto s : path) d.check_state(s);
  double p = 1.0;
  for (std::size_t i = 1; i < path.size(); ++i) p *= d.probability(path[i - 1], path[i]);
  return p;
}

/// ι_init(s1) times the step product.
inline double initial_path_probability(const Dtmc& d, const std::vector<std::size_t>& path) {
  double p = path_probability(d, path);
  return d.initial(path.front()) * p;
}

// ---------------------------------------------------------------------------
// Explicit-state text format
//
//   states <n>
//   <id> <tag> <initial-probability>        (n lines; tag "-" when empty)
//   transitions <m>
//   <src> <dst> <probability>               (m lines)
// ---------------------------------------------------------------------------

inline std::string write_explicit(const Dtmc& d) {
  std::string out = "states " + std::to_string(d.size()) + "\n";
  for (std::size_t s = 0; s < d.size(); ++s)
    out += std::to_string(s) + " " + (d.tag(s).empty() ? std::string("-") : d.tag(s)) + " " +
           format_double(d.initial(s)) + "\n";
  out += "transitions " + std::to_string(d.transition_count()) + "\n";
  for (std::size_t s = 0; s < d.size(); ++s)
    for (const auto& t : d.row(s))
      out += std::to_string(s) + " " + std::to_string(t.target) + " " + format_double(t.prob) + "\n";
  return out;
}

inline Dtmc read_explicit(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  auto next_line = [&](std::string& out) {
    while (std::getline(in, line)) {
      ++lineno;
      out = trim(line);
      if (out.empty() || out[0] == '#') continue;
      return true;
    }
    return false;
  };
  auto fail = [&](const std::string& msg) -> ParseError {
    return ParseError("dtmc file line " + std::to_string(lineno) + ": " + msg, lineno);
  };
  std::string l;
  std::size_t n = 0, m = 0;
  std::string kw;
  if (!next_line(l)) throw fail("missing 'states' line");
  {
    std::istringstream ss(l);
    if (!(ss >> kw >> n) || kw != "states" || n == 0) throw fail("expected 'states <n>'");
  }
  std::vector<std::string> tags(n);
  std::vector<double> init(n, 0.0);
  std::vector<bool> seen(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    if (!next_line(l)) throw fail("truncated state list");
    std::istringstream ss(l);
    std::size_t id;
    std::string tag, prob;
    if (!(ss >> id >> tag >> prob) || id >= n || seen[id]) throw fail("bad state line");
    seen[id] = true;
    tags[id] = tag == "-" ? "" : tag;
    if (!parse_double(prob, init[id])) throw fail("bad initial probability");
  }
  if (!next_line(l)) throw fail("missing 'transitions' line");
  {
    std::istringstream ss(l);
    if (!(ss >> kw >> m) || kw != "transitions") throw fail("expected 'transitions <m>'");
  }
  std::vector<std::vector<Transition>> rows(n);
  for (std::size_t i = 0; i < m; ++i) {
    if (!next_line(l)) throw fail("truncated transition list");
    std::istringstream ss(l);
    std::size_t src, dst;
    std::string prob;
    double p;
    if (!(ss >> src >> dst >> prob) || src >= n || dst >= n || !parse_double(prob, p)) throw fail("bad transition line");
    rows[src].push_back({dst, p});
  }
  return Dtmc(std::move(tags), std::move(init), std::move(rows));
}

inline Dtmc read_explicit(const std::string& text) {
  std::istringstream in(text);
  return read_explicit(in);
}

inline Dtmc load_explicit(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open model file '" + path + "'");
  return read_explicit(in);
}

/// Graphviz rendering; `highlight` marks target states with a double circle.
inline std::string write_dot(const Dtmc& d, const std::vector<bool>& highlight = {}) {
  std::string out = "digraph dtmc {\n  rankdir=LR;\n  node [shape=circle];\n  init [shape=point];\n";
  for (std::size_t s = 0; s < d.size(); ++s) {
    std::string label = d.tag(s).empty() ? "&epsilon;" : d.tag(s);
    out += "  s" + std::to_string(s) + " [label=\"" + label + "\"";
    if (s < highlight.size() && highlight[s]) out += ", shape=doublecircle";
    out += "];\n";
  }
  for (std::size_t s = 0; s < d.size(); ++s)
    if (d.initial(s) > 0.0)
      out += "  init -> s" + std::to_string(s) + " [label=\"" + format_double(d.initial(s)) + "\"];\n";
  for (std::size_t s = 0; s < d.size(); ++s)
    for (const auto& t : d.row(s))
      out += "  s" + std::to_string(s) + " -> s" + std::to_string(t.target) + " [label=\"" +
             format_double(t.prob) + "\"];\n";
  out += "}\n";
  return out;
}

}  // namespace lar
