#pragma once

// Frequency prefix tree, compatibility-driven state merging (red-blue order),
// normalization to a DTMC, and BIC-based selection of the merge bound ε.
//
// Counts kept per node: arrivals L (traces passing through), ending count f,
// and per-symbol edge counts c(q,a). Departures D(q) = Σ_a c(q,a) = L − f in the
// tree; one-step probabilities are c(q,a)/D(q).

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lar/common.hpp"
#include "lar/dtmc.hpp"
#include "lar/predicate.hpp"

namespace lar {

class FrequencyTree {
 public:
  static constexpr int kRoot = 0;

  struct Edge {
    int node;
    long count;
  };
  struct Node {
    int symbol = -1;  // index into symbols(); -1 for the root
    long arrivals = 0;
    long ending = 0;
    std::size_t depth = 0;
    bool alive = true;
    std::vector<std::pair<int, Edge>> edges;  // sorted by symbol

    long departures() const {
      long d = 0;
      for (const auto& e : edges) d += e.second.count;
      return d;
    }
    const Edge* edge(int sym) const {
      for (const auto& e : edges)
        if (e.first == sym) return &e.second;
      return nullptr;
    }
    Edge* edge(int sym) {
      for (auto& e : edges)
        if (e.first == sym) return &e.second;
      return nullptr;
    }
    void add_edge(int sym, Edge e) {
      auto it = std::lower_bound(edges.begin(), edges.end(), sym,
                                 [](const std::pair<int, Edge>& p, int s) { return p.first < s; });
      edges.insert(it, {sym, e});
    }
  };

  explicit FrequencyTree(const std::vector<AbstractTrace>& traces) {
    if (traces.empty()) throw Error("prefix tree: no traces");
    for (const auto& t : traces) {
      if (t.empty()) throw Error("prefix tree: empty trace");
      for (const auto& s : t) symbols_.push_back(s);
    }
    std::sort(symbols_.begin(), symbols_.end());
    symbols_.erase(std::unique(symbols_.begin(), symbols_.end()), symbols_.end());

    nodes_.push_back(Node{});
    for (const auto& t : traces) {
      int q = kRoot;
      nodes_[q].arrivals++;
      for (const auto& s : t) {
        int sym = symbol_id(s);
        Edge* e = nodes_[q].edge(sym);
        int next;
        if (e) {
          e->count++;
          next = e->node;
        } else {
          next = static_cast<int>(nodes_.size());
          Node child;
          child.symbol = sym;
          child.depth = nodes_[q].depth + 1;
          nodes_.push_back(child);
          nodes_[q].add_edge(sym, {next, 1});
        }
        nodes_[next].arrivals++;
        q = next;
      }
      nodes_[q].ending++;
    }
  }

  const std::vector<std::string>& symbols() const { return symbols_; }
  int symbol_id(const std::string& s) const {
    auto it = std::lower_bound(symbols_.begin(), symbols_.end(), s);
    return (it != symbols_.end() && *it == s) ? static_cast<int>(it - symbols_.begin()) : -1;
  }
  std::string symbol_of(int node) const {
    int s = nodes_.at(node).symbol;
    return s < 0 ? std::string() : symbols_[s];
  }

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t live_count() const {
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.alive; }));
  }
  const Node& node(int q) const { return nodes_.at(q); }

  /// Node reached from the root by following `prefix`, if any.
  std::optional<int> find(const AbstractTrace& prefix) const {
    int q = kRoot;
    for (const auto& s : prefix) {
      int sym = symbol_id(s);
      const Edge* e = sym < 0 ? nullptr : nodes_[q].edge(sym);
      if (!e) return std::nullopt;
      q = e->node;
    }
    return q;
  }

  long label(int q) const { return nodes_.at(q).arrivals; }
  long departures(int q) const { return nodes_.at(q).departures(); }

  double next_symbol_prob(int q, const std::string& symbol) const {
    const Node& n = nodes_.at(q);
    if (!n.alive) throw Error("prefix tree: node was merged away");
    long d = n.departures();
    int sym = symbol_id(symbol);
    const Edge* e = sym < 0 ? nullptr : n.edge(sym);
    return (e && d > 0) ? static_cast<double>(e->count) / static_cast<double>(d) : 0.0;
  }

  double termination_prob(int q) const {
    const Node& n = nodes_.at(q);
    return n.arrivals > 0 ? static_cast<double>(n.ending) / static_cast<double>(n.arrivals) : 0.0;
  }

  /// Product of one-step probabilities along `suffix`; the empty suffix gives the termination probability.
  double multi_step_prob(int q, const AbstractTrace& suffix) const {
    if (suffix.empty()) return termination_prob(q);
    double p = 1.0;
    for (const auto& s : suffix) {
      p *= next_symbol_prob(q, s);
      if (p == 0.0) return 0.0;
      q = nodes_[q].edge(symbol_id(s))->node;
    }
    return p;
  }

  static double bound(long d, double eps) {
    if (d <= 0) return std::numeric_limits<double>::infinity();
    double dd = static_cast<double>(d);
    return std::sqrt(6.0 * eps * std::log(dd) / dd);
  }

  bool compatible(int a, int b, double eps) const {
    if (!(eps > 1.0)) throw Error("compatibility: epsilon must exceed 1");
    if (a == b) return true;
    if (nodes_.at(a).symbol != nodes_.at(b).symbol) return false;
    double bnd = bound(departures(a), eps) + bound(departures(b), eps);
    if (std::isinf(bnd)) return true;
    return suffixes_close(a, b, 1.0, 1.0, bnd);
  }

  /// Redirects the edge into `b` towards `a`, then folds b's subtree into a.
  void merge(int a, int b) {
    if (a == b || !nodes_.at(a).alive || !nodes_.at(b).alive) throw Error("merge: invalid nodes");
    bool redirected = false;
    for (auto& n : nodes_) {
      if (!n.alive) continue;
      for (auto& e : n.edges)
        if (e.second.node == b) {
          e.second.node = a;
          redirected = true;
        }
    }
    if (!redirected) throw Error("merge: node has no incoming edge");
    fold(a, b);
  }

  /// Merge where the single incoming edge of `b` is known to be parent --sym-->.
  void merge_child(int parent, int sym, int a, int b) {
    nodes_[parent].edge(sym)->node = a;
    fold(a, b);
  }

  /// Red-blue merging to a fixpoint; returns the red nodes in promotion order.
  std::vector<int> run_merging(double eps) {
    std::vector<int> red{kRoot};
    std::vector<bool> is_red(nodes_.size(), false);
    is_red[kRoot] = true;
    for (;;) {
      int best = -1, parent = -1, sym = -1;
      for (int r : red)
        for (const auto& e : nodes_[r].edges) {
          int c = e.second.node;
          if (is_red[c]) continue;
          if (best < 0 || blue_before(c, best)) {
            best = c;
            parent = r;
            sym = e.first;
          }
        }
      if (best < 0) break;
      bool merged = false;
      for (int r : red)
        if (compatible(r, best, eps)) {
          merge_child(parent, sym, r, best);
          merged = true;
          break;
        }
      if (!merged) {
        red.push_back(best);
        is_red[best] = true;
      }
    }
    return red;
  }

  /// Normalizes the merged automaton (states = `states`, root excluded) into a DTMC.
  Dtmc to_dtmc(const std::vector<int>& states) const {
    std::map<int, std::size_t> index;
    std::vector<std::string> tags;
    for (int q : states) {
      if (q == kRoot) continue;
      index[q] = tags.size();
      tags.push_back(symbol_of(q));
    }
    if (tags.empty()) throw Error("learner: empty model");
    auto at = [&](int q) {
      auto it = index.find(q);
      if (it == index.end()) throw Error("learner: edge leaves the state set");
      return it->second;
    };
    std::vector<double> init(tags.size(), 0.0);
    double droot = static_cast<double>(departures(kRoot));
    for (const auto& e : nodes_[kRoot].edges) init[at(e.second.node)] += static_cast<double>(e.second.count) / droot;
    std::vector<std::vector<Transition>> rows(tags.size());
    for (int q : states) {
      if (q == kRoot) continue;
      auto& row = rows[at(q)];
      long d = departures(q);
      if (d == 0) {
        row.push_back({at(q), 1.0});
        continue;
      }
      for (const auto& e : nodes_[q].edges)
        row.push_back({at(e.second.node), static_cast<double>(e.second.count) / static_cast<double>(d)});
    }
    return Dtmc(std::move(tags), std::move(init), std::move(rows));
  }

  /// Every live node, breadth-first from the root (for unmerged trees).
  std::vector<int> live_nodes() const {
    std::vector<int> out;
    for (int q = 0; q < static_cast<int>(nodes_.size()); ++q)
      if (nodes_[q].alive) out.push_back(q);
    return out;
  }

 private:
  bool blue_before(int x, int y) const {
    const Node &a = nodes_[x], &b = nodes_[y];
    if (a.depth != b.depth) return a.depth < b.depth;
    if (a.symbol != b.symbol) return a.symbol < b.symbol;
    return x < y;
  }

  bool suffixes_close(int a, int b, double pa, double pb, double bnd) const {
    const Node &na = nodes_[a], &nb = nodes_[b];
    double da = static_cast<double>(na.departures()), db = static_cast<double>(nb.departures());
    auto ia = na.edges.begin(), ib = nb.edges.begin();
    while (ia != na.edges.end() || ib != nb.edges.end()) {
      int sym;
      const Edge *ea = nullptr, *eb = nullptr;
      if (ib == nb.edges.end() || (ia != na.edges.end() && ia->first < ib->first)) {
        sym = ia->first;
        ea = &(ia++)->second;
      } else if (ia == na.edges.end() || ib->first < ia->first) {
        sym = ib->first;
        eb = &(ib++)->second;
      } else {
        sym = ia->first;
        ea = &(ia++)->second;
        eb = &(ib++)->second;
      }
      (void)sym;
      double qa = ea ? pa * static_cast<double>(ea->count) / da : 0.0;
      double qb = eb ? pb * static_cast<double>(eb->count) / db : 0.0;
      if (!(std::abs(qa - qb) < bnd)) return false;
      if (!ea || !eb) continue;
      if (qa < bnd && qb < bnd) continue;
      if (!suffixes_close(ea->node, eb->node, qa, qb, bnd)) return false;
    }
    return true;
  }

  void fold(int a, int b) {
    Node& nb = nodes_[b];
    nodes_[a].arrivals += nb.arrivals;
    nodes_[a].ending += nb.ending;
    nb.alive = false;
    auto edges = nb.edges;
    for (const auto& [sym, e] : edges) {
      if (Edge* mine = nodes_[a].edge(sym)) {
        mine->count += e.count;
        int target = mine->node;
        fold(target, e.node);
      } else {
        nodes_[a].add_edge(sym, e);
      }
    }
  }

  std::vector<std::string> symbols_;
  std::vector<Node> nodes_;
};

inline Dtmc aalergia(const std::vector<AbstractTrace>& traces, double eps) {
  if (!(eps > 1.0)) throw Error("aalergia: epsilon must exceed 1");
  FrequencyTree tree(traces);
  auto red = tree.run_merging(eps);
  return tree.to_dtmc(red);
}

/// The prefix tree itself normalized as a DTMC (no merging).
inline Dtmc prefix_tree_dtmc(const std::vector<AbstractTrace>& traces) {
  FrequencyTree tree(traces);
  return tree.to_dtmc(tree.live_nodes());
}

/// Walks an abstract trace through a symbol-deterministic DTMC; empty when it leaves the model.
inline std::vector<std::size_t> walk(const Dtmc& d, const AbstractTrace& t) {
  std::vector<std::size_t> path;
  if (t.empty()) return path;
  auto s = d.initial_by_tag(t[0]);
  if (!s) return {};
  path.push_back(*s);
  for (std::size_t i = 1; i < t.size(); ++i) {
    auto n = d.successor_by_tag(path.back(), t[i]);
    if (!n) return {};
    path.push_back(*n);
  }
  return path;
}

inline double log_likelihood(const Dtmc& d, const std::vector<AbstractTrace>& traces) {
  double ll = 0.0;
  for (const auto& t : traces) {
    auto path = walk(d, t);
    if (path.empty()) return -std::numeric_limits<double>::infinity();
    ll += std::log(d.initial(path[0]));
    for (std::size_t i = 1; i < path.size(); ++i) ll += std::log(d.probability(path[i - 1], path[i]));
  }
  return ll;
}

inline double bic_score(const Dtmc& d, const std::vector<AbstractTrace>& traces, double mu = 1.0) {
  double n = 0.0;
  for (const auto& t : traces) n += static_cast<double>(t.size());
  return log_likelihood(d, traces) - 0.5 * mu * static_cast<double>(d.size()) * std::log(n);
}

struct LearnerConfig {
  double epsilon_max = 64.0;
  std::vector<double> grid;  // empty: 1.1·2^k up to epsilon_max
  double mu = 1.0;
};

inline std::vector<double> epsilon_grid(const LearnerConfig& cfg) {
  std::vector<double> g = cfg.grid;
  if (g.empty())
    for (double e = 1.1; e <= cfg.epsilon_max; e *= 2.0) g.push_back(e);
  if (g.empty()) throw Error("learner: empty epsilon grid");
  for (double e : g)
    if (!(e > 1.0)) throw Error("learner: epsilon candidates must exceed 1");
  std::sort(g.begin(), g.end());
  return g;
}

struct Candidate {
  double epsilon;
  double log_likelihood;
  double bic;
  std::size_t states;
};

struct LearnResult {
  Dtmc model;
  double epsilon = 0.0;
  double bic = 0.0;
  std::vector<Candidate> candidates;
};

inline LearnResult select_model(const std::vector<AbstractTrace>& traces, const LearnerConfig& cfg = {}) {
  LearnResult best;
  bool have = false;
  double n = 0.0;
  for (const auto& t : traces) n += static_cast<double>(t.size());
  for (double eps : epsilon_grid(cfg)) {
    Dtmc m = aalergia(traces, eps);
    double ll = log_likelihood(m, traces);
    double bic = ll - 0.5 * cfg.mu * static_cast<double>(m.size()) * std::log(n);
    best.candidates.push_back({eps, ll, bic, m.size()});
    if (!have || bic > best.bic || (bic == best.bic && m.size() < best.model.size())) {
      best.model = std::move(m);
      best.epsilon = eps;
      best.bic = bic;
      have = true;
    }
  }
  return best;
}

}  // namespace lar
