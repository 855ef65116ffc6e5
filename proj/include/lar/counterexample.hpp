#pragma once

// Smallest probabilistic counterexample: most probable target-hitting-first
// paths, enumerated best-first, accumulated until their mass exceeds r.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "lar/common.hpp"
#include "lar/dtmc.hpp"
#include "lar/pmc.hpp"
#include "lar/predicate.hpp"

namespace lar {

struct AbstractPath {
  std::vector<std::size_t> states;
  double probability = 0.0;  // initial-weighted
};

/// Lazy enumeration of target-hitting-first paths in non-increasing probability;
/// equal probabilities come out in lexicographic order of state indices.
/// Paths whose probability falls below the smallest normal double are dropped.
class PathEnumerator {
 public:
  PathEnumerator(const Dtmc& d, std::vector<bool> target) : d_(d), target_(std::move(target)) {
    live_ = can_reach(d_, target_);
    for (std::size_t s = 0; s < d_.size(); ++s)
      if (d_.initial(s) > 0.0 && live_[s]) push(kNone, s, d_.initial(s));
  }

  PathEnumerator(const PathEnumerator&) = delete;
  PathEnumerator& operator=(const PathEnumerator&) = delete;

  /// Next path, or false when every path has been produced.
  bool next(AbstractPath& out) {
    while (!heap_.empty()) {
      Entry e = heap_.top();
      heap_.pop();
      ++expansions_;
      std::size_t s = arena_[e.node].state;
      if (target_[s]) {
        out.states = sequence(e.node);
        out.probability = e.prob;
        return true;
      }
      for (const auto& t : d_.row(s)) {
        double q = e.prob * t.prob;
        if (q >= std::numeric_limits<double>::min() && live_[t.target]) push(e.node, t.target, q);
      }
    }
    return false;
  }

  std::size_t expansions() const { return expansions_; }

 private:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  struct Link {
    std::size_t parent;
    std::size_t state;
    std::size_t length;
  };
  struct Entry {
    double prob;
    std::size_t node;
  };

  void push(std::size_t parent, std::size_t state, double prob) {
    std::size_t len = parent == kNone ? 1 : arena_[parent].length + 1;
    arena_.push_back({parent, state, len});
    heap_.push({prob, arena_.size() - 1});
  }

  std::vector<std::size_t> sequence(std::size_t node) const {
    std::vector<std::size_t> seq(arena_[node].length);
    for (std::size_t i = seq.size(); i-- > 0; node = arena_[node].parent) seq[i] = arena_[node].state;
    return seq;
  }

  struct Order {
    const PathEnumerator* self;
    // priority_queue pops the "largest": higher probability, then lexicographically smaller path.
    bool operator()(const Entry& a, const Entry& b) const {
      if (a.prob != b.prob) return a.prob < b.prob;
      return self->sequence(a.node) > self->sequence(b.node);
    }
  };

  const Dtmc& d_;
  std::vector<bool> target_;
  std::vector<bool> live_;
  std::vector<Link> arena_;
  std::priority_queue<Entry, std::vector<Entry>, Order> heap_{Order{this}};
  std::size_t expansions_ = 0;
};

enum class CexStatus { Found, Exhausted, Truncated };

inline const char* to_string(CexStatus s) {
  switch (s) {
    case CexStatus::Found: return "found";
    case CexStatus::Exhausted: return "exhausted";
    case CexStatus::Truncated: return "truncated";
  }
  return "?";
}

struct Counterexample {
  CexStatus status = CexStatus::Exhausted;
  std::vector<AbstractPath> paths;  // descending probability
  double mass = 0.0;
  double threshold = 0.0;

  std::size_t longest_path() const {
    std::size_t m = 0;
    for (const auto& p : paths) m = std::max(m, p.states.size());
    return m;
  }
};

struct CexOptions {
  std::size_t k_max = 1000000;
  std::size_t max_expansions = 50000000;
};

inline Counterexample build_counterexample(const Dtmc& d, const std::vector<bool>& target, double r,
                                           const CexOptions& opt = {}) {
  Counterexample c;
  c.threshold = r;
  PathEnumerator en(d, target);
  AbstractPath p;
  while (c.mass <= r) {
    if (c.paths.size() >= opt.k_max || en.expansions() >= opt.max_expansions) {
      c.status = CexStatus::Truncated;
      return c;
    }
    if (!en.next(p)) {
      c.status = CexStatus::Exhausted;
      return c;
    }
    c.mass += p.probability;
    c.paths.push_back(p);
  }
  c.status = CexStatus::Found;
  return c;
}

struct Membership {
  bool member = false;
  bool out_of_model = false;
};

/// Membership of abstract traces in γ(C) via the deterministic walk through the model.
class CounterexampleIndex {
 public:
  CounterexampleIndex(const Dtmc& d, const Counterexample& c, std::vector<bool> target)
      : d_(d), target_(std::move(target)) {
    for (const auto& p : c.paths) paths_.insert(p.states);
  }

  Membership member(const AbstractTrace& a) const {
    Membership m;
    if (a.empty()) return m;
    auto s = d_.initial_by_tag(a[0]);
    if (!s) {
      m.out_of_model = true;
      return m;
    }
    std::vector<std::size_t> path{*s};
    for (std::size_t i = 1;; ++i) {
      if (target_[path.back()]) {
        m.member = paths_.count(path) > 0;
        return m;
      }
      if (i >= a.size()) return m;
      auto n = d_.successor_by_tag(path.back(), a[i]);
      if (!n) {
        m.out_of_model = true;
        return m;
      }
      path.push_back(*n);
    }
  }

 private:
  const Dtmc& d_;
  std::vector<bool> target_;
  std::set<std::vector<std::size_t>> paths_;
};

inline std::string serialize_counterexample(const Dtmc& d, const Counterexample& c) {
  std::string out = "# counterexample\n";
  out += "status " + std::string(to_string(c.status)) + "\n";
  out += "mass " + format_double(c.mass) + "\n";
  out += "threshold " + format_double(c.threshold) + "\n";
  out += "paths " + std::to_string(c.paths.size()) + "\n";
  for (const auto& p : c.paths) {
    out += format_double(p.probability) + " ";
    for (std::size_t i = 0; i < p.states.size(); ++i) out += (i ? "," : "") + std::to_string(p.states[i]);
    out += " ";
    for (std::size_t i = 0; i < p.states.size(); ++i) {
      const auto& tag = d.tag(p.states[i]);
      out += (i ? "," : "") + (tag.empty() ? std::string("-") : tag);
    }
    out += "\n";
  }
  return out;
}

}  // namespace lar
