#pragma once

// Unbounded reachability P(F target) on a DTMC and the P<=r verdict.

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>
#include <vector>

#include "lar/common.hpp"
#include "lar/dtmc.hpp"

namespace lar {

struct ReachOptions {
  std::size_t direct_limit = 5000;  // larger systems use value iteration
  double tolerance = 1e-10;
  std::size_t max_sweeps = 1000000;
};

struct ReachResult {
  double probability = 0.0;
  std::vector<double> per_state;  // P(F target) from each state
  bool iterative = false;
  std::size_t sweeps = 0;
};

/// States with a graph path to some target state (targets included).
inline std::vector<bool> can_reach(const Dtmc& d, const std::vector<bool>& target) {
  std::size_t n = d.size();
  if (target.size() != n) throw Error("reachability: target mask size differs from state count");
  std::vector<std::vector<std::size_t>> pred(n);
  for (std::size_t s = 0; s < n; ++s)
    for (const auto& t : d.row(s))
      if (t.prob > 0.0) pred[t.target].push_back(s);
  std::vector<bool> seen(target);
  std::deque<std::size_t> queue;
  for (std::size_t s = 0; s < n; ++s)
    if (target[s]) queue.push_back(s);
  while (!queue.empty()) {
    auto s = queue.front();
    queue.pop_front();
    for (auto p : pred[s])
      if (!seen[p]) {
        seen[p] = true;
        queue.push_back(p);
      }
  }
  return seen;
}

inline ReachResult reach_probability(const Dtmc& d, const std::vector<bool>& target, const ReachOptions& opt = {}) {
  std::size_t n = d.size();
  std::vector<bool> live = can_reach(d, target);
  std::vector<long> idx(n, -1);
  std::vector<std::size_t> unknown;
  for (std::size_t s = 0; s < n; ++s)
    if (live[s] && !target[s]) {
      idx[s] = static_cast<long>(unknown.size());
      unknown.push_back(s);
    }

  ReachResult res;
  res.per_state.assign(n, 0.0);
  for (std::size_t s = 0; s < n; ++s)
    if (target[s]) res.per_state[s] = 1.0;

  std::size_t m = unknown.size();
  if (m > 0) {
    std::vector<double> b(m, 0.0);
    for (std::size_t i = 0; i < m; ++i)
      for (const auto& t : d.row(unknown[i]))
        if (target[t.target]) b[i] += t.prob;

    if (m <= opt.direct_limit) {
      std::vector<Eigen::Triplet<double>> trip;
      for (std::size_t i = 0; i < m; ++i) {
        trip.emplace_back(i, i, 1.0);
        for (const auto& t : d.row(unknown[i]))
          if (idx[t.target] >= 0) trip.emplace_back(i, idx[t.target], -t.prob);
      }
      Eigen::SparseMatrix<double> a(m, m);
      a.setFromTriplets(trip.begin(), trip.end());
      Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
      lu.compute(a);
      if (lu.info() != Eigen::Success) throw Error("reachability: sparse factorization failed");
      Eigen::VectorXd rhs = Eigen::Map<Eigen::VectorXd>(b.data(), static_cast<long>(m));
      Eigen::VectorXd x = lu.solve(rhs);
      if (lu.info() != Eigen::Success) throw Error("reachability: sparse solve failed");
      for (std::size_t i = 0; i < m; ++i) res.per_state[unknown[i]] = std::clamp(x[static_cast<long>(i)], 0.0, 1.0);
    } else {
      res.iterative = true;
      std::vector<double> x(m, 0.0);
      double delta = 0.0;
      for (res.sweeps = 1; res.sweeps <= opt.max_sweeps; ++res.sweeps) {
        delta = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          double v = b[i];
          for (const auto& t : d.row(unknown[i]))
            if (idx[t.target] >= 0) v += t.prob * x[static_cast<std::size_t>(idx[t.target])];
          delta = std::max(delta, std::abs(v - x[i]));
          x[i] = v;
        }
        if (delta < opt.tolerance) break;
      }
      if (delta >= opt.tolerance)
        throw Error("reachability: value iteration did not converge (residual " + format_double(delta) + ")");
      for (std::size_t i = 0; i < m; ++i) res.per_state[unknown[i]] = std::min(x[i], 1.0);
    }
  }
  for (std::size_t s = 0; s < n; ++s) res.probability += d.initial(s) * res.per_state[s];
  res.probability = std::clamp(res.probability, 0.0, 1.0);
  return res;
}

/// States whose tag has '1' at each of the first `atoms` positions.
inline std::vector<bool> target_states(const Dtmc& d, std::size_t atoms) {
  std::vector<bool> mask(d.size(), false);
  for (std::size_t s = 0; s < d.size(); ++s) {
    const auto& tag = d.tag(s);
    bool hit = tag.size() >= atoms && atoms > 0;
    for (std::size_t i = 0; hit && i < atoms; ++i) hit = tag[i] == '1';
    mask[s] = hit;
  }
  return mask;
}

struct CheckResult {
  bool satisfied = true;
  double probability = 0.0;
};

inline CheckResult check(const Dtmc& d, const std::vector<bool>& target, double r, const ReachOptions& opt = {}) {
  if (!(r >= 0.0 && r <= 1.0)) throw Error("check: threshold outside [0,1]");
  double p = reach_probability(d, target, opt).probability;
  return {p <= r, p};
}

}  // namespace lar
