#pragma once

// Soft-margin linear SVM (squared hinge loss) trained by dual coordinate
// descent on standardized, deduplicated data, plus greedy feature minimization.
// A classifier reads: positive iff Σ coef_i·x_i >= threshold.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <vector>

#include "lar/common.hpp"
#include "lar/trace.hpp"

namespace lar {

struct LabeledDataset {
  std::vector<ConcreteState> positives;
  std::vector<ConcreteState> negatives;
};

struct SvmOptions {
  double c = 1000.0;
  std::size_t max_epochs = 20000;
  double tolerance = 1e-6;
  double accuracy_threshold = 0.99;
};

struct LinearClassifier {
  std::vector<double> coef;               // original coordinates, one per variable
  double threshold = 0.0;
  std::vector<double> standardized_coef;  // magnitude ranking for feature minimization
  double accuracy = 0.0;
  double margin = 0.0;
  std::size_t epochs = 0;

  bool positive(const ConcreteState& x) const {
    double s = 0.0;
    for (std::size_t i = 0; i < coef.size(); ++i) s += coef[i] * x[i];
    return s >= threshold;
  }
  std::size_t nonzero() const {
    return static_cast<std::size_t>(std::count_if(coef.begin(), coef.end(), [](double c) { return c != 0.0; }));
  }
};

struct WeightedPoint {
  ConcreteState x;
  int label;  // +1 / -1
  double weight;
};

inline std::vector<WeightedPoint> deduplicate(const LabeledDataset& data) {
  std::map<std::pair<ConcreteState, int>, double> counts;
  for (const auto& x : data.positives) counts[{x, 1}] += 1.0;
  for (const auto& x : data.negatives) counts[{x, -1}] += 1.0;
  std::vector<WeightedPoint> out;
  for (const auto& [k, w] : counts) out.push_back({k.first, k.second, w});
  return out;
}

inline double weighted_accuracy(const std::vector<WeightedPoint>& pts, const std::vector<double>& coef, double threshold) {
  double ok = 0.0, total = 0.0;
  for (const auto& p : pts) {
    double s = 0.0;
    for (std::size_t i = 0; i < coef.size(); ++i) s += coef[i] * p.x[i];
    bool pred = s >= threshold;
    if (pred == (p.label > 0)) ok += p.weight;
    total += p.weight;
  }
  return total > 0.0 ? ok / total : 0.0;
}

/// Trains on the variables in `features`; nullopt when no usable feature exists
/// or training accuracy stays below the threshold.
inline std::optional<LinearClassifier> train_linear_classifier(const LabeledDataset& data,
                                                              const std::vector<std::size_t>& features,
                                                              const SvmOptions& opt, Rng& rng) {
  if (data.positives.empty() || data.negatives.empty()) return std::nullopt;
  std::size_t arity = data.positives.front().size();
  auto pts = deduplicate(data);

  std::vector<std::size_t> used;
  std::vector<double> mean, sd;
  double total = 0.0;
  for (const auto& p : pts) total += p.weight;
  for (auto f : features) {
    if (f >= arity) throw Error("svm: feature index out of range");
    double m = 0.0;
    for (const auto& p : pts) m += p.weight * p.x[f];
    m /= total;
    double v = 0.0;
    for (const auto& p : pts) v += p.weight * (p.x[f] - m) * (p.x[f] - m);
    v /= total;
    if (v > 0.0) {
      used.push_back(f);
      mean.push_back(m);
      sd.push_back(std::sqrt(v));
    }
  }
  if (used.empty()) return std::nullopt;

  std::size_t n = pts.size(), k = used.size();
  std::vector<std::vector<double>> z(n, std::vector<double>(k + 1, 1.0));  // last slot: bias feature
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) z[i][j] = (pts[i].x[used[j]] - mean[j]) / sd[j];

  std::vector<double> alpha(n, 0.0), w(k + 1, 0.0), diag(n), qii(n);
  for (std::size_t i = 0; i < n; ++i) {
    diag[i] = 1.0 / (2.0 * opt.c * pts[i].weight);
    qii[i] = std::inner_product(z[i].begin(), z[i].end(), z[i].begin(), 0.0) + diag[i];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  LinearClassifier clf;
  for (clf.epochs = 1; clf.epochs <= opt.max_epochs; ++clf.epochs) {
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    double pg_max = -1e300, pg_min = 1e300;
    for (auto i : order) {
      double y = pts[i].label;
      double g = y * std::inner_product(w.begin(), w.end(), z[i].begin(), 0.0) - 1.0 + diag[i] * alpha[i];
      double pg = alpha[i] > 0.0 ? g : std::min(g, 0.0);
      pg_max = std::max(pg_max, pg);
      pg_min = std::min(pg_min, pg);
      if (std::abs(pg) > 1e-14) {
        double old = alpha[i];
        alpha[i] = std::max(old - g / qii[i], 0.0);
        double d = (alpha[i] - old) * y;
        for (std::size_t j = 0; j <= k; ++j) w[j] += d * z[i][j];
      }
    }
    if (pg_max - pg_min < opt.tolerance) break;
  }

  clf.coef.assign(arity, 0.0);
  clf.standardized_coef.assign(arity, 0.0);
  double bias = w[k], norm = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    clf.coef[used[j]] = w[j] / sd[j];
    clf.standardized_coef[used[j]] = w[j];
    bias -= w[j] * mean[j] / sd[j];
    norm += w[j] * w[j];
  }
  if (norm == 0.0) return std::nullopt;
  clf.threshold = -bias;
  clf.margin = 1.0 / std::sqrt(norm);
  clf.accuracy = weighted_accuracy(pts, clf.coef, clf.threshold);
  if (clf.accuracy < opt.accuracy_threshold) return std::nullopt;
  return clf;
}

inline std::optional<LinearClassifier> train_linear_classifier(const LabeledDataset& data, const SvmOptions& opt,
                                                              Rng& rng) {
  if (data.positives.empty()) return std::nullopt;
  std::vector<std::size_t> all(data.positives.front().size());
  std::iota(all.begin(), all.end(), 0);
  return train_linear_classifier(data, all, opt, rng);
}

/// Smallest prefix of variables (by |standardized coefficient|) whose retrained
/// classifier still meets the accuracy threshold; falls back to `clf`.
inline LinearClassifier minimize_features(const LinearClassifier& clf, const LabeledDataset& data,
                                          const SvmOptions& opt, Rng& rng) {
  std::vector<std::size_t> ranked;
  for (std::size_t i = 0; i < clf.coef.size(); ++i)
    if (clf.coef[i] != 0.0) ranked.push_back(i);
  std::stable_sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(clf.standardized_coef[a]) > std::abs(clf.standardized_coef[b]);
  });
  for (std::size_t m = 1; m < ranked.size(); ++m) {
    std::vector<std::size_t> subset(ranked.begin(), ranked.begin() + static_cast<long>(m));
    std::sort(subset.begin(), subset.end());
    if (auto c = train_linear_classifier(data, subset, opt, rng)) return *c;
  }
  return clf;
}

inline double round_significant(double v, int digits) {
  if (v == 0.0 || !std::isfinite(v)) return v;
  double mag = std::floor(std::log10(std::abs(v)));
  double scale = std::pow(10.0, digits - 1 - mag);
  return std::round(v * scale) / scale;
}

/// Readable form: largest |coefficient| scaled to 1, others rounded to 3
/// significant digits, threshold re-centred between the classes. Keeps the
/// unrounded scaled classifier when rounding costs accuracy.
inline LinearClassifier rationalize(const LinearClassifier& clf, const LabeledDataset& data, const SvmOptions& opt) {
  auto pts = deduplicate(data);
  double m = 0.0;
  for (double c : clf.coef) m = std::max(m, std::abs(c));
  LinearClassifier scaled = clf;
  for (auto& c : scaled.coef) c /= m;
  scaled.threshold /= m;

  LinearClassifier rounded = scaled;
  for (auto& c : rounded.coef) c = round_significant(c, 3);
  double max_neg = -1e300, min_pos = 1e300;
  for (const auto& p : pts) {
    double s = 0.0;
    for (std::size_t i = 0; i < rounded.coef.size(); ++i) s += rounded.coef[i] * p.x[i];
    if (p.label > 0) min_pos = std::min(min_pos, s);
    else max_neg = std::max(max_neg, s);
  }
  if (max_neg < min_pos) {
    double mid = 0.5 * (max_neg + min_pos);
    double r = round_significant(mid, 3);
    rounded.threshold = (r > max_neg && r <= min_pos) ? r : mid;
  } else {
    rounded.threshold = round_significant(scaled.threshold, 3);
  }
  rounded.accuracy = weighted_accuracy(pts, rounded.coef, rounded.threshold);
  if (rounded.accuracy >= std::max(opt.accuracy_threshold, clf.accuracy)) return rounded;
  scaled.accuracy = weighted_accuracy(pts, scaled.coef, scaled.threshold);
  return scaled;
}

}  // namespace lar
