#pragma once

// Sequential probability ratio test on the Bernoulli event "a fresh trace lies
// in the counterexample", with indifference region (r−δ, r+δ).

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "lar/common.hpp"
#include "lar/counterexample.hpp"
#include "lar/predicate.hpp"
#include "lar/sampler.hpp"

namespace lar {

enum class SprtVerdict { Pending, AcceptH0, AcceptH1, Inconclusive };

inline const char* to_string(SprtVerdict v) {
  switch (v) {
    case SprtVerdict::Pending: return "pending";
    case SprtVerdict::AcceptH0: return "accept-H0";
    case SprtVerdict::AcceptH1: return "accept-H1";
    case SprtVerdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

struct SprtConfig {
  double alpha = 0.05;
  double beta = 0.05;
  double delta = 0.05;
  std::size_t max_samples = 100000;
};

class Sprt {
 public:
  Sprt(double r, const SprtConfig& cfg) : cfg_(cfg) {
    if (!(cfg.alpha > 0.0 && cfg.alpha < 0.5) || !(cfg.beta > 0.0 && cfg.beta < 0.5))
      throw Error("sprt: alpha and beta must lie in (0, 0.5)");
    if (!(cfg.delta > 0.0)) throw Error("sprt: delta must be positive");
    if (!(r >= 0.0 && r <= 1.0)) throw Error("sprt: threshold outside [0,1]");
    delta_ = cfg.delta;
    if (r - delta_ < 0.0 || r + delta_ > 1.0) {
      delta_ = std::min({cfg.delta, r / 2.0, (1.0 - r) / 2.0});
      warning_ = "delta clamped from " + format_double(cfg.delta) + " to " + format_double(delta_);
    }
    p0_ = r - delta_;
    p1_ = r + delta_;
    if (!(p0_ > 0.0) || !(p1_ < 1.0) || !(p1_ > p0_))
      throw Error("sprt: degenerate hypotheses p0=" + format_double(p0_) + ", p1=" + format_double(p1_));
    inc_success_ = std::log(p1_ / p0_);
    inc_failure_ = std::log((1.0 - p1_) / (1.0 - p0_));
    upper_ = std::log((1.0 - cfg.beta) / cfg.alpha);
    lower_ = std::log(cfg.beta / (1.0 - cfg.alpha));
    if (cfg_.max_samples == 0) verdict_ = SprtVerdict::Inconclusive;
  }

  SprtVerdict step(bool success) {
    if (verdict_ != SprtVerdict::Pending) throw Error("sprt: verdict already reached");
    ++n_;
    if (success) ++successes_;
    log_ratio_ += success ? inc_success_ : inc_failure_;
    history_.push_back({success, log_ratio_});
    if (log_ratio_ >= upper_)
      verdict_ = SprtVerdict::AcceptH0;
    else if (log_ratio_ <= lower_)
      verdict_ = SprtVerdict::AcceptH1;
    else if (n_ >= cfg_.max_samples)
      verdict_ = SprtVerdict::Inconclusive;
    return verdict_;
  }

  struct Record {
    bool success;
    double log_ratio;
  };

  SprtVerdict verdict() const { return verdict_; }
  bool done() const { return verdict_ != SprtVerdict::Pending; }
  std::size_t samples() const { return n_; }
  std::size_t successes() const { return successes_; }
  double log_ratio() const { return log_ratio_; }
  double p0() const { return p0_; }
  double p1() const { return p1_; }
  double delta() const { return delta_; }
  double upper_threshold() const { return upper_; }
  double lower_threshold() const { return lower_; }
  const std::string& warning() const { return warning_; }
  const std::vector<Record>& history() const { return history_; }
  const SprtConfig& config() const { return cfg_; }

  std::string transcript() const {
    std::string out = "# sprt p0=" + format_double(p0_) + " p1=" + format_double(p1_) + " alpha=" +
                      format_double(cfg_.alpha) + " beta=" + format_double(cfg_.beta) + "\n";
    if (!warning_.empty()) out += "# warning: " + warning_ + "\n";
    for (std::size_t i = 0; i < history_.size(); ++i)
      out += std::to_string(i + 1) + " " + (history_[i].success ? "1" : "0") + " " +
             format_double(history_[i].log_ratio) + "\n";
    out += "verdict " + std::string(to_string(verdict_)) + "\n";
    out += "samples " + std::to_string(n_) + "\n";
    out += "successes " + std::to_string(successes_) + "\n";
    return out;
  }

 private:
  SprtConfig cfg_;
  double delta_ = 0.0, p0_ = 0.0, p1_ = 0.0;
  double inc_success_ = 0.0, inc_failure_ = 0.0, upper_ = 0.0, lower_ = 0.0;
  double log_ratio_ = 0.0;
  std::size_t n_ = 0, successes_ = 0;
  SprtVerdict verdict_ = SprtVerdict::Pending;
  std::string warning_;
  std::vector<Record> history_;
};

struct SprtOutcome {
  Sprt test;
  TraceSet sampled;
  std::size_t out_of_model = 0;
};

/// Samples fresh traces until the SPRT decides whether the counterexample is spurious.
inline SprtOutcome test_counterexample(const Dtmc& d, const Counterexample& c, const std::vector<bool>& target,
                                       const Abstraction& abs, Sampler& sampler, double r, const SprtConfig& cfg,
                                       Rng& rng) {
  if (c.paths.empty()) throw Error("sprt: empty counterexample");
  SprtOutcome out{Sprt(r, cfg), TraceSet(sampler.schema()), 0};
  CounterexampleIndex index(d, c, target);
  std::size_t min_length = std::max<std::size_t>(1, c.longest_path());
  while (!out.test.done()) {
    ConcreteTrace t = sampler.next_trace(min_length, rng);
    Membership m = index.member(abs.trace(t));
    if (m.out_of_model) ++out.out_of_model;
    out.sampled.add(std::move(t));
    out.test.step(m.member);
  }
  return out;
}

}  // namespace lar
