#include <gtest/gtest.h>

#include <cmath>

#include "lar/sprt.hpp"

using namespace lar;

TEST(Sprt, SixSuccessesAcceptH0) {
  Sprt t(0.2, SprtConfig{});
  EXPECT_NEAR(t.p0(), 0.15, 1e-15);
  EXPECT_NEAR(t.p1(), 0.25, 1e-15);
  EXPECT_NEAR(std::exp(t.upper_threshold()), 19.0, 1e-12);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(t.step(true), SprtVerdict::Pending);
  EXPECT_EQ(t.step(true), SprtVerdict::AcceptH0);
  EXPECT_NEAR(std::exp(t.log_ratio()), std::pow(5.0 / 3.0, 6), 1e-9);
  EXPECT_THROW(t.step(true), Error);
}

TEST(Sprt, TwentyFourFailuresAcceptH1) {
  Sprt t(0.2, SprtConfig{});
  for (int i = 0; i < 23; ++i) EXPECT_EQ(t.step(false), SprtVerdict::Pending) << i;
  EXPECT_EQ(t.step(false), SprtVerdict::AcceptH1);
  EXPECT_EQ(t.samples(), 24u);
  EXPECT_EQ(t.successes(), 0u);
  EXPECT_LE(std::pow(0.75 / 0.85, 24), 1.0 / 19.0);
  EXPECT_GT(std::pow(0.75 / 0.85, 23), 1.0 / 19.0);
}

TEST(Sprt, InteriorPointHasNoVerdict) {
  Sprt t(0.2, SprtConfig{});
  t.step(true);
  EXPECT_EQ(t.step(false), SprtVerdict::Pending);
  EXPECT_NEAR(std::exp(t.log_ratio()), (5.0 / 3.0) * (15.0 / 17.0), 1e-12);
}

TEST(Sprt, ConfigValidation) {
  EXPECT_THROW(Sprt(0.2, SprtConfig{0.0, 0.05, 0.05, 10}), Error);
  EXPECT_THROW(Sprt(0.2, SprtConfig{0.05, 0.5, 0.05, 10}), Error);
  EXPECT_THROW(Sprt(0.2, SprtConfig{0.05, 0.05, 0.0, 10}), Error);
  EXPECT_THROW(Sprt(1.5, SprtConfig{}), Error);
  EXPECT_THROW(Sprt(0.0, SprtConfig{}), Error);
  EXPECT_THROW(Sprt(1.0, SprtConfig{}), Error);
}

TEST(Sprt, DeltaClampedNearTheBoundary) {
  Sprt lo(0.02, SprtConfig{});
  EXPECT_NEAR(lo.delta(), 0.01, 1e-15);
  EXPECT_FALSE(lo.warning().empty());
  Sprt hi(0.98, SprtConfig{});
  EXPECT_NEAR(hi.delta(), 0.01, 1e-12);
  EXPECT_GT(hi.p0(), 0.0);
  EXPECT_LT(hi.p1(), 1.0);
  Sprt mid(0.5, SprtConfig{});
  EXPECT_TRUE(mid.warning().empty());
}

TEST(Sprt, MaxSamplesZeroIsInconclusive) {
  Sprt t(0.2, SprtConfig{0.05, 0.05, 0.05, 0});
  EXPECT_TRUE(t.done());
  EXPECT_EQ(t.verdict(), SprtVerdict::Inconclusive);
  Sprt capped(0.2, SprtConfig{0.05, 0.05, 0.05, 2});
  capped.step(true);
  EXPECT_EQ(capped.step(false), SprtVerdict::Inconclusive);
}

TEST(Sprt, LogRatioMatchesDirectProduct) {
  Sprt t(0.2, SprtConfig{0.05, 0.05, 0.05, 20000});
  double ratio = 1.0;
  for (int i = 0; i < 10000; ++i) {
    bool s = t.log_ratio() < 0.0;
    ratio *= s ? 0.25 / 0.15 : 0.75 / 0.85;
    ASSERT_EQ(t.step(s), SprtVerdict::Pending);
  }
  EXPECT_NEAR(t.log_ratio(), std::log(ratio), 1e-9);
  double closed = t.successes() * std::log(0.25 / 0.15) + (t.samples() - t.successes()) * std::log(0.75 / 0.85);
  EXPECT_NEAR(t.log_ratio(), closed, 1e-9);
}

TEST(Sprt, ExtraSuccessNeverTurnsH0IntoH1) {
  Rng rng(derive_seed(21, "mono"));
  for (int k = 0; k < 200; ++k) {
    std::vector<bool> seq;
    Sprt a(0.3, SprtConfig{});
    while (!a.done()) {
      bool s = rng.bernoulli(0.3);
      seq.push_back(s);
      a.step(s);
    }
    if (a.verdict() != SprtVerdict::AcceptH0) continue;
    for (std::size_t flip = 0; flip < seq.size(); ++flip) {
      if (seq[flip]) continue;
      Sprt b(0.3, SprtConfig{});
      for (std::size_t i = 0; i < seq.size() && !b.done(); ++i) b.step(i == flip ? true : seq[i]);
      EXPECT_NE(b.verdict(), SprtVerdict::AcceptH1);
    }
  }
}

TEST(Sprt, OperatingCharacteristic) {
  Rng rng(derive_seed(33, "oc"));
  const double r = 0.2, delta = 0.05;
  int h0_at_high = 0, h1_at_low = 0;
  const int trials = 500;
  for (int k = 0; k < trials; ++k) {
    Sprt hi(r, SprtConfig{});
    while (!hi.done()) hi.step(rng.bernoulli(r + 2 * delta));
    if (hi.verdict() == SprtVerdict::AcceptH0) ++h0_at_high;
    Sprt lo(r, SprtConfig{});
    while (!lo.done()) lo.step(rng.bernoulli(r - 2 * delta));
    if (lo.verdict() == SprtVerdict::AcceptH1) ++h1_at_low;
  }
  EXPECT_GE(h0_at_high, (1.0 - 0.05 - 0.02) * trials);
  EXPECT_GE(h1_at_low, (1.0 - 0.05 - 0.02) * trials);
}

TEST(Sprt, UnreachableTargetIsSpurious) {
  Dtmc d({"0", "1"}, {1, 0}, {{{0, 0.998}, {1, 0.002}}, {{1, 1}}});
  auto target = target_states(d, 1);
  auto c = build_counterexample(d, target, 0.2);
  auto sim = parse_simulator("variables x\nstates\n0, 0\ninitial\n0, 1\ntransitions\n0, 0, 1\n");
  PredicateSet ps({parse_predicate("x > 0")});
  Abstraction abs(ps, sim.schema());
  Rng rng(1);
  auto out = test_counterexample(d, c, target, abs, sim, 0.2, SprtConfig{}, rng);
  EXPECT_EQ(out.test.verdict(), SprtVerdict::AcceptH1);
  EXPECT_EQ(out.test.samples(), 24u);
  EXPECT_EQ(out.sampled.size(), 24u);
  for (const auto& t : out.sampled.traces()) EXPECT_GE(t.size(), c.longest_path());
  EXPECT_EQ(out.out_of_model, 0u);
}

TEST(Sprt, TranscriptFormat) {
  Sprt t(0.2, SprtConfig{});
  for (int i = 0; i < 6; ++i) t.step(true);
  std::string s = t.transcript();
  EXPECT_EQ(s.rfind("# sprt p0=0.15", 0), 0u);
  EXPECT_NE(s.find(" p1=0.25 alpha=0.05 beta=0.05\n"), std::string::npos);
  EXPECT_NE(s.find("\n6 1 "), std::string::npos);
  EXPECT_NE(s.find("verdict accept-H0\n"), std::string::npos);
  EXPECT_NE(s.find("successes 6\n"), std::string::npos);
}
