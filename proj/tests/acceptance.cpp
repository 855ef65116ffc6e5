// Acceptance checks, one line per criterion. Exit status is the number of failures.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "lar/report.hpp"

using namespace lar;
namespace fs = std::filesystem;
using clock_type = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int n, bool ok, const std::string& what, const std::string& detail) {
  if (!ok) ++failures;
  std::cout << (ok ? "PASS" : "FAIL") << " [" << n << "] " << what << " : " << detail << std::endl;
}

double since_ms(clock_type::time_point t0) {
  return std::chrono::duration<double, std::milli>(clock_type::now() - t0).count();
}

std::string fmt(double v) { return format_double(v); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run(const std::string& cmd) {
  int rc = std::system((cmd + " > /dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string quote(const std::string& s) { return "'" + s + "'"; }

void append(std::vector<AbstractTrace>& v, const AbstractTrace& t, int n) {
  for (int i = 0; i < n; ++i) v.push_back(t);
}

void fig3() {
  auto t0 = clock_type::now();
  std::vector<AbstractTrace> v;
  append(v, {"0", "0", "0", "0"}, 88);
  append(v, {"0", "0", "0", "1"}, 2);
  append(v, {"0", "0", "1"}, 2);
  append(v, {"0", "0", "1", "1"}, 8);
  FrequencyTree t(v);
  std::vector<AbstractTrace> prefixes = {{}, {"0"}, {"0", "0"}, {"0", "0", "0"}, {"0", "0", "1"},
                                         {"0", "0", "0", "0"}, {"0", "0", "0", "1"}, {"0", "0", "1", "1"}};
  std::vector<long> expect = {100, 100, 100, 90, 10, 88, 2, 8}, got;
  for (const auto& p : prefixes) got.push_back(t.find(p) ? t.label(*t.find(p)) : -1);
  int n00 = *t.find({"0", "0"}), n000 = *t.find({"0", "0", "0"}), n001 = *t.find({"0", "0", "1"});
  long merged_label = t.label(n00) + t.label(n000);
  t.merge(n00, n000);
  double p = t.next_symbol_prob(n00, "1"), self = t.next_symbol_prob(n00, "0");
  double ms = since_ms(t0);
  bool ok = got == expect && merged_label == 190 && t.departures(n00) == 190 && t.label(n001) == 12 &&
            std::abs(p - 12.0 / 190.0) <= 1e-12 && std::abs(self - (1.0 - 12.0 / 190.0)) <= 1e-12 && ms < 1000;
  std::string labels;
  for (long l : got) labels += (labels.empty() ? "" : ",") + std::to_string(l);
  report(1, ok, "prefix tree labels and merge",
         "labels {" + labels + "}, L(00)+L(000)=" + std::to_string(merged_label) + ", outgoing mass of merged node " +
             std::to_string(t.departures(n00)) + " (arrivals after folding the self-loop " +
             std::to_string(t.label(n00)) + "), L(001)=" + std::to_string(t.label(n001)) + ", P(00->001)=" + fmt(p) +
             ", self " + fmt(self) + ", " + fmt(ms) + " ms");
}

Dtmc leaky_chain() { return Dtmc({"0", "1"}, {1, 0}, {{{0, 0.998}, {1, 0.002}}, {{1, 1}}}); }

ConcreteTrace zeros_then_ones(std::size_t zeros, std::size_t ones) {
  ConcreteTrace t;
  for (std::size_t i = 0; i < zeros; ++i) t.states.push_back({0});
  for (std::size_t i = 0; i < ones; ++i) t.states.push_back({2});
  return t;
}

void fig6() {
  auto t0 = clock_type::now();
  // 1000 steps out of state 0, three of them into state 1: empirical 0.997 / 0.003.
  TraceSet ts(VariableSchema({"observe0"}),
              {zeros_then_ones(300, 2), zeros_then_ones(300, 2), zeros_then_ones(400, 2)});
  auto ranked = identify_spurious_transitions(ts, leaky_chain(), PredicateSet({parse_predicate("observe0 > 1")}));
  double ms = since_ms(t0);
  bool ok = !ranked.empty() && ranked[0].source == 0 && ranked[0].target == 0 &&
            std::abs(ranked[0].p_diff - 0.001) <= 1e-12 && ms < 1000;
  std::string order;
  for (const auto& r : ranked)
    order += (order.empty() ? "" : ", ") + std::string("<") + std::to_string(r.source) + "," +
             std::to_string(r.target) + ">:" + fmt(r.p_diff);
  report(2, ok, "spurious transition ranking", order + ", " + fmt(ms) + " ms");
}

void fig7() {
  TraceSet ts(VariableSchema({"observe0"}), {ConcreteTrace{{{0.1}, {0.2}, {0.3}, {0.4}, {2}}}});
  auto tc = count_transition(0, 0, ts, PredicateSet({parse_predicate("observe0 > 1")}), leaky_chain());
  bool ok = tc.source_count == 4 && tc.pair_count == 3 &&
            tc.data.positives == std::vector<ConcreteState>{{0.1}, {0.2}, {0.3}} &&
            tc.data.negatives == std::vector<ConcreteState>{{0.4}};
  report(3, ok, "transition counting and data collection",
         "#s=" + std::to_string(tc.source_count) + " #<0,0>=" + std::to_string(tc.pair_count) +
             " positives=" + std::to_string(tc.data.positives.size()) +
             " negatives=" + std::to_string(tc.data.negatives.size()));
}

Dtmc random_acyclic(Rng& rng, std::size_t n) {
  std::vector<std::string> tags(n);
  std::vector<double> init(n, 0.0);
  std::vector<std::vector<Transition>> rows(n);
  double total = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    tags[s] = rng.bernoulli(0.3) ? "1" : "0";
    init[s] = rng.bernoulli(0.5) ? rng.uniform() : 0.0;
    total += init[s];
  }
  if (total == 0.0) init[0] = total = 1.0;
  for (auto& p : init) p /= total;
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<std::pair<std::size_t, double>> out;
    double sum = 0.0;
    for (std::size_t t = s + 1; t < n; ++t)
      if (rng.bernoulli(0.4)) {
        out.push_back({t, rng.uniform() + 0.01});
        sum += out.back().second;
      }
    if (out.empty()) rows[s].push_back({s, 1.0});
    for (const auto& [t, w] : out) rows[s].push_back({t, w / sum});
  }
  return Dtmc(tags, init, rows, 1e-9);
}

double path_sum(const Dtmc& d, const std::vector<bool>& target) {
  std::function<double(std::size_t)> from = [&](std::size_t s) -> double {
    if (target[s]) return 1.0;
    double p = 0.0;
    for (const auto& t : d.row(s))
      if (t.target != s) p += t.prob * from(t.target);
    return p;
  };
  double total = 0.0;
  for (std::size_t s = 0; s < d.size(); ++s)
    if (d.initial(s) > 0.0) total += d.initial(s) * from(s);
  return total;
}

void pmc_oracle() {
  auto t0 = clock_type::now();
  Rng rng(derive_seed(4, "acceptance-pmc"));
  double worst = 0.0;
  const int models = 200;
  for (int k = 0; k < models; ++k) {
    Dtmc d = random_acyclic(rng, 2 + rng.below(11));
    auto target = target_states(d, 1);
    worst = std::max(worst, std::abs(reach_probability(d, target).probability - path_sum(d, target)));
  }
  Dtmc chain = leaky_chain();
  double leak = reach_probability(chain, target_states(chain, 1)).probability;
  double ms = since_ms(t0);
  bool ok = worst <= 1e-9 && std::abs(leak - 1.0) <= 1e-9 && ms < 30000;
  report(4, ok, "reachability against path-sum oracle",
         std::to_string(models) + " acyclic models, max error " + fmt(worst) + "; leaky chain " + fmt(leak) + ", " +
             fmt(ms) + " ms");
}

void smallest_counterexample() {
  std::size_t k = 1;
  while (!(1.0 - std::pow(0.998, static_cast<double>(k)) > 0.2)) ++k;
  Dtmc d = leaky_chain();
  auto c = build_counterexample(d, target_states(d, 1), 0.2);
  double drop_last = c.paths.empty() ? 0.0 : c.mass - c.paths.back().probability;
  bool ok = c.status == CexStatus::Found && c.paths.size() == k && k == 112 && c.mass > 0.2 && drop_last <= 0.2;
  report(5, ok, "smallest counterexample",
         std::to_string(c.paths.size()) + " paths (closed form " + std::to_string(k) + "), mass " + fmt(c.mass) +
             ", without last " + fmt(drop_last));
}

void sprt_crossings() {
  Sprt h0(0.2, SprtConfig{});
  int n_h0 = 0;
  while (!h0.done()) {
    h0.step(true);
    ++n_h0;
  }
  Sprt h1(0.2, SprtConfig{});
  int n_h1 = 0;
  while (!h1.done()) {
    h1.step(false);
    ++n_h1;
  }
  double ratio6 = std::pow(5.0 / 3.0, 6);
  bool ok = h0.verdict() == SprtVerdict::AcceptH0 && n_h0 == 6 && h1.verdict() == SprtVerdict::AcceptH1 &&
            n_h1 == 24 && std::abs(h0.log_ratio() - std::log(ratio6)) <= 1e-9 &&
            std::abs(h0.upper_threshold() - std::log(19.0)) <= 1e-9 &&
            std::abs(h1.log_ratio() - 24 * std::log(0.75 / 0.85)) <= 1e-9;
  report(6, ok, "sequential test threshold crossings",
         "H0 after " + std::to_string(n_h0) + " successes (ratio " + fmt(std::exp(h0.log_ratio())) + "), H1 after " +
             std::to_string(n_h1) + " failures");
}

void sprt_operating_characteristic() {
  auto t0 = clock_type::now();
  const double r = 0.2, delta = 0.05, alpha = 0.05, beta = 0.05;
  const int trials = 500;
  Rng rng(derive_seed(7, "acceptance-oc"));
  int wrong_high = 0, wrong_low = 0;
  for (int k = 0; k < trials; ++k) {
    Sprt hi(r, SprtConfig{alpha, beta, delta, 100000});
    while (!hi.done()) hi.step(rng.bernoulli(r + 2 * delta));
    if (hi.verdict() != SprtVerdict::AcceptH0) ++wrong_high;
    Sprt lo(r, SprtConfig{alpha, beta, delta, 100000});
    while (!lo.done()) lo.step(rng.bernoulli(r - 2 * delta));
    if (lo.verdict() != SprtVerdict::AcceptH1) ++wrong_low;
  }
  double fh = static_cast<double>(wrong_high) / trials, fl = static_cast<double>(wrong_low) / trials;
  double ms = since_ms(t0);
  bool ok = fh <= beta + 0.02 && fl <= alpha + 0.02 && ms < 60000;
  report(7, ok, "sequential test operating characteristic",
         "wrong verdicts " + fmt(fh) + " at p=r+2d, " + fmt(fl) + " at p=r-2d over " + std::to_string(trials) +
             " trials, " + fmt(ms) + " ms");
}

void appendix_bound() {
  std::size_t a = sample_bound(10, 0.05, 0.05), b = sample_bound(10, 0.1, 0.05);
  bool mono = true;
  for (double eps = 0.01; eps < 0.5; eps += 0.01)
    for (double d = 0.01; d < 0.5; d += 0.01) {
      if (sample_bound(10, eps + 0.01, d) > sample_bound(10, eps, d)) mono = false;
      if (sample_bound(10, eps, d + 0.01) > sample_bound(10, eps, d)) mono = false;
    }
  bool ok = a == 1659 && b == 415 && mono;
  report(8, ok, "per-state sample bound",
         "n0(10,0.05,0.05)=" + std::to_string(a) + " n0(10,0.1,0.05)=" + std::to_string(b) +
             (mono ? ", monotone on sweep" : ", NOT monotone"));
}

struct CliRun {
  int exit_code;
  double ms;
};

CliRun verify(const fs::path& traces, const fs::path& config, double r, const fs::path& out, std::uint64_t seed) {
  std::string cmd = quote(LAR_CLI) + " verify --traces " + quote(traces.string()) + " --property " +
                    quote("P <= " + fmt(r) + " [ F observe > 1 ]") + " --sampler " +
                    quote("builtin:" + config.string()) + " --delta 0.02 --seed " + std::to_string(seed) + " --out " +
                    quote(out.string());
  auto t0 = clock_type::now();
  int rc = run(cmd);
  return {rc, since_ms(t0)};
}

std::optional<std::string> accepted_predicate(const fs::path& log) {
  std::istringstream in(slurp(log));
  std::string line;
  const std::string tag = ": accepted : ";
  while (std::getline(in, line)) {
    auto at = line.find(tag);
    if (at != std::string::npos) return line.substr(at + tag.size());
  }
  return std::nullopt;
}

void end_to_end(const fs::path& work) {
  fs::path config = fs::path(LAR_DATA_DIR) / "crowds.sim";
  fs::path traces = work / "crowds.trace";
  int sim_rc = run(quote(LAR_CLI) + " simulate --config " + quote(config.string()) +
                   " --count 1000 --min-length 10 --seed 7 --out " + quote(traces.string()));
  if (sim_rc != 0) {
    report(9, false, "end-to-end verification", "simulate exited with " + std::to_string(sim_rc));
    return;
  }
  auto sim = load_simulator(config.string());
  Predicate phi = parse_predicate("observe > 1");
  auto target = sim.states_where([&](const ConcreteState& s) { return phi.eval(sim.schema(), s); });
  double p_star = reach_probability(sim.chain(), target).probability;

  CliRun hi = verify(traces, config, 1.2 * p_star, work / "high", 3);
  CliRun lo = verify(traces, config, 0.8 * p_star, work / "low", 3);
  std::string sprt_lo = slurp(work / "low" / "sprt.txt");
  bool lo_confirmed = sprt_lo.rfind("verdict accept-H0") != std::string::npos;

  auto pred = accepted_predicate(work / "high" / "refinement.log");
  VariableSchema schema = sim.schema();
  bool separator = false;
  std::string how = "none";
  if (pred) {
    Predicate p = parse_predicate(*pred);
    Predicate law = parse_predicate("new - runCount < 0");
    if (p.same_partition(law)) {
      separator = true;
      how = "normalized match";
    } else {
      // equal on the integer grid, up to complement
      bool same = true, complement = true;
      for (double n = 0; n <= 10; ++n)
        for (double rc = 0; rc <= 10; ++rc)
          for (double o = 0; o <= 2; ++o) {
            bool a = p.eval(schema, {o, n, rc}), b = law.eval(schema, {o, n, rc});
            same = same && a == b;
            complement = complement && a != b;
          }
      separator = same || complement;
      how = separator ? "equal on the integer grid" : "different partition";
    }
  }
  bool ok = hi.exit_code == 0 && hi.ms < 60000 && lo.exit_code == 1 && lo.ms < 60000 && lo_confirmed && separator;
  report(9, ok, "end-to-end verification",
         "p*=" + fmt(p_star) + "; r=" + fmt(1.2 * p_star) + " exit " + std::to_string(hi.exit_code) + " in " +
             fmt(hi.ms) + " ms; r=" + fmt(0.8 * p_star) + " exit " + std::to_string(lo.exit_code) + " in " +
             fmt(lo.ms) + " ms" + (lo_confirmed ? " (counterexample accepted by the sequential test)" : "") +
             "; predicate '" + pred.value_or("") + "' " + how);
}

void convergence() {
  auto sim = parse_simulator(
      "variables x\nlength 8\nstates\n0, 0\n1, 1\n2, 2\ninitial\n0, 0.6\n1, 0.4\n"
      "transitions\n0, 0, 0.5\n0, 1, 0.3\n0, 2, 0.2\n1, 0, 0.25\n1, 1, 0.5\n1, 2, 0.25\n2, 0, 0.4\n2, 2, 0.6\n");
  PredicateSet ps({parse_predicate("x > 0"), parse_predicate("x > 1")});
  Abstraction abs(ps, sim.schema());
  // abstract tag of each hidden state
  std::map<std::string, std::size_t> hidden;
  for (std::size_t s = 0; s < sim.chain().size(); ++s) hidden[abs.state(sim.valuations()[s])] = s;
  auto max_error = [&](const Dtmc& m) {
    double err = 0.0;
    for (std::size_t s = 0; s < m.size(); ++s) {
      std::size_t h = hidden.at(m.tag(s));
      for (const auto& [tag, u] : hidden) {
        double learned = 0.0;
        for (const auto& t : m.row(s))
          if (m.tag(t.target) == tag) learned += t.prob;
        err = std::max(err, std::abs(learned - sim.chain().probability(h, u)));
      }
    }
    return err;
  };
  std::vector<double> medians;
  std::string detail;
  for (std::size_t n : {1000u, 10000u, 100000u}) {
    std::vector<double> errs;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      Rng rng(derive_seed(seed, "acceptance-convergence"));
      TraceSet ts = sample_batch(sim, n, 8, rng);
      errs.push_back(max_error(select_model(abstract_trace_set(ps, ts)).model));
    }
    std::sort(errs.begin(), errs.end());
    medians.push_back(errs[1]);
    detail += (detail.empty() ? "" : ", ") + std::to_string(n) + " traces: " + fmt(errs[1]);
  }
  bool ok = medians[0] > medians[1] && medians[1] > medians[2];
  report(10, ok, "learner convergence", "median max transition error " + detail);
}

void determinism(const fs::path& work) {
  fs::path config = fs::path(LAR_DATA_DIR) / "crowds.sim";
  fs::path t1 = work / "det1.trace", t2 = work / "det2.trace";
  for (const auto& t : {t1, t2})
    run(quote(LAR_CLI) + " simulate --config " + quote(config.string()) + " --count 500 --min-length 10 --seed 11 --out " +
        quote(t.string()));
  bool traces_same = slurp(t1) == slurp(t2) && !slurp(t1).empty();
  bool all_same = traces_same;
  std::string detail = traces_same ? "simulated traces identical" : "simulated traces differ";
  for (double r : {0.3, 0.2}) {
    CliRun a = verify(t1, config, r, work / "det_a", 5);
    CliRun b = verify(t1, config, r, work / "det_b", 5);
    std::string ja = slurp(work / "det_a" / "report.json"), jb = slurp(work / "det_b" / "report.json");
    bool same = a.exit_code == b.exit_code && !ja.empty() && ja == jb;
    all_same = all_same && same;
    detail += "; r=" + fmt(r) + " exit " + std::to_string(a.exit_code) + (same ? " reports identical" : " reports differ");
  }
  report(11, all_same, "determinism", detail);
}

}  // namespace

int main() {
  fs::path work = fs::temp_directory_path() / "lar_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);
  std::vector<std::function<void()>> checks = {fig3,
                                               fig6,
                                               fig7,
                                               pmc_oracle,
                                               smallest_counterexample,
                                               sprt_crossings,
                                               sprt_operating_characteristic,
                                               appendix_bound,
                                               [&] { end_to_end(work); },
                                               convergence,
                                               [&] { determinism(work); }};
  for (std::size_t i = 0; i < checks.size(); ++i) {
    try {
      checks[i]();
    } catch (const std::exception& e) {
      report(static_cast<int>(i + 1), false, "criterion raised an error", e.what());
    }
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures;
}
