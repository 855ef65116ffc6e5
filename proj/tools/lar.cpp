// Command-line front end: verify, simulate, bound.

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "lar/lar.hpp"
#include "lar/report.hpp"

namespace {

std::string read_property(const std::string& arg) {
  std::ifstream in(arg);
  if (!in) return arg;
  std::stringstream ss;
  ss << in.rdbuf();
  std::string text;
  for (const auto& line : lar::split(ss.str(), '\n')) {
    std::string t = lar::trim(line);
    if (!t.empty() && t[0] != '#') text += t + " ";
  }
  return lar::trim(text);
}

std::unique_ptr<lar::Sampler> make_sampler(const std::string& spec, const lar::VariableSchema& schema) {
  if (spec.rfind("builtin:", 0) == 0)
    return std::make_unique<lar::HiddenDtmcSimulator>(lar::load_simulator(spec.substr(8)));
  if (spec.rfind("exec:", 0) == 0) return std::make_unique<lar::ExecSampler>(spec.substr(5), schema);
  throw lar::Error("sampler must be builtin:<config> or exec:<command>");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learn-abstract-refine verification of P<=r [ F phi ] from system traces"};
  app.require_subcommand(1);

  auto* verify = app.add_subcommand("verify", "run the verification loop");
  std::string traces_path, property_arg, sampler_spec, out_dir = "lar-out";
  lar::LarConfig cfg;
  double k_max = 1e6, max_samples = 1e5;
  verify->add_option("--traces", traces_path, "trace file")->required();
  verify->add_option("--property", property_arg, "property text or file")->required();
  verify->add_option("--sampler", sampler_spec, "builtin:<config> or exec:<command>")->required();
  verify->add_option("--alpha", cfg.sprt.alpha, "type-I error bound")->capture_default_str();
  verify->add_option("--beta", cfg.sprt.beta, "type-II error bound")->capture_default_str();
  verify->add_option("--delta", cfg.sprt.delta, "indifference half-width")->capture_default_str();
  verify->add_option("--epsilon-max", cfg.learner.epsilon_max, "largest merge bound tried")->capture_default_str();
  verify->add_option("--max-iterations", cfg.max_iterations, "refinement iteration cap")->capture_default_str();
  verify->add_option("--k-max", k_max, "counterexample path cap")->capture_default_str();
  verify->add_option("--max-samples", max_samples, "sequential test sample cap")->capture_default_str();
  verify->add_option("--seed", cfg.seed, "root random seed")->capture_default_str();
  verify->add_option("--out", out_dir, "output directory")->capture_default_str();

  auto* simulate = app.add_subcommand("simulate", "sample traces from a simulator configuration");
  std::string sim_config, sim_out;
  std::size_t count = 100, length = 1;
  std::uint64_t sim_seed = 1;
  simulate->add_option("--config", sim_config, "simulator configuration")->required();
  simulate->add_option("--count", count, "number of traces")->capture_default_str();
  simulate->add_option("--min-length", length, "minimum trace length")->capture_default_str();
  simulate->add_option("--seed", sim_seed, "random seed")->capture_default_str();
  simulate->add_option("--out", sim_out, "output trace file (default: stdout)");

  auto* bound = app.add_subcommand("bound", "per-state sample requirement");
  std::size_t m = 1;
  double eps = 0.05, delta = 0.05;
  bound->add_option("--states", m, "state count")->required();
  bound->add_option("--epsilon", eps, "precision")->capture_default_str();
  bound->add_option("--delta", delta, "confidence")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 3;
  }

  try {
    if (*verify) {
      cfg.cex.k_max = static_cast<std::size_t>(k_max);
      cfg.sprt.max_samples = static_cast<std::size_t>(max_samples);
      lar::TraceSet traces = lar::load_traces(traces_path);
      lar::Property prop = lar::parse_property(read_property(property_arg));
      auto sampler = make_sampler(sampler_spec, traces.schema());
      lar::LarReport rep = lar::run_lar(traces, prop, cfg, *sampler);
      lar::export_report(rep, out_dir);
      std::cout << lar::summary_text(rep);
      switch (rep.verdict) {
        case lar::Verdict::Verified: return 0;
        case lar::Verdict::Violated: return 1;
        case lar::Verdict::Inconclusive: return 2;
      }
    }
    if (*simulate) {
      auto sim = lar::load_simulator(sim_config);
      lar::Rng rng(lar::derive_seed(sim_seed, "sampling"));
      std::string text = lar::serialize_traces(lar::sample_batch(sim, count, length, rng));
      if (sim_out.empty())
        std::cout << text;
      else
        lar::write_file(sim_out, text);
      return 0;
    }
    if (*bound) {
      std::cout << lar::sample_bound(m, eps, delta) << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 3;
}
