#pragma once

// Trace sources: the sampler interface, a seeded hidden-DTMC simulator over
// concrete valuations, and an adapter for an external sampling command.
//
// Simulator configuration format:
//
//   variables x,y:bool,z        header in trace-file syntax
//   length 10                   optional default trace length (default 10)
//   states
//   <id>, <v1>, ..., <vn>
//   initial
//   <id>, <prob>
//   transitions
//   <src>, <dst>, <prob>
//
// State ids are arbitrary non-negative integers; '#' starts a comment line.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "lar/common.hpp"
#include "lar/dtmc.hpp"
#include "lar/trace.hpp"

namespace lar {

class Sampler {
 public:
  virtual ~Sampler() = default;
  virtual const VariableSchema& schema() const = 0;
  /// A trace with at least `min_length` states; all randomness comes from `rng`.
  virtual ConcreteTrace next_trace(std::size_t min_length, Rng& rng) = 0;
};

class HiddenDtmcSimulator : public Sampler {
 public:
  HiddenDtmcSimulator(VariableSchema schema, std::vector<ConcreteState> valuations, Dtmc chain,
                      std::size_t default_length = 10)
      : schema_(std::move(schema)), valuations_(std::move(valuations)), chain_(std::move(chain)),
        default_length_(default_length) {
    if (valuations_.size() != chain_.size()) throw Error("simulator: one valuation per state required");
    if (default_length_ == 0) throw Error("simulator: trace length must be positive");
    TraceSet check(schema_);
    check.add(ConcreteTrace{valuations_});
  }

  const VariableSchema& schema() const override { return schema_; }
  const Dtmc& chain() const { return chain_; }
  const std::vector<ConcreteState>& valuations() const { return valuations_; }
  std::size_t default_length() const { return default_length_; }

  std::vector<std::size_t> next_state_path(std::size_t length, Rng& rng) const {
    std::vector<std::size_t> path;
    path.push_back(draw(chain_.initial(), rng));
    while (path.size() < length) path.push_back(step(path.back(), rng));
    return path;
  }

  ConcreteTrace next_trace(std::size_t min_length, Rng& rng) override {
    ConcreteTrace t;
    for (auto s : next_state_path(std::max(min_length, default_length_), rng)) t.states.push_back(valuations_[s]);
    return t;
  }

  std::size_t step(std::size_t from, Rng& rng) const {
    const auto& row = chain_.row(from);
    double u = rng.uniform(), acc = 0.0;
    for (const auto& t : row) {
      acc += t.prob;
      if (u < acc) return t.target;
    }
    for (auto it = row.rbegin(); it != row.rend(); ++it)
      if (it->prob > 0.0) return it->target;
    return from;
  }

  /// Target mask over hidden states for a predicate on valuations.
  template <class Pred>
  std::vector<bool> states_where(Pred&& pred) const {
    std::vector<bool> mask(valuations_.size());
    for (std::size_t s = 0; s < valuations_.size(); ++s) mask[s] = pred(valuations_[s]);
    return mask;
  }

 private:
  static std::size_t draw(const std::vector<double>& dist, Rng& rng) {
    double u = rng.uniform(), acc = 0.0;
    for (std::size_t i = 0; i < dist.size(); ++i) {
      acc += dist[i];
      if (u < acc) return i;
    }
    for (std::size_t i = dist.size(); i-- > 0;)
      if (dist[i] > 0.0) return i;
    return 0;
  }

  VariableSchema schema_;
  std::vector<ConcreteState> valuations_;
  Dtmc chain_;
  std::size_t default_length_;
};

inline HiddenDtmcSimulator parse_simulator(std::istream& in) {
  enum class Section { None, States, Initial, Transitions } section = Section::None;
  std::string line;
  std::size_t lineno = 0;
  std::vector<bool> bool_flag;
  VariableSchema header;
  bool have_header = false;
  std::size_t length = 10;
  std::map<long, std::size_t> index;  // config id -> dense index
  std::vector<ConcreteState> vals;
  std::vector<std::pair<long, double>> init;
  std::vector<std::tuple<long, long, double, std::size_t>> trans;

  auto fail = [&](const std::string& msg) {
    return ParseError("simulator config line " + std::to_string(lineno) + ": " + msg, lineno);
  };
  auto parse_id = [&](const std::string& cell) {
    double v;
    if (!parse_double(cell, v) || v < 0 || v != std::floor(v)) throw fail("bad state id '" + trim(cell) + "'");
    return static_cast<long>(v);
  };
  auto parse_prob = [&](const std::string& cell) {
    double v;
    if (!parse_double(cell, v)) throw fail("bad probability '" + trim(cell) + "'");
    return v;
  };

  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.rfind("variables", 0) == 0 && !have_header) {
      header = detail::parse_header(trim(t.substr(9)), lineno, bool_flag);
      have_header = true;
      continue;
    }
    if (t.rfind("length", 0) == 0 && section == Section::None) {
      double v;
      if (!parse_double(t.substr(6), v) || v < 1 || v != std::floor(v)) throw fail("bad length");
      length = static_cast<std::size_t>(v);
      continue;
    }
    if (t == "states") { section = Section::States; continue; }
    if (t == "initial") { section = Section::Initial; continue; }
    if (t == "transitions") { section = Section::Transitions; continue; }
    auto cells = split(t, ',');
    switch (section) {
      case Section::None:
        throw fail("unexpected line before any section");
      case Section::States: {
        if (!have_header) throw fail("'variables' line must precede states");
        if (cells.size() != header.arity() + 1) throw fail("state line needs an id and " + std::to_string(header.arity()) + " values");
        long id = parse_id(cells[0]);
        if (index.count(id)) throw fail("duplicate state id " + std::to_string(id));
        ConcreteState s(header.arity());
        for (std::size_t i = 0; i < header.arity(); ++i)
          if (!parse_double(cells[i + 1], s[i])) throw fail("non-numeric value '" + trim(cells[i + 1]) + "'");
        index[id] = vals.size();
        vals.push_back(std::move(s));
        break;
      }
      case Section::Initial:
        if (cells.size() != 2) throw fail("initial line must be 'id, prob'");
        init.emplace_back(parse_id(cells[0]), parse_prob(cells[1]));
        break;
      case Section::Transitions:
        if (cells.size() != 3) throw fail("transition line must be 'src, dst, prob'");
        trans.emplace_back(parse_id(cells[0]), parse_id(cells[1]), parse_prob(cells[2]), lineno);
        break;
    }
  }
  if (!have_header) throw ParseError("simulator config: missing 'variables' line", lineno);
  if (vals.empty()) throw ParseError("simulator config: no states", lineno);

  auto lookup = [&](long id, std::size_t at) {
    auto it = index.find(id);
    if (it == index.end()) throw ParseError("simulator config line " + std::to_string(at) + ": unknown state id " + std::to_string(id), at);
    return it->second;
  };
  std::vector<double> initial(vals.size(), 0.0);
  for (auto [id, p] : init) initial[lookup(id, lineno)] += p;
  std::vector<std::vector<Transition>> rows(vals.size());
  for (auto& [src, dst, p, at] : trans) rows[lookup(src, at)].push_back({lookup(dst, at), p});

  std::vector<VarKind> kinds(header.arity(), VarKind::Integer);
  for (std::size_t i = 0; i < header.arity(); ++i) {
    bool integral = true;
    for (const auto& s : vals)
      if (s[i] != std::floor(s[i])) integral = false;
    kinds[i] = bool_flag[i] ? VarKind::Boolean : integral ? VarKind::Integer : VarKind::Real;
  }
  std::vector<std::string> tags;
  for (std::size_t s = 0; s < vals.size(); ++s) {
    std::string tag;
    for (std::size_t i = 0; i < vals[s].size(); ++i) tag += (i ? "," : "") + format_double(vals[s][i]);
    tags.push_back(tag);
  }
  Dtmc chain(std::move(tags), std::move(initial), std::move(rows));
  return HiddenDtmcSimulator(VariableSchema(header.names(), kinds), std::move(vals), std::move(chain), length);
}

inline HiddenDtmcSimulator parse_simulator(const std::string& text) {
  std::istringstream in(text);
  return parse_simulator(in);
}

inline HiddenDtmcSimulator load_simulator(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open simulator config '" + path + "'");
  return parse_simulator(in);
}

/// Runs `<command> <min_length>` and parses one trace from its standard output.
class ExecSampler : public Sampler {
 public:
  ExecSampler(std::string command, VariableSchema schema) : command_(std::move(command)), schema_(std::move(schema)) {}

  const VariableSchema& schema() const override { return schema_; }

  ConcreteTrace next_trace(std::size_t min_length, Rng&) override {
    std::string cmd = command_ + " " + std::to_string(min_length);
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) throw Error("sampler: cannot run '" + cmd + "'");
    std::string out;
    std::array<char, 4096> buf;
    std::size_t n;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), n);
    int status = ::pclose(pipe);
    if (status != 0) throw Error("sampler: '" + cmd + "' exited with status " + std::to_string(status));
    TraceSet ts = parse_traces(out);
    if (ts.schema().names() != schema_.names()) throw Error("sampler: trace header does not match the schema");
    const ConcreteTrace& t = ts[0];
    if (t.size() < min_length)
      throw Error("sampler: trace of length " + std::to_string(t.size()) + " shorter than requested " + std::to_string(min_length));
    return t;
  }

 private:
  std::string command_;
  VariableSchema schema_;
};

inline TraceSet sample_batch(Sampler& sampler, std::size_t count, std::size_t min_length, Rng& rng) {
  if (count == 0) throw Error("sample_batch: count must be positive");
  if (min_length == 0) throw Error("sample_batch: min_length must be positive");
  TraceSet out(sampler.schema());
  for (std::size_t i = 0; i < count; ++i) {
    try {
      ConcreteTrace t = sampler.next_trace(min_length, rng);
      if (t.size() < min_length) throw Error("trace shorter than requested");
      out.add(std::move(t));
    } catch (const Error& e) {
      throw Error("sample_batch: trace " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace lar
