#pragma once

// Concrete traces: schema, states, trace sets, and the line-oriented trace file format.
//
// File format: a header line of comma-separated variable names (a `:bool` suffix
// marks a boolean column), then one state per line. Blank lines separate traces.
// Lines starting with '#' are comments.

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lar/common.hpp"

namespace lar {

enum class VarKind { Boolean, Integer, Real };

inline const char* to_string(VarKind k) {
  switch (k) {
    case VarKind::Boolean: return "boolean";
    case VarKind::Integer: return "integer";
    case VarKind::Real: return "real";
  }
  return "?";
}

class VariableSchema {
 public:
  VariableSchema() = default;
  VariableSchema(std::vector<std::string> names, std::vector<VarKind> kinds)
      : names_(std::move(names)), kinds_(std::move(kinds)) {
    if (kinds_.empty()) kinds_.assign(names_.size(), VarKind::Real);
    if (kinds_.size() != names_.size()) throw Error("schema: names/kinds size mismatch");
    std::set<std::string> seen;
    for (const auto& n : names_) {
      if (n.empty()) throw Error("schema: empty variable name");
      if (!seen.insert(n).second) throw Error("schema: duplicate variable '" + n + "'");
    }
  }
  explicit VariableSchema(std::vector<std::string> names)
      : VariableSchema(std::move(names), {}) {}

  std::size_t arity() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<VarKind>& kinds() const { return kinds_; }
  const std::string& name(std::size_t i) const { return names_.at(i); }
  VarKind kind(std::size_t i) const { return kinds_.at(i); }

  /// Index of a variable, or -1.
  long index_of(const std::string& name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    return it == names_.end() ? -1 : static_cast<long>(it - names_.begin());
  }

  bool operator==(const VariableSchema&) const = default;

 private:
  std::vector<std::string> names_;
  std::vector<VarKind> kinds_;
};

/// One valuation of every schema variable; booleans are stored as 0/1.
using ConcreteState = std::vector<double>;

struct ConcreteTrace {
  std::vector<ConcreteState> states;

  std::size_t size() const { return states.size(); }
  bool operator==(const ConcreteTrace&) const = default;
};

class TraceSet {
 public:
  TraceSet() = default;
  explicit TraceSet(VariableSchema schema) : schema_(std::move(schema)) {}
  TraceSet(VariableSchema schema, std::vector<ConcreteTrace> traces) : schema_(std::move(schema)) {
    for (auto& t : traces) add(std::move(t));
  }

  void add(ConcreteTrace trace) {
    if (trace.states.empty()) throw Error("trace set: empty trace");
    for (const auto& s : trace.states) {
      if (s.size() != schema_.arity()) throw Error("trace set: state arity does not match schema");
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (!std::isfinite(s[i])) throw Error("trace set: non-finite value");
        if (schema_.kind(i) == VarKind::Boolean && s[i] != 0.0 && s[i] != 1.0)
          throw Error("trace set: boolean variable '" + schema_.name(i) + "' is not 0/1");
      }
    }
    traces_.push_back(std::move(trace));
  }

  void append(const TraceSet& other) {
    if (!(other.schema_.names() == schema_.names())) throw Error("trace set: schema mismatch on append");
    for (const auto& t : other.traces_) traces_.push_back(t);
  }

  const VariableSchema& schema() const { return schema_; }
  const std::vector<ConcreteTrace>& traces() const { return traces_; }
  std::size_t size() const { return traces_.size(); }
  bool empty() const { return traces_.empty(); }
  const ConcreteTrace& operator[](std::size_t i) const { return traces_[i]; }

  bool operator==(const TraceSet&) const = default;

 private:
  VariableSchema schema_;
  std::vector<ConcreteTrace> traces_;
};

namespace detail {

inline VariableSchema parse_header(const std::string& line, std::size_t lineno,
                                   std::vector<bool>& bool_flag) {
  std::vector<std::string> names;
  for (auto& cell : split(line, ',')) {
    std::string name = trim(cell);
    bool is_bool = false;
    if (name.size() > 5 && name.compare(name.size() - 5, 5, ":bool") == 0) {
      is_bool = true;
      name = trim(name.substr(0, name.size() - 5));
    }
    if (name.empty()) throw ParseError("malformed header at line " + std::to_string(lineno) + ": empty variable name", lineno);
    if (std::find(names.begin(), names.end(), name) != names.end())
      throw ParseError("malformed header at line " + std::to_string(lineno) + ": duplicate variable '" + name + "'", lineno);
    for (char c : name) {
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.'))
        throw ParseError("malformed header at line " + std::to_string(lineno) + ": bad variable name '" + name + "'", lineno);
    }
    names.push_back(name);
    bool_flag.push_back(is_bool);
  }
  return VariableSchema(names);
}

}  // namespace detail

/// Parses the trace file format. Column kinds are inferred from the data.
inline TraceSet parse_traces(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<bool> bool_flag;
  VariableSchema header;
  bool have_header = false;
  std::vector<ConcreteTrace> traces;
  ConcreteTrace current;

  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (!t.empty() && t[0] == '#') continue;
    if (!have_header) {
      if (t.empty()) continue;
      header = detail::parse_header(t, lineno, bool_flag);
      have_header = true;
      continue;
    }
    if (t.empty()) {
      if (!current.states.empty()) traces.push_back(std::move(current));
      current = {};
      continue;
    }
    auto cells = split(t, ',');
    if (cells.size() != header.arity())
      throw ParseError("ragged row at line " + std::to_string(lineno) + ": expected " +
                           std::to_string(header.arity()) + " cells, got " + std::to_string(cells.size()),
                       lineno);
    ConcreteState s(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (!parse_double(cells[i], s[i]))
        throw ParseError("non-numeric cell at line " + std::to_string(lineno) + ", column " + std::to_string(i + 1) +
                             ": '" + trim(cells[i]) + "'",
                         lineno, i + 1);
    }
    current.states.push_back(std::move(s));
  }
  if (!have_header) throw ParseError("empty file: no header line", lineno);
  if (!current.states.empty()) traces.push_back(std::move(current));
  if (traces.empty()) throw ParseError("empty file: no trace rows", lineno);

  std::vector<VarKind> kinds(header.arity(), VarKind::Integer);
  for (std::size_t i = 0; i < header.arity(); ++i) {
    bool all01 = true, integral = true;
    for (const auto& tr : traces)
      for (const auto& s : tr.states) {
        if (s[i] != 0.0 && s[i] != 1.0) all01 = false;
        if (s[i] != std::floor(s[i])) integral = false;
      }
    if (bool_flag[i]) {
      if (!all01) throw ParseError("boolean column '" + header.name(i) + "' holds a value other than 0/1", 1);
      kinds[i] = VarKind::Boolean;
    } else {
      kinds[i] = integral ? VarKind::Integer : VarKind::Real;
    }
  }
  return TraceSet(VariableSchema(header.names(), kinds), std::move(traces));
}

inline TraceSet parse_traces(const std::string& text) {
  std::istringstream in(text);
  return parse_traces(in);
}

inline TraceSet load_traces(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open trace file '" + path + "'");
  return parse_traces(in);
}

inline std::string serialize_traces(const TraceSet& ts) {
  std::string out;
  const auto& schema = ts.schema();
  for (std::size_t i = 0; i < schema.arity(); ++i) {
    if (i) out += ',';
    out += schema.name(i);
    if (schema.kind(i) == VarKind::Boolean) out += ":bool";
  }
  out += '\n';
  for (std::size_t t = 0; t < ts.size(); ++t) {
    if (t) out += '\n';
    for (const auto& s : ts[t].states) {
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ',';
        out += format_double(s[i]);
      }
      out += '\n';
    }
  }
  return out;
}

inline void save_traces(const TraceSet& ts, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write trace file '" + path + "'");
  out << serialize_traces(ts);
}

/// Coverage and length statistics; adequacy of the logs is left to the user.
struct TraceStatistics {
  std::size_t trace_count = 0;
  std::size_t total_states = 0;
  std::size_t distinct_states = 0;
  std::size_t min_length = 0;
  std::size_t max_length = 0;
  std::map<std::size_t, std::size_t> length_histogram;
};

inline TraceStatistics trace_statistics(const TraceSet& ts) {
  TraceStatistics st;
  st.trace_count = ts.size();
  std::set<ConcreteState> distinct;
  for (const auto& t : ts.traces()) {
    st.total_states += t.size();
    st.length_histogram[t.size()]++;
    for (const auto& s : t.states) distinct.insert(s);
  }
  st.distinct_states = distinct.size();
  if (!st.length_histogram.empty()) {
    st.min_length = st.length_histogram.begin()->first;
    st.max_length = st.length_histogram.rbegin()->first;
  }
  return st;
}

}  // namespace lar
