#pragma once

// Linear predicates over schema variables and the predicate abstraction that
// maps concrete states to bit strings (bit i = truth of predicate i).
//
// Grammar:  <lincomb> <rel> <const>
//           <lincomb> ::= [-][coef*]var (('+'|'-') [coef*]var)*
//           <rel>     ::= < | <= | > | >= | ==

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lar/common.hpp"
#include "lar/trace.hpp"

namespace lar {

enum class Rel { Lt, Le, Gt, Ge, Eq };

inline const char* to_string(Rel r) {
  switch (r) {
    case Rel::Lt: return "<";
    case Rel::Le: return "<=";
    case Rel::Gt: return ">";
    case Rel::Ge: return ">=";
    case Rel::Eq: return "==";
  }
  return "?";
}

inline bool compare(double lhs, Rel r, double rhs) {
  switch (r) {
    case Rel::Lt: return lhs < rhs;
    case Rel::Le: return lhs <= rhs;
    case Rel::Gt: return lhs > rhs;
    case Rel::Ge: return lhs >= rhs;
    case Rel::Eq: return lhs == rhs;
  }
  return false;
}

struct Term {
  std::string var;
  double coef;
  bool operator==(const Term&) const = default;
};

class Predicate {
 public:
  Predicate() = default;
  Predicate(std::vector<Term> terms, Rel rel, double constant) : terms_(), rel_(rel), constant_(constant) {
    for (auto& t : terms) {
      if (!std::isfinite(t.coef)) throw Error("predicate: non-finite coefficient");
      auto it = std::find_if(terms_.begin(), terms_.end(), [&](const Term& u) { return u.var == t.var; });
      if (it == terms_.end())
        terms_.push_back(t);
      else
        it->coef += t.coef;
    }
    std::erase_if(terms_, [](const Term& t) { return t.coef == 0.0; });
    if (terms_.empty()) throw Error("predicate: no variable with a nonzero coefficient");
    if (!std::isfinite(constant_)) throw Error("predicate: non-finite constant");
  }

  /// Convenience: `var rel constant`.
  static Predicate atom(const std::string& var, Rel rel, double constant) { return Predicate({{var, 1.0}}, rel, constant); }

  const std::vector<Term>& terms() const { return terms_; }
  Rel rel() const { return rel_; }
  double constant() const { return constant_; }

  std::vector<std::string> variables() const {
    std::vector<std::string> v;
    for (const auto& t : terms_) v.push_back(t.var);
    return v;
  }

  bool eval(const VariableSchema& schema, const ConcreteState& s) const {
    double lhs = 0.0;
    for (const auto& t : terms_) {
      long i = schema.index_of(t.var);
      if (i < 0) throw Error("predicate '" + str() + "' references unknown variable '" + t.var + "'");
      lhs += t.coef * s.at(static_cast<std::size_t>(i));
    }
    return compare(lhs, rel_, constant_);
  }

  void check_schema(const VariableSchema& schema) const {
    for (const auto& t : terms_)
      if (schema.index_of(t.var) < 0)
        throw Error("predicate '" + str() + "' references unknown variable '" + t.var + "'");
  }

  /// Max-magnitude coefficient scaled to 1 (sign kept), relation flipped to > / >= / ==.
  Predicate normalized() const {
    double m = 0.0;
    for (const auto& t : terms_) m = std::max(m, std::abs(t.coef));
    double sign = (rel_ == Rel::Lt || rel_ == Rel::Le) ? -1.0 : 1.0;
    Rel r = rel_ == Rel::Lt ? Rel::Gt : rel_ == Rel::Le ? Rel::Ge : rel_;
    std::vector<Term> ts;
    for (const auto& t : terms_) ts.push_back({t.var, sign * t.coef / m});
    std::sort(ts.begin(), ts.end(), [](const Term& a, const Term& b) { return a.var < b.var; });
    if (r == Rel::Eq && ts.front().coef < 0) {
      for (auto& t : ts) t.coef = -t.coef;
      return Predicate(ts, r, -sign * constant_ / m);
    }
    return Predicate(ts, r, sign * constant_ / m);
  }

  /// Same normalized form, or normalized forms of complementary predicates.
  bool same_partition(const Predicate& o) const {
    Predicate a = normalized(), b = o.normalized();
    if (a == b) return true;
    auto close = [](const Predicate& x, const Predicate& y) {
      if (x.terms_.size() != y.terms_.size() || x.constant_ != y.constant_) return false;
      for (std::size_t i = 0; i < x.terms_.size(); ++i)
        if (x.terms_[i] != y.terms_[i]) return false;
      return true;
    };
    // x > c is the complement of -x >= -c after normalization.
    if (a.rel_ != Rel::Eq && b.rel_ != Rel::Eq && a.rel_ != b.rel_) {
      std::vector<Term> neg;
      for (const auto& t : b.terms_) neg.push_back({t.var, -t.coef});
      Predicate nb(neg, b.rel_ == Rel::Gt ? Rel::Ge : Rel::Gt, -b.constant_);
      return close(a, nb);
    }
    return false;
  }

  std::string str() const {
    std::string out;
    for (std::size_t i = 0; i < terms_.size(); ++i) {
      double c = terms_[i].coef;
      if (i == 0) {
        if (c < 0) out += "-";
      } else {
        out += c < 0 ? " - " : " + ";
      }
      double a = std::abs(c);
      if (a != 1.0) out += format_double(a) + "*";
      out += terms_[i].var;
    }
    out += std::string(" ") + to_string(rel_) + " " + format_double(constant_);
    return out;
  }

  bool operator==(const Predicate&) const = default;

 private:
  std::vector<Term> terms_;
  Rel rel_ = Rel::Ge;
  double constant_ = 0.0;
};

namespace detail {

class PredicateLexer {
 public:
  explicit PredicateLexer(std::string_view text, std::size_t base_column = 0) : s_(text), base_(base_column) {}

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool at_end() {
    skip_ws();
    return pos_ >= s_.size();
  }
  char peek() {
    skip_ws();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }
  std::size_t column() const { return base_ + pos_ + 1; }
  std::size_t pos() const { return pos_; }

  [[noreturn]] void fail(const std::string& msg) {
    throw ParseError("predicate parse error at column " + std::to_string(column()) + ": " + msg, 1, column());
  }

  bool accept(char c) {
    if (peek() == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  bool number_ahead() {
    char c = peek();
    return std::isdigit(static_cast<unsigned char>(c)) || c == '.';
  }

  double number() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.' ||
                                s_[pos_] == 'e' || s_[pos_] == 'E' ||
                                ((s_[pos_] == '-' || s_[pos_] == '+') && pos_ > start &&
                                 (s_[pos_ - 1] == 'e' || s_[pos_ - 1] == 'E'))))
      ++pos_;
    double v;
    if (start == pos_ || !parse_double(s_.substr(start, pos_ - start), v)) {
      pos_ = start;
      fail("expected a number");
    }
    return v;
  }

  std::string ident() {
    skip_ws();
    std::size_t start = pos_;
    if (pos_ < s_.size() && (std::isalpha(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
      ++pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' || s_[pos_] == '.'))
        ++pos_;
    }
    if (start == pos_) fail("expected a variable name");
    return std::string(s_.substr(start, pos_ - start));
  }

  Rel rel() {
    skip_ws();
    auto two = s_.substr(pos_, 2);
    if (two == "<=") { pos_ += 2; return Rel::Le; }
    if (two == ">=") { pos_ += 2; return Rel::Ge; }
    if (two == "==") { pos_ += 2; return Rel::Eq; }
    if (accept('<')) return Rel::Lt;
    if (accept('>')) return Rel::Gt;
    fail("expected one of < <= > >= ==");
  }

  Predicate predicate() {
    std::vector<Term> terms;
    double sign = 1.0;
    if (accept('-')) sign = -1.0;
    else accept('+');
    for (;;) {
      double coef = 1.0;
      if (number_ahead()) {
        coef = number();
        if (!accept('*')) fail("expected '*' after coefficient");
      }
      terms.push_back({ident(), sign * coef});
      if (accept('+')) sign = 1.0;
      else if (accept('-')) sign = -1.0;
      else break;
    }
    Rel r = rel();
    double csign = 1.0;
    if (accept('-')) csign = -1.0;
    else accept('+');
    double c = csign * number();
    try {
      return Predicate(std::move(terms), r, c);
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      fail(e.what());
    }
  }

 private:
  std::string_view s_;
  std::size_t base_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Predicate parse_predicate(std::string_view text) {
  detail::PredicateLexer lx(text);
  Predicate p = lx.predicate();
  if (!lx.at_end()) lx.fail("unexpected trailing input");
  return p;
}

/// Conjunction of atomic predicates separated by '&' or '&&'.
inline std::vector<Predicate> parse_condition(std::string_view text, std::size_t base_column = 0) {
  detail::PredicateLexer lx(text, base_column);
  std::vector<Predicate> out;
  for (;;) {
    out.push_back(lx.predicate());
    if (lx.accept('&')) {
      lx.accept('&');
      continue;
    }
    break;
  }
  if (!lx.at_end()) lx.fail("unexpected trailing input");
  return out;
}

class PredicateSet {
 public:
  PredicateSet() = default;
  explicit PredicateSet(std::vector<Predicate> ps) {
    for (auto& p : ps)
      if (!add(std::move(p))) throw Error("predicate set: duplicate predicate");
  }

  /// False (and no change) when an equivalent predicate is already present.
  bool add(Predicate p) {
    if (contains(p)) return false;
    preds_.push_back(std::move(p));
    return true;
  }
  bool contains(const Predicate& p) const {
    return std::any_of(preds_.begin(), preds_.end(), [&](const Predicate& q) { return q.same_partition(p); });
  }

  std::size_t size() const { return preds_.size(); }
  bool empty() const { return preds_.empty(); }
  const Predicate& operator[](std::size_t i) const { return preds_[i]; }
  const std::vector<Predicate>& items() const { return preds_; }
  bool operator==(const PredicateSet&) const = default;

 private:
  std::vector<Predicate> preds_;
};

using AbstractState = std::string;  // one '0'/'1' per predicate
using AbstractTrace = std::vector<AbstractState>;

inline bool eval_predicate(const Predicate& p, const VariableSchema& schema, const ConcreteState& s) {
  return p.eval(schema, s);
}

/// Predicate set compiled against a schema into dense coefficient rows.
class Abstraction {
 public:
  Abstraction(const PredicateSet& ps, const VariableSchema& schema) {
    for (const auto& p : ps.items()) {
      std::vector<std::pair<std::size_t, double>> row;
      for (const auto& t : p.terms()) {
        long i = schema.index_of(t.var);
        if (i < 0) throw Error("predicate '" + p.str() + "' references unknown variable '" + t.var + "'");
        row.emplace_back(static_cast<std::size_t>(i), t.coef);
      }
      rows_.push_back({std::move(row), p.rel(), p.constant()});
    }
  }

  AbstractState state(const ConcreteState& s) const {
    AbstractState out(rows_.size(), '0');
    for (std::size_t k = 0; k < rows_.size(); ++k) {
      double lhs = 0.0;
      for (auto [i, c] : rows_[k].coefs) lhs += c * s.at(i);
      if (compare(lhs, rows_[k].rel, rows_[k].constant)) out[k] = '1';
    }
    return out;
  }

  AbstractTrace trace(const ConcreteTrace& t) const {
    AbstractTrace out;
    out.reserve(t.size());
    for (const auto& s : t.states) out.push_back(state(s));
    return out;
  }

 private:
  struct Row {
    std::vector<std::pair<std::size_t, double>> coefs;
    Rel rel;
    double constant;
  };
  std::vector<Row> rows_;
};

inline AbstractState abstract_state(const PredicateSet& ps, const VariableSchema& schema, const ConcreteState& s) {
  return Abstraction(ps, schema).state(s);
}

inline std::vector<AbstractTrace> abstract_trace_set(const PredicateSet& ps, const TraceSet& traces) {
  if (traces.empty()) throw Error("abstract_trace_set: empty trace set");
  Abstraction a(ps, traces.schema());
  std::vector<AbstractTrace> out;
  out.reserve(traces.size());
  for (const auto& t : traces.traces()) out.push_back(a.trace(t));
  return out;
}

/// Number of distinct abstract states realized on a trace set.
inline std::size_t distinct_abstract_states(const PredicateSet& ps, const TraceSet& traces) {
  Abstraction a(ps, traces.schema());
  std::vector<AbstractState> seen;
  for (const auto& t : traces.traces())
    for (const auto& s : t.states) seen.push_back(a.state(s));
  std::sort(seen.begin(), seen.end());
  return static_cast<std::size_t>(std::unique(seen.begin(), seen.end()) - seen.begin());
}

}  // namespace lar
