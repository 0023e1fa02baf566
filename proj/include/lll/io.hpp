#pragma once

// Readers and writers for DIMACS CNF and the line-oriented system format:
//
//   var <idx> <n> <p_0> ... <p_{n-1}>
//   event <idx> vbl <i_1> ... <i_k> forbid <t_1 ... t_k>; <t_1 ... t_k>; ...
//   z <event idx> <q>          (optional local-lemma weight)
//   alpha <q>                  (optional strengthening factor)
//
// Rationals are written num/den (a bare integer or a finite decimal is also
// accepted). '#' starts a comment.

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lll/error.hpp"
#include "lll/model.hpp"
#include "lll/rational.hpp"

namespace lll {

struct SystemFile {
  ConstraintSystem system;
  std::optional<LLLParams> params;  // present iff the file had z lines
};

namespace detail {

inline std::string strip_comment(const std::string& line) {
  auto hash = line.find_first_of("#%");
  std::string s = hash == std::string::npos ? line : line.substr(0, hash);
  auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline std::size_t parse_index(const std::string& token, std::size_t line) {
  if (token.empty() || !std::all_of(token.begin(), token.end(), [](char c) { return c >= '0' && c <= '9'; }))
    throw ParseError("expected a natural number, got '" + token + "'", line);
  return static_cast<std::size_t>(std::stoull(token));
}

inline Rational parse_rational_at(const std::string& token, std::size_t line) {
  try {
    return parse_rational(token);
  } catch (const ParseError& e) {
    throw ParseError(e.what(), line);
  }
}

}  // namespace detail

/// DIMACS CNF over uniform bits. Clause c becomes event c forbidding the
/// one tuple that falsifies every literal; a tautological clause becomes an
/// event with no forbidden tuples.
inline ConstraintSystem read_dimacs(std::istream& in) {
  std::string raw;
  std::size_t line = 0;
  long declared_vars = -1;
  long declared_clauses = -1;
  std::vector<std::vector<long>> clauses;
  std::vector<long> current;
  while (std::getline(in, raw)) {
    ++line;
    auto first = raw.find_first_not_of(" \t\r");
    if (first == std::string::npos || raw[first] == 'c' || raw[first] == '%') continue;
    std::istringstream ss(raw);
    if (raw[first] == 'p') {
      std::string p, fmt;
      ss >> p >> fmt >> declared_vars >> declared_clauses;
      if (!ss || fmt != "cnf" || declared_vars < 0 || declared_clauses < 0)
        throw ParseError("malformed problem line", line);
      continue;
    }
    if (declared_vars < 0) throw ParseError("clause before problem line", line);
    std::string tok;
    while (ss >> tok) {
      long lit = 0;
      try {
        std::size_t used = 0;
        lit = std::stol(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw ParseError("bad literal '" + tok + "'", line);
      }
      if (lit == 0) {
        if (current.empty()) throw ParseError("empty clause", line);
        clauses.push_back(std::move(current));
        current.clear();
        continue;
      }
      if (std::labs(lit) > declared_vars) throw ParseError("literal " + tok + " exceeds declared variables", line);
      current.push_back(lit);
    }
  }
  if (!current.empty()) throw ParseError("last clause not terminated by 0", line);
  if (declared_vars < 0) throw ParseError("missing problem line", line);
  if (static_cast<long>(clauses.size()) != declared_clauses)
    throw ParseError("expected " + std::to_string(declared_clauses) + " clauses, found " +
                         std::to_string(clauses.size()), line);

  std::vector<VariableSpec> vars;
  for (long v = 0; v < declared_vars; ++v) vars.push_back(VariableSpec::uniform_bit(static_cast<std::size_t>(v)));
  std::vector<Event> events;
  for (std::size_t c = 0; c < clauses.size(); ++c) {
    std::map<std::size_t, Value> falsify;
    bool tautology = false;
    for (long lit : clauses[c]) {
      auto var = static_cast<std::size_t>(std::labs(lit) - 1);
      Value bad = lit > 0 ? 0 : 1;
      auto [it, inserted] = falsify.emplace(var, bad);
      if (!inserted && it->second != bad) tautology = true;
    }
    Event ev;
    ev.index = c;
    Tuple t;
    for (auto [var, bad] : falsify) {
      ev.vbl.push_back(var);
      t.push_back(bad);
    }
    if (!tautology) ev.forbidden.push_back(std::move(t));
    events.push_back(std::move(ev));
  }
  return ConstraintSystem(std::move(vars), std::move(events));
}

inline SystemFile read_system(std::istream& in) {
  std::map<std::size_t, VariableSpec> vars;
  std::map<std::size_t, Event> events;
  std::map<std::size_t, std::size_t> event_line;
  std::map<std::size_t, Rational> z;
  std::optional<Rational> alpha;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = detail::strip_comment(raw);
    if (s.empty()) continue;
    std::istringstream ss(s);
    std::string kind;
    ss >> kind;
    if (kind == "var") {
      std::string tok;
      ss >> tok;
      std::size_t idx = detail::parse_index(tok, line);
      ss >> tok;
      std::size_t n = detail::parse_index(tok, line);
      if (n == 0) throw ParseError("variable range must be >= 1", line);
      VariableSpec v{idx, {}};
      while (ss >> tok) v.distribution.push_back(detail::parse_rational_at(tok, line));
      if (v.distribution.size() != n)
        throw ParseError("variable " + std::to_string(idx) + " declares " + std::to_string(n) + " values but lists " +
                             std::to_string(v.distribution.size()) + " probabilities", line);
      try {
        v.validate();
      } catch (const StructuralError& e) {
        throw ParseError(e.what(), line);
      }
      if (!vars.emplace(idx, std::move(v)).second) throw ParseError("duplicate variable " + std::to_string(idx), line);
    } else if (kind == "event") {
      std::string tok;
      ss >> tok;
      Event ev;
      ev.index = detail::parse_index(tok, line);
      ss >> tok;
      if (tok != "vbl") throw ParseError("expected 'vbl'", line);
      bool in_forbid = false;
      Tuple current;
      std::string rest;
      std::getline(ss, rest);
      // ';' separates tuples; make it its own token.
      std::string spaced;
      for (char c : rest) {
        if (c == ';') spaced += " ; ";
        else spaced += c;
      }
      std::istringstream rs(spaced);
      while (rs >> tok) {
        if (tok == "forbid") {
          if (in_forbid) throw ParseError("repeated 'forbid'", line);
          in_forbid = true;
        } else if (tok == ";") {
          if (!in_forbid) throw ParseError("';' before 'forbid'", line);
          if (!current.empty()) ev.forbidden.push_back(std::move(current));
          current.clear();
        } else if (!in_forbid) {
          ev.vbl.push_back(detail::parse_index(tok, line));
        } else {
          current.push_back(static_cast<Value>(detail::parse_index(tok, line)));
        }
      }
      if (!current.empty()) ev.forbidden.push_back(std::move(current));
      if (!in_forbid) throw ParseError("missing 'forbid'", line);
      // Sort vbl, permuting tuple entries to match.
      std::vector<std::size_t> order(ev.vbl.size());
      for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ev.vbl[a] < ev.vbl[b]; });
      std::vector<std::size_t> sorted_vbl;
      for (std::size_t k : order) sorted_vbl.push_back(ev.vbl[k]);
      for (auto& t : ev.forbidden) {
        if (t.size() != ev.vbl.size()) throw ParseError("tuple length does not match vbl", line);
        Tuple st;
        for (std::size_t k : order) st.push_back(t[k]);
        t = std::move(st);
      }
      ev.vbl = std::move(sorted_vbl);
      if (std::adjacent_find(ev.vbl.begin(), ev.vbl.end()) != ev.vbl.end())
        throw ParseError("repeated variable in vbl", line);
      std::size_t idx = ev.index;
      event_line[idx] = line;
      if (!events.emplace(idx, std::move(ev)).second) throw ParseError("duplicate event " + std::to_string(idx), line);
    } else if (kind == "z") {
      std::string a, b;
      ss >> a >> b;
      std::size_t idx = detail::parse_index(a, line);
      z[idx] = detail::parse_rational_at(b, line);
    } else if (kind == "alpha") {
      std::string a;
      ss >> a;
      alpha = detail::parse_rational_at(a, line);
    } else {
      throw ParseError("unknown record '" + kind + "'", line);
    }
  }

  std::vector<VariableSpec> var_list;
  for (auto& [idx, v] : vars) {
    if (idx != var_list.size()) throw ParseError("variable indices must be contiguous from 0", 0);
    var_list.push_back(std::move(v));
  }
  std::vector<Event> event_list;
  for (auto& [idx, e] : events) {
    if (idx != event_list.size()) throw ParseError("event indices must be contiguous from 0", event_line[idx]);
    for (std::size_t k = 0; k < e.vbl.size(); ++k) {
      if (e.vbl[k] >= var_list.size())
        throw ParseError("unknown variable " + std::to_string(e.vbl[k]), event_line[idx]);
      for (const auto& t : e.forbidden)
        if (t[k] >= var_list[e.vbl[k]].range()) throw ParseError("tuple value out of range", event_line[idx]);
    }
    event_list.push_back(std::move(e));
  }
  SystemFile out{ConstraintSystem(std::move(var_list), std::move(event_list)), std::nullopt};
  if (!z.empty() || alpha) {
    LLLParams params;
    params.alpha = alpha.value_or(Rational(1));
    for (std::size_t i = 0; i < out.system.num_events(); ++i) {
      auto it = z.find(i);
      if (it == z.end()) throw ParseError("missing z for event " + std::to_string(i), 0);
      params.z.push_back(it->second);
    }
    out.params = std::move(params);
  }
  return out;
}

inline void write_system(std::ostream& out, const ConstraintSystem& system, const LLLParams* params = nullptr) {
  for (const auto& v : system.variables()) {
    out << "var " << v.index << ' ' << v.range();
    for (const auto& p : v.distribution) out << ' ' << to_string(p);
    out << '\n';
  }
  for (const auto& e : system.events()) {
    out << "event " << e.index << " vbl";
    for (auto v : e.vbl) out << ' ' << v;
    out << " forbid";
    for (std::size_t t = 0; t < e.forbidden.size(); ++t) {
      out << (t ? "; " : " ");
      for (std::size_t k = 0; k < e.forbidden[t].size(); ++k) out << (k ? " " : "") << e.forbidden[t][k];
    }
    out << '\n';
  }
  if (params) {
    for (std::size_t i = 0; i < params->z.size(); ++i) out << "z " << i << ' ' << to_string(params->z[i]) << '\n';
    out << "alpha " << to_string(params->alpha) << '\n';
  }
}

/// Chooses the reader by extension: .cnf/.dimacs are DIMACS, anything else
/// is the system format.
inline SystemFile load_system_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path, 0);
  auto ends_with = [&](const std::string& suffix) {
    return path.size() >= suffix.size() && path.compare(path.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  if (ends_with(".cnf") || ends_with(".dimacs")) return {read_dimacs(in), std::nullopt};
  return read_system(in);
}

/// Forbidden-factor lists: one binary string per line, '#' comments.
inline std::vector<std::string> read_forbidden_list(std::istream& in) {
  std::vector<std::string> out;
  std::string raw;
  for (std::size_t line = 1; std::getline(in, raw); ++line) {
    std::string s = detail::strip_comment(raw);
    if (s.empty()) continue;
    if (!std::all_of(s.begin(), s.end(), [](char c) { return c == '0' || c == '1'; }))
      throw ParseError("forbidden string must be binary, got '" + s + "'", line);
    out.push_back(std::move(s));
  }
  return out;
}

inline std::vector<std::string> load_forbidden_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path, 0);
  return read_forbidden_list(in);
}

}  // namespace lll
