#pragma once

// Variables, events, constraint systems and the local-lemma side conditions.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lll/error.hpp"
#include "lll/rational.hpp"
#include "lll/sampler.hpp"

namespace lll {

using Value = std::uint32_t;
using Tuple = std::vector<Value>;

struct VariableSpec {
  std::size_t index = 0;
  std::vector<Rational> distribution;  // one entry per value; sums to 1

  std::size_t range() const noexcept { return distribution.size(); }

  static VariableSpec uniform_bit(std::size_t index) {
    return {index, {Rational(1, 2), Rational(1, 2)}};
  }

  static VariableSpec uniform(std::size_t index, std::size_t n) {
    VariableSpec v{index, std::vector<Rational>(n, Rational(1, static_cast<unsigned long>(n)))};
    for (auto& p : v.distribution) p.canonicalize();
    return v;
  }

  void validate() const {
    if (distribution.empty()) throw StructuralError("variable " + std::to_string(index) + " has empty range");
    Rational total = 0;
    for (const auto& p : distribution) {
      if (p < 0) throw StructuralError("variable " + std::to_string(index) + " has a negative probability");
      total += p;
    }
    if (total != 1)
      throw StructuralError("distribution of variable " + std::to_string(index) + " sums to " + to_string(total));
  }
};

/// An event given extensionally: it happens iff the values of `vbl` form
/// one of the `forbidden` tuples.
struct Event {
  std::size_t index = 0;
  std::vector<std::size_t> vbl;  // strictly increasing
  std::vector<Tuple> forbidden;  // each of length vbl.size()

  /// A CNF clause over bits: the single tuple that falsifies every literal.
  static Event clause(std::size_t index, std::vector<std::size_t> vbl, Tuple falsifying) {
    return {index, std::move(vbl), {std::move(falsifying)}};
  }

  bool operator==(const Event&) const = default;
};

/// Pr[event] under the product measure; exact.
inline Rational event_probability(const Event& event, std::span<const VariableSpec> variables) {
  Rational total = 0;
  for (const Tuple& t : event.forbidden) {
    if (t.size() != event.vbl.size())
      throw StructuralError("event " + std::to_string(event.index) + ": tuple length mismatch");
    Rational p = 1;
    for (std::size_t pos = 0; pos < t.size(); ++pos) {
      std::size_t var = event.vbl[pos];
      if (var >= variables.size()) throw StructuralError("event " + std::to_string(event.index) + ": unknown variable");
      if (t[pos] >= variables[var].range())
        throw StructuralError("event " + std::to_string(event.index) + ": tuple value out of range");
      p *= variables[var].distribution[t[pos]];
    }
    total += p;
  }
  return total;
}

/// A finite, immutable constraint system. Variable and event indices equal
/// their positions.
class ConstraintSystem {
 public:
  ConstraintSystem() = default;

  ConstraintSystem(std::vector<VariableSpec> variables, std::vector<Event> events)
      : variables_(std::move(variables)), events_(std::move(events)) {
    for (std::size_t i = 0; i < variables_.size(); ++i) {
      if (variables_[i].index != i) throw StructuralError("variable indices must be 0..n-1 in order");
      variables_[i].validate();
    }
    var_to_events_.assign(variables_.size(), {});
    compiled_.reserve(events_.size());
    for (std::size_t e = 0; e < events_.size(); ++e) {
      Event& ev = events_[e];
      if (ev.index != e) throw StructuralError("event indices must be 0..m-1 in order");
      if (ev.vbl.empty()) throw StructuralError("event " + std::to_string(e) + " has no variables");
      for (std::size_t k = 0; k < ev.vbl.size(); ++k) {
        if (ev.vbl[k] >= variables_.size())
          throw StructuralError("event " + std::to_string(e) + " uses unknown variable " + std::to_string(ev.vbl[k]));
        if (k > 0 && ev.vbl[k] <= ev.vbl[k - 1])
          throw StructuralError("event " + std::to_string(e) + ": vbl must be strictly increasing");
        var_to_events_[ev.vbl[k]].push_back(e);
      }
      compiled_.push_back(compile(ev));
    }
    build_samplers();
  }

  std::size_t num_variables() const noexcept { return variables_.size(); }
  std::size_t num_events() const noexcept { return events_.size(); }
  const std::vector<VariableSpec>& variables() const noexcept { return variables_; }
  const std::vector<Event>& events() const noexcept { return events_; }
  const VariableSpec& variable(std::size_t i) const { return variables_.at(i); }
  const Event& event(std::size_t i) const { return events_.at(i); }
  const std::vector<std::size_t>& events_of(std::size_t var) const { return var_to_events_.at(var); }
  const Sampler& sampler(std::size_t var) const { return samplers_[sampler_of_var_[var]]; }

  Rational probability(std::size_t e) const { return event_probability(event(e), variables_); }

  /// Whether the event holds under a full assignment.
  bool holds(std::size_t e, std::span<const Value> assignment) const {
    const Compiled& c = compiled_[e];
    const Event& ev = events_[e];
    std::uint64_t key = 0;
    for (std::size_t k = 0; k < ev.vbl.size(); ++k) key += assignment[ev.vbl[k]] * c.strides[k];
    if (c.keys.size() <= 4) return std::find(c.keys.begin(), c.keys.end(), key) != c.keys.end();
    return std::binary_search(c.keys.begin(), c.keys.end(), key);
  }

  /// N(A_i), including i itself, sorted.
  std::vector<std::size_t> neighbors(std::size_t i) const {
    if (i >= events_.size()) throw StructuralError("invalid event index " + std::to_string(i));
    std::vector<std::size_t> out;
    for (std::size_t v : events_[i].vbl) {
      const auto& list = var_to_events_[v];
      out.insert(out.end(), list.begin(), list.end());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  /// Events share a variable (every event is its own neighbor).
  bool are_neighbors(std::size_t a, std::size_t b) const {
    if (a == b) return true;
    const auto& x = events_[a].vbl;
    const auto& y = events_[b].vbl;
    std::size_t i = 0, j = 0;
    while (i < x.size() && j < y.size()) {
      if (x[i] == y[j]) return true;
      if (x[i] < y[j]) ++i; else ++j;
    }
    return false;
  }

 private:
  struct Compiled {
    std::vector<std::uint64_t> strides;
    std::vector<std::uint64_t> keys;  // sorted, unique
  };

  Compiled compile(const Event& ev) const {
    Compiled c;
    std::uint64_t stride = 1;
    for (std::size_t v : ev.vbl) {
      c.strides.push_back(stride);
      std::uint64_t n = variables_[v].range();
      if (stride > std::numeric_limits<std::uint64_t>::max() / n)
        throw StructuralError("event " + std::to_string(ev.index) + ": tuple space too large");
      stride *= n;
    }
    for (const Tuple& t : ev.forbidden) {
      if (t.size() != ev.vbl.size())
        throw StructuralError("event " + std::to_string(ev.index) + ": tuple length mismatch");
      std::uint64_t key = 0;
      for (std::size_t k = 0; k < t.size(); ++k) {
        if (t[k] >= variables_[ev.vbl[k]].range())
          throw StructuralError("event " + std::to_string(ev.index) + ": tuple value out of range");
        key += t[k] * c.strides[k];
      }
      c.keys.push_back(key);
    }
    std::sort(c.keys.begin(), c.keys.end());
    if (std::adjacent_find(c.keys.begin(), c.keys.end()) != c.keys.end())
      throw StructuralError("event " + std::to_string(ev.index) + ": duplicate forbidden tuple");
    return c;
  }

  void build_samplers() {
    sampler_of_var_.resize(variables_.size());
    std::vector<const std::vector<Rational>*> seen;
    for (std::size_t i = 0; i < variables_.size(); ++i) {
      const auto& dist = variables_[i].distribution;
      std::size_t found = seen.size();
      // Systems typically share one or two distributions; linear search is fine.
      for (std::size_t s = 0; s < seen.size(); ++s)
        if (*seen[s] == dist) { found = s; break; }
      if (found == seen.size()) {
        seen.push_back(&dist);
        samplers_.emplace_back(dist);
      }
      sampler_of_var_[i] = found;
    }
  }

  std::vector<VariableSpec> variables_;
  std::vector<Event> events_;
  std::vector<std::vector<std::size_t>> var_to_events_;
  std::vector<Compiled> compiled_;
  std::vector<Sampler> samplers_;
  std::vector<std::size_t> sampler_of_var_;
};

/// z-vector and the strengthening factor alpha (alpha = 1: plain condition).
struct LLLParams {
  std::vector<Rational> z;
  Rational alpha = 1;

  void validate(std::size_t num_events) const {
    if (z.size() != num_events)
      throw StructuralError("z has " + std::to_string(z.size()) + " entries, expected " + std::to_string(num_events));
    for (const auto& zi : z)
      if (zi <= 0 || zi >= 1) throw StructuralError("z entries must lie in (0,1)");
    if (alpha <= 0 || alpha > 1) throw StructuralError("alpha must lie in (0,1]");
  }
};

struct ConditionRow {
  std::size_t event = 0;
  Rational lhs;  // Pr[A_i]
  Rational rhs;  // alpha * z_i * prod_{j in N(i), j != i} (1 - z_j)
  bool holds = false;
};

struct ConditionReport {
  std::vector<ConditionRow> rows;
  Rational alpha = 1;
  Rational avoid_bound = 1;  // prod_i (1 - z_i)
  bool all_hold = true;
};

namespace detail {

inline ConditionReport check_condition(const ConstraintSystem& system, const LLLParams& params) {
  params.validate(system.num_events());
  ConditionReport report;
  report.alpha = params.alpha;
  for (std::size_t i = 0; i < system.num_events(); ++i) {
    ConditionRow row;
    row.event = i;
    row.lhs = system.probability(i);
    row.rhs = params.alpha * params.z[i];
    for (std::size_t j : system.neighbors(i))
      if (j != i) row.rhs *= 1 - params.z[j];
    row.holds = row.lhs <= row.rhs;
    report.all_hold = report.all_hold && row.holds;
    report.avoid_bound *= 1 - params.z[i];
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace detail

/// Pr[A_i] <= z_i * prod_{j != i, A_j in N(A_i)} (1 - z_j) for every event.
inline ConditionReport check_finite_lll(const ConstraintSystem& system, std::vector<Rational> z) {
  return detail::check_condition(system, LLLParams{std::move(z), Rational(1)});
}

enum class ConditionMode { finite, infinite_prefix };

/// The alpha-strengthened condition. In infinite_prefix mode alpha must be
/// strictly below 1, since the tail argument depends on it.
inline ConditionReport check_computable_lll(const ConstraintSystem& system, const LLLParams& params,
                                            ConditionMode mode = ConditionMode::finite) {
  if (mode == ConditionMode::infinite_prefix && params.alpha >= 1)
    throw StructuralError("alpha must be < 1 for an infinite family");
  return detail::check_condition(system, params);
}

}  // namespace lll
