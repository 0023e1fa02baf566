#pragma once

// Effectively presented (possibly infinite) event families and the
// streaming form of the resampling algorithm over their prefixes.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "lll/engine.hpp"
#include "lll/error.hpp"
#include "lll/model.hpp"

namespace lll {

/// An enumerable family of events. Event j must be computable from j, and
/// the (finite) list of events using a variable must be computable from
/// the variable.
class InfiniteFamily {
 public:
  virtual ~InfiniteFamily() = default;

  virtual Event event(std::size_t index) const = 0;

  /// Sorted indices of every event whose vbl contains `var`. Must be finite.
  virtual std::vector<std::size_t> events_containing(std::size_t var) const = 0;

  virtual VariableSpec variable(std::size_t var) const { return VariableSpec::uniform_bit(var); }

  /// Local-lemma weight of event j.
  virtual Rational z(std::size_t index) const = 0;

  /// Number of events for finite families.
  virtual std::optional<std::size_t> size() const { return std::nullopt; }

  /// N(A_j) in the whole family, including j.
  std::vector<std::size_t> neighbors(std::size_t index) const {
    std::vector<std::size_t> out;
    for (std::size_t v : event(index).vbl) {
      auto list = events_containing(v);
      out.insert(out.end(), list.begin(), list.end());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  /// 1 + the largest index in the radius-`radius` ball around event j in
  /// the neighbor graph. Generic breadth-first search; families with
  /// geometric structure may override with a closed form. Throws
  /// BudgetExceeded when more than `budget` events are visited.
  virtual std::size_t ball_prefix(std::size_t index, unsigned radius, std::size_t budget) const {
    std::set<std::size_t> seen{index};
    std::vector<std::size_t> frontier{index};
    std::size_t top = index;
    for (unsigned r = 0; r < radius && !frontier.empty(); ++r) {
      std::vector<std::size_t> next;
      for (std::size_t e : frontier) {
        for (std::size_t nb : neighbors(e)) {
          if (!seen.insert(nb).second) continue;
          if (seen.size() > budget)
            throw BudgetExceeded("neighborhood ball around event " + std::to_string(index) + " exceeds budget");
          top = std::max(top, nb);
          next.push_back(nb);
        }
      }
      frontier = std::move(next);
    }
    return top + 1;
  }
};

/// A finite system viewed as a family (events beyond the end do not exist).
class FiniteFamily : public InfiniteFamily {
 public:
  FiniteFamily(ConstraintSystem system, std::vector<Rational> z) : system_(std::move(system)), z_(std::move(z)) {
    if (z_.size() != system_.num_events()) throw StructuralError("z size mismatch");
  }

  Event event(std::size_t index) const override {
    if (index >= system_.num_events()) throw StructuralError("event index beyond finite family");
    return system_.event(index);
  }
  std::vector<std::size_t> events_containing(std::size_t var) const override {
    if (var >= system_.num_variables()) return {};
    return system_.events_of(var);
  }
  VariableSpec variable(std::size_t var) const override {
    if (var < system_.num_variables()) return system_.variable(var);
    return VariableSpec::uniform_bit(var);
  }
  Rational z(std::size_t index) const override { return z_.at(index); }
  std::optional<std::size_t> size() const override { return system_.num_events(); }

  const ConstraintSystem& system() const noexcept { return system_; }

 private:
  ConstraintSystem system_;
  std::vector<Rational> z_;
};

/// The finite system formed by events 0..k-1 of a family, over variables
/// 0..(largest variable they use). For finite families the variable set is
/// the family's own.
inline ConstraintSystem materialize(const InfiniteFamily& family, std::size_t k) {
  if (auto n = family.size(); n && k > *n) throw StructuralError("prefix exceeds finite family size");
  std::vector<Event> events;
  events.reserve(k);
  std::size_t num_vars = 0;
  for (std::size_t j = 0; j < k; ++j) {
    Event e = family.event(j);
    if (e.index != j) throw StructuralError("family returned event with wrong index");
    if (!e.vbl.empty()) num_vars = std::max(num_vars, e.vbl.back() + 1);
    events.push_back(std::move(e));
  }
  if (const auto* finite = dynamic_cast<const FiniteFamily*>(&family))
    num_vars = std::max(num_vars, finite->system().num_variables());
  std::vector<VariableSpec> vars;
  vars.reserve(num_vars);
  for (std::size_t v = 0; v < num_vars; ++v) vars.push_back(family.variable(v));
  return ConstraintSystem(std::move(vars), std::move(events));
}

/// Error raised when a family cannot produce a requested event.
class FamilyError : public Error {
 public:
  using Error::Error;
};

/// Runs the algorithm on events 0..k-1 of a family. Identical to
/// run_finite on the materialized prefix.
inline RunResult run_stream(const InfiniteFamily& family, std::size_t k, Tape& tape, const RunOptions& options = {}) {
  ConstraintSystem prefix;
  try {
    prefix = materialize(family, k);
  } catch (const Error& e) {
    throw FamilyError(std::string("family enumeration failed: ") + e.what());
  }
  return run_finite(prefix, tape, options);
}

/// The alpha-strengthened condition for events 0..k-1, with neighborhoods
/// taken in the whole family (not just the prefix).
inline ConditionReport check_family_prefix(const InfiniteFamily& family, std::size_t k, const Rational& alpha) {
  if (alpha <= 0 || alpha >= 1) throw StructuralError("alpha must lie in (0,1) for an infinite family");
  ConditionReport report;
  report.alpha = alpha;
  std::map<std::size_t, VariableSpec> var_cache;
  auto var_spec = [&](std::size_t v) -> const VariableSpec& {
    auto it = var_cache.find(v);
    if (it == var_cache.end()) it = var_cache.emplace(v, family.variable(v)).first;
    return it->second;
  };
  for (std::size_t i = 0; i < k; ++i) {
    Event e = family.event(i);
    std::vector<VariableSpec> dense;
    // event_probability wants a dense span; build one over vbl only.
    Event local = e;
    for (std::size_t pos = 0; pos < e.vbl.size(); ++pos) {
      VariableSpec spec = var_spec(e.vbl[pos]);
      spec.index = pos;
      dense.push_back(std::move(spec));
      local.vbl[pos] = pos;
    }
    ConditionRow row;
    row.event = i;
    row.lhs = event_probability(local, dense);
    Rational zi = family.z(i);
    if (zi <= 0 || zi >= 1) throw StructuralError("z entries must lie in (0,1)");
    row.rhs = alpha * zi;
    for (std::size_t j : family.neighbors(i))
      if (j != i) row.rhs *= 1 - family.z(j);
    row.holds = row.lhs <= row.rhs;
    report.all_hold = report.all_hold && row.holds;
    report.avoid_bound *= 1 - zi;
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace lll
