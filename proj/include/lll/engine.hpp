#pragma once

// The resampling algorithm: draw every variable once, then while some event
// holds, take the one with the smallest index and redraw its variables.

#include <bit>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lll/error.hpp"
#include "lll/model.hpp"
#include "lll/tape.hpp"

namespace lll {

struct TapeDraw {
  std::size_t var = 0;
  std::uint64_t position = 0;  // j in x_var^j
  Value value = 0;

  bool operator==(const TapeDraw&) const = default;
};

struct ResampleStep {
  std::size_t step = 0;  // 1-based
  std::size_t event = 0;
  std::vector<TapeDraw> draws;  // vbl(event) in increasing order

  bool operator==(const ResampleStep&) const = default;
};

struct ResampleLog {
  std::vector<TapeDraw> initial;
  std::vector<ResampleStep> steps;

  bool operator==(const ResampleLog&) const = default;
};

enum class RunStatus { satisfied, budget_exceeded };

inline const char* to_string(RunStatus s) { return s == RunStatus::satisfied ? "satisfied" : "budget_exceeded"; }

struct RunResult {
  RunStatus status = RunStatus::budget_exceeded;
  std::vector<Value> assignment;
  ResampleLog log;
  std::size_t resample_count = 0;
};

/// Explicit tape ran dry mid-run. `partial` holds everything up to that
/// point; when the tape failed during a resampling, the step that was being
/// resampled is the last entry of partial.log.steps (with its draws cut
/// short).
class RunInterrupted : public TapeExhausted {
 public:
  explicit RunInterrupted(RunResult partial)
      : TapeExhausted("explicit tape exhausted during run"), partial(std::move(partial)) {}
  RunResult partial;
};

struct RunOptions {
  std::size_t max_steps = std::numeric_limits<std::size_t>::max();
  bool record_log = true;
};

namespace detail {

/// Set of event indices with O(n/4096) find-min.
class MinIndexSet {
 public:
  explicit MinIndexSet(std::size_t n) : words_((n + 63) / 64, 0), summary_((words_.size() + 63) / 64, 0) {}

  void insert(std::size_t i) {
    words_[i >> 6] |= std::uint64_t{1} << (i & 63);
    summary_[i >> 12] |= std::uint64_t{1} << ((i >> 6) & 63);
  }

  void erase(std::size_t i) {
    std::uint64_t& w = words_[i >> 6];
    w &= ~(std::uint64_t{1} << (i & 63));
    if (w == 0) summary_[i >> 12] &= ~(std::uint64_t{1} << ((i >> 6) & 63));
  }

  std::optional<std::size_t> min() const {
    for (std::size_t s = 0; s < summary_.size(); ++s) {
      if (summary_[s] == 0) continue;
      std::size_t w = (s << 6) + static_cast<std::size_t>(std::countr_zero(summary_[s]));
      return (w << 6) + static_cast<std::size_t>(std::countr_zero(words_[w]));
    }
    return std::nullopt;
  }

 private:
  std::vector<std::uint64_t> words_;
  std::vector<std::uint64_t> summary_;
};

}  // namespace detail

/// Runs the algorithm on a finite system.
///
/// Initial values come from x_i^0 in variable order; each step selects the
/// minimal-index true event and redraws its variables in increasing index
/// order. Only events touching a redrawn variable are rechecked.
inline RunResult run_finite(const ConstraintSystem& system, Tape& tape, const RunOptions& options = {}) {
  RunResult result;
  const std::size_t n = system.num_variables();
  result.assignment.resize(n);
  if (options.record_log) result.log.initial.reserve(n);

  try {
    for (std::size_t v = 0; v < n; ++v) {
      std::uint64_t pos = tape.consumed(v);
      Value value = tape.fresh_value(v, system.sampler(v));
      result.assignment[v] = value;
      if (options.record_log) result.log.initial.push_back({v, pos, value});
    }
  } catch (const TapeExhausted&) {
    throw RunInterrupted(std::move(result));
  }

  detail::MinIndexSet true_events(system.num_events());
  for (std::size_t e = 0; e < system.num_events(); ++e)
    if (system.holds(e, result.assignment)) true_events.insert(e);

  std::vector<std::size_t> stamp(system.num_events(), 0);
  for (;;) {
    auto selected = true_events.min();
    if (!selected) {
      result.status = RunStatus::satisfied;
      return result;
    }
    if (result.resample_count >= options.max_steps) {
      result.status = RunStatus::budget_exceeded;
      return result;
    }
    const std::size_t e = *selected;
    const std::size_t step = ++result.resample_count;
    if (options.record_log) result.log.steps.push_back({step, e, {}});
    const Event& ev = system.event(e);
    try {
      for (std::size_t v : ev.vbl) {
        std::uint64_t pos = tape.consumed(v);
        Value value = tape.fresh_value(v, system.sampler(v));
        result.assignment[v] = value;
        if (options.record_log) result.log.steps.back().draws.push_back({v, pos, value});
      }
    } catch (const TapeExhausted&) {
      result.status = RunStatus::budget_exceeded;
      throw RunInterrupted(std::move(result));
    }
    for (std::size_t v : ev.vbl) {
      for (std::size_t other : system.events_of(v)) {
        if (stamp[other] == step) continue;
        stamp[other] = step;
        if (system.holds(other, result.assignment)) true_events.insert(other);
        else true_events.erase(other);
      }
    }
  }
}

/// Reference implementation that rescans every event each step. Used by
/// differential tests against run_finite.
inline RunResult run_finite_rescan(const ConstraintSystem& system, Tape& tape, const RunOptions& options = {}) {
  RunResult result;
  result.assignment.resize(system.num_variables());
  for (std::size_t v = 0; v < system.num_variables(); ++v) {
    std::uint64_t pos = tape.consumed(v);
    result.assignment[v] = tape.fresh_value(v, system.sampler(v));
    if (options.record_log) result.log.initial.push_back({v, pos, result.assignment[v]});
  }
  for (;;) {
    std::optional<std::size_t> selected;
    for (std::size_t e = 0; e < system.num_events() && !selected; ++e)
      if (system.holds(e, result.assignment)) selected = e;
    if (!selected) {
      result.status = RunStatus::satisfied;
      return result;
    }
    if (result.resample_count >= options.max_steps) {
      result.status = RunStatus::budget_exceeded;
      return result;
    }
    const std::size_t step = ++result.resample_count;
    if (options.record_log) result.log.steps.push_back({step, *selected, {}});
    for (std::size_t v : system.event(*selected).vbl) {
      std::uint64_t pos = tape.consumed(v);
      result.assignment[v] = tape.fresh_value(v, system.sampler(v));
      if (options.record_log) result.log.steps.back().draws.push_back({v, pos, result.assignment[v]});
    }
  }
}

/// Replays a log against a system, checking that every recorded step was
/// legal: the event held, every smaller-index event was false, and the
/// draws cover exactly vbl(event) at the next unused tape positions.
/// Calls `on_state(step, assignment)` for step 0 (after initialization)
/// and after every step. Throws StructuralError on any mismatch.
template <class OnState>
void replay_log(const ResampleLog& log, const ConstraintSystem& system, OnState&& on_state) {
  const std::size_t n = system.num_variables();
  if (log.initial.size() != n) throw StructuralError("log does not initialize every variable");
  std::vector<Value> assignment(n);
  std::vector<std::uint64_t> next_pos(n, 0);
  for (std::size_t v = 0; v < n; ++v) {
    const TapeDraw& d = log.initial[v];
    if (d.var != v || d.position != 0 || d.value >= system.variable(v).range())
      throw StructuralError("bad initial draw for variable " + std::to_string(v));
    assignment[v] = d.value;
    next_pos[v] = 1;
  }
  on_state(std::size_t{0}, std::span<const Value>(assignment));
  for (std::size_t s = 0; s < log.steps.size(); ++s) {
    const ResampleStep& step = log.steps[s];
    if (step.step != s + 1) throw StructuralError("step numbers must be consecutive from 1");
    if (step.event >= system.num_events()) throw StructuralError("step " + std::to_string(step.step) + ": bad event");
    if (!system.holds(step.event, assignment))
      throw StructuralError("step " + std::to_string(step.step) + ": resampled event was false");
    for (std::size_t e = 0; e < step.event; ++e)
      if (system.holds(e, assignment))
        throw StructuralError("step " + std::to_string(step.step) + ": a smaller-index event was true");
    const auto& vbl = system.event(step.event).vbl;
    if (step.draws.size() != vbl.size())
      throw StructuralError("step " + std::to_string(step.step) + ": draws do not cover vbl");
    for (std::size_t k = 0; k < vbl.size(); ++k) {
      const TapeDraw& d = step.draws[k];
      if (d.var != vbl[k] || d.position != next_pos[d.var] || d.value >= system.variable(d.var).range())
        throw StructuralError("step " + std::to_string(step.step) + ": draw does not match the tape order");
      assignment[d.var] = d.value;
      ++next_pos[d.var];
    }
    on_state(step.step, std::span<const Value>(assignment));
  }
}

/// T_k: the first step after which events 0..k-1 are all false, by replay.
/// nullopt if the logged run never reaches such a state.
inline std::optional<std::size_t> first_k_stable_time(const ResampleLog& log, const ConstraintSystem& system,
                                                      std::size_t k) {
  if (k > system.num_events()) throw StructuralError("k exceeds the number of events");
  std::optional<std::size_t> found;
  replay_log(log, system, [&](std::size_t step, std::span<const Value> assignment) {
    if (found) return;
    for (std::size_t e = 0; e < k; ++e)
      if (system.holds(e, assignment)) return;
    found = step;
  });
  return found;
}

}  // namespace lll
