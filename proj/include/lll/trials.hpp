#pragma once

// Seeded repeated runs, split across threads. Trial t always uses seed
// base+t, and results are reduced in trial order, so the statistics do not
// depend on the worker count.

#include <cmath>
#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

#include "lll/engine.hpp"
#include "lll/rational.hpp"

namespace lll {

struct TrialStats {
  std::vector<std::size_t> resamples;  // per trial
  std::size_t satisfied = 0;
  std::size_t verified = 0;  // final assignment checked against every event

  Rational mean() const {
    BigInt sum = 0;
    for (std::size_t r : resamples) sum += static_cast<unsigned long>(r);
    return ratio(sum, BigInt(static_cast<unsigned long>(resamples.size())));
  }

  /// Sample standard deviation of the mean.
  double std_error() const {
    const double n = static_cast<double>(resamples.size());
    if (n < 2) return 0;
    double m = to_double(mean()), ss = 0;
    for (std::size_t r : resamples) ss += (static_cast<double>(r) - m) * (static_cast<double>(r) - m);
    return std::sqrt(ss / (n - 1) / n);
  }
};

inline bool satisfies_all(const ConstraintSystem& system, std::span<const Value> assignment) {
  for (std::size_t e = 0; e < system.num_events(); ++e)
    if (system.holds(e, assignment)) return false;
  return true;
}

inline TrialStats run_trials(const ConstraintSystem& system, std::size_t trials, std::uint64_t seed,
                             unsigned workers = 1, std::size_t max_steps = std::numeric_limits<std::size_t>::max()) {
  if (workers == 0) workers = 1;
  std::vector<std::size_t> resamples(trials);
  std::vector<char> sat(trials), ok(trials);
  std::vector<std::exception_ptr> errors(workers);
  auto work = [&](unsigned w) {
    try {
      RunOptions options;
      options.record_log = false;
      options.max_steps = max_steps;
      for (std::size_t t = w; t < trials; t += workers) {
        Tape tape = Tape::seeded(seed + t);
        RunResult r = run_finite(system, tape, options);
        resamples[t] = r.resample_count;
        sat[t] = r.status == RunStatus::satisfied;
        ok[t] = satisfies_all(system, r.assignment);
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work, w);
  work(0);
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  TrialStats stats;
  stats.resamples = std::move(resamples);
  for (std::size_t t = 0; t < trials; ++t) {
    stats.satisfied += sat[t] != 0;
    stats.verified += ok[t] != 0;
  }
  return stats;
}

}  // namespace lll
