#pragma once

// Stability horizons, output-distribution approximation and extraction of
// computable elements from lower-semicomputable tree measures.

#include <algorithm>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lll/engine.hpp"
#include "lll/error.hpp"
#include "lll/family.hpp"
#include "lll/galton_watson.hpp"
#include "lll/model.hpp"
#include "lll/rational.hpp"
#include "lll/tape.hpp"

namespace lll {

/// q_n(u): lower bounds, non-decreasing in n, for the measure q(u) of all
/// sequences extending the prefix u.
class QOracle {
 public:
  virtual ~QOracle() = default;

  /// Number of values cell `cell` can take.
  virtual std::size_t arity(std::size_t cell) const = 0;

  virtual Rational lower(std::span<const Value> prefix, std::size_t precision) = 0;

  /// Precision beyond which lower() no longer changes, when known.
  virtual std::optional<std::size_t> max_precision() const { return std::nullopt; }
};

/// Finitely many atoms, each an eventually periodic sequence with a mass.
/// Atom a is revealed from precision a+1 on, so bounds grow in steps.
class TableOracle : public QOracle {
 public:
  struct Atom {
    Tuple head;
    Tuple cycle;  // repeated forever after head; must be non-empty
    Rational mass;

    Value at(std::size_t i) const { return i < head.size() ? head[i] : cycle[(i - head.size()) % cycle.size()]; }
  };

  TableOracle(std::size_t arity, std::vector<Atom> atoms) : arity_(arity), atoms_(std::move(atoms)) {
    if (arity_ == 0) throw StructuralError("arity must be positive");
    Rational total = 0;
    for (const auto& a : atoms_) {
      if (a.cycle.empty()) throw StructuralError("atom cycle must be non-empty");
      if (a.mass < 0) throw StructuralError("atom mass must be non-negative");
      for (Value v : a.head) if (v >= arity_) throw StructuralError("atom value out of range");
      for (Value v : a.cycle) if (v >= arity_) throw StructuralError("atom value out of range");
      total += a.mass;
    }
    if (total > 1) throw StructuralError("atom masses exceed 1");
  }

  static TableOracle point_mass(std::size_t arity, Tuple head, Tuple cycle) {
    return TableOracle(arity, {{std::move(head), std::move(cycle), Rational(1)}});
  }

  std::size_t arity(std::size_t) const override { return arity_; }

  Rational lower(std::span<const Value> prefix, std::size_t precision) override {
    Rational q = 0;
    for (std::size_t a = 0; a < std::min(precision, atoms_.size()); ++a) {
      bool match = true;
      for (std::size_t i = 0; i < prefix.size() && match; ++i) match = atoms_[a].at(i) == prefix[i];
      if (match) q += atoms_[a].mass;
    }
    return q;
  }

  std::optional<std::size_t> max_precision() const override { return atoms_.size(); }

  /// Exact q(u).
  Rational exact(std::span<const Value> prefix) { return lower(prefix, atoms_.size()); }

 private:
  std::size_t arity_;
  std::vector<Atom> atoms_;
};

/// Law of the final assignment of the resampling algorithm on a finite
/// system. Precision n = explicit-tape bit budget; the lower bound is the
/// mass of finished branches whose output starts with u.
class MtOutputOracle : public QOracle {
 public:
  explicit MtOutputOracle(ConstraintSystem system, unsigned guard = kDefaultBitGuard)
      : system_(std::move(system)), guard_(guard), frontier_{BitString{}} {}

  std::size_t arity(std::size_t cell) const override {
    if (cell >= system_.num_variables()) throw StructuralError("cell beyond the variable list");
    return system_.variable(cell).range();
  }

  Rational lower(std::span<const Value> prefix, std::size_t precision) override {
    if (prefix.size() > system_.num_variables()) throw StructuralError("prefix longer than the variable list");
    advance(static_cast<unsigned>(std::min<std::size_t>(precision, guard_)));
    DyadicSum sum;
    for (const auto& [out, mass] : outputs_)
      if (std::equal(prefix.begin(), prefix.end(), out.begin())) sum.add(mass);
    return sum.value();
  }

  std::optional<std::size_t> max_precision() const override { return guard_; }

  /// Raises the bit budget to `bits` (at most the guard).
  void advance(unsigned bits) {
    if (bits > guard_) throw BudgetExceeded("bit budget " + std::to_string(bits) + " exceeds guard " + std::to_string(guard_));
    if (started_ && bits <= budget_) return;
    started_ = true;
    std::vector<BitString> next;
    DyadicSum unresolved;
    for (BitString& start : frontier_) {
      explore_tapes<std::vector<Value>>(
          bits,
          [&](Tape& tape, std::vector<Value>& out) {
            try {
              RunOptions opts;
              opts.record_log = false;
              out = run_finite(system_, tape, opts).assignment;
              return true;
            } catch (const TapeExhausted&) {
              return false;
            }
          },
          [&](const Branch<std::vector<Value>>& b) {
            if (b.resolved) outputs_[b.result].add(static_cast<unsigned>(b.prefix.size()));
            else {
              unresolved.add(static_cast<unsigned>(b.prefix.size()));
              next.push_back(b.prefix);
            }
          },
          std::move(start));
    }
    frontier_ = std::move(next);
    unresolved_ = unresolved.value();
    budget_ = std::max(budget_, bits);
  }

  unsigned budget() const noexcept { return budget_; }
  const Rational& unresolved_mass() const noexcept { return unresolved_; }
  const ConstraintSystem& system() const noexcept { return system_; }

 private:
  ConstraintSystem system_;
  unsigned guard_;
  unsigned budget_ = 0;
  bool started_ = false;
  std::vector<BitString> frontier_;
  std::map<std::vector<Value>, DyadicSum> outputs_;
  Rational unresolved_ = 1;
};

struct StabilityTerm {
  std::size_t event = 0;
  unsigned m = 0;       // chain length
  std::size_t k = 0;    // events 0..k-1 cover the radius-m ball
  BigInt t;             // Markov step bound
  Rational tail;        // z/(1-z) * alpha^m
  Rational markov;      // S_k / t
};

struct StabilityCertificate {
  std::size_t cell = 0;
  Rational delta;
  BigInt N;
  unsigned m = 0;     // largest chain length used
  std::size_t k = 0;  // largest covering prefix used
  std::vector<StabilityTerm> terms;

  /// Sum of both error terms over every event of the cell is at most delta.
  bool verify() const {
    Rational total = 0;
    BigInt top = 0;
    for (const auto& term : terms) {
      total += term.tail + term.markov;
      if (term.t > top) top = term.t;
    }
    return total <= delta && top == N;
  }

  std::string record() const {
    return "cell=" + std::to_string(cell) + " delta=" + to_string(delta) + " N=" + N.get_str() +
           " m=" + std::to_string(m) + " k=" + std::to_string(k);
  }
};

class HorizonCache;
StabilityCertificate stability_horizon(const Rational& alpha, std::size_t cell, const Rational& delta,
                                       HorizonCache& cache, std::size_t ball_budget);

/// S_k = sum_{j < k} z_j / (1 - z_j) for a family, extended on demand.
/// Also remembers per-event terms, which many cells share.
class HorizonCache {
 public:
  explicit HorizonCache(const InfiniteFamily& family) : family_(&family) {}

  const Rational& sum(std::size_t k) {
    while (sums_.size() <= k) {
      std::size_t j = sums_.size() - 1;
      Rational zj = family_->z(j);
      sums_.push_back(sums_.back() + zj / (1 - zj));
    }
    return sums_[k];
  }

  const InfiniteFamily& family() const noexcept { return *family_; }

 private:
  friend StabilityCertificate stability_horizon(const Rational&, std::size_t, const Rational&, HorizonCache&,
                                                std::size_t);
  const InfiniteFamily* family_;
  std::vector<Rational> sums_{Rational(0)};
  Rational memo_alpha_, memo_delta_;
  std::map<std::pair<std::size_t, std::size_t>, StabilityTerm> memo_;  // (event, #users) -> term
};

/// N(i, delta): after step N the value of cell i changes with probability
/// at most delta. The budget is split evenly between the events using the
/// cell and, per event, between the deep-tree tail and the Markov term.
inline StabilityCertificate stability_horizon(const Rational& alpha, std::size_t cell, const Rational& delta,
                                              HorizonCache& cache, std::size_t ball_budget = 1000000) {
  if (alpha <= 0 || alpha >= 1) throw StructuralError("alpha must lie in (0,1)");
  if (delta <= 0) throw StructuralError("delta must be positive");
  const InfiniteFamily& family = cache.family();
  StabilityCertificate cert;
  cert.cell = cell;
  cert.delta = delta;
  cert.N = 0;
  if (delta >= 1) return cert;
  std::vector<std::size_t> users = family.events_containing(cell);
  if (users.empty()) return cert;
  if (cache.memo_alpha_ != alpha || cache.memo_delta_ != delta) {
    cache.memo_.clear();
    cache.memo_alpha_ = alpha;
    cache.memo_delta_ = delta;
  }
  const Rational share = delta / (2 * make_rational(static_cast<long>(users.size())));
  for (std::size_t j : users) {
    auto key = std::make_pair(j, users.size());
    auto it = cache.memo_.find(key);
    if (it == cache.memo_.end()) {
      StabilityTerm term;
      term.event = j;
      Rational zj = family.z(j);
      term.tail = zj / (1 - zj);
      while (term.tail > share) {
        term.tail *= alpha;
        ++term.m;
      }
      term.k = family.ball_prefix(j, term.m, ball_budget);
      const Rational& s = cache.sum(term.k);
      term.t = ceil(s / share);
      term.markov = term.t == 0 ? Rational(0) : s / Rational(term.t);
      it = cache.memo_.emplace(key, std::move(term)).first;
    }
    const StabilityTerm& term = it->second;
    if (term.t > cert.N) cert.N = term.t;
    cert.m = std::max(cert.m, term.m);
    cert.k = std::max(cert.k, term.k);
    cert.terms.push_back(term);
  }
  return cert;
}

inline StabilityCertificate stability_horizon(const InfiniteFamily& family, const Rational& alpha, std::size_t cell,
                                              const Rational& delta, std::size_t ball_budget = 1000000) {
  HorizonCache cache(family);
  return stability_horizon(alpha, cell, delta, cache, ball_budget);
}

/// Did the value of `cell` differ from its value after step N at any later
/// point of the logged run?
inline bool cell_changed_after(const ResampleLog& log, std::size_t cell, std::size_t N) {
  if (cell >= log.initial.size()) throw StructuralError("cell not in the log");
  Value v = log.initial[cell].value;
  std::size_t s = 0;
  for (; s < log.steps.size() && s < N; ++s)
    for (const auto& d : log.steps[s].draws)
      if (d.var == cell) v = d.value;
  for (; s < log.steps.size(); ++s)
    for (const auto& d : log.steps[s].draws)
      if (d.var == cell && d.value != v) return true;
  return false;
}

struct OutputInterval {
  Rational lo, hi;
  unsigned bits = 0;  // bit budget reached
};

/// Interval of width <= delta around Pr[final assignment starts with u],
/// by exhaustive enumeration of explicit tapes.
inline OutputInterval approx_output_distribution(MtOutputOracle& oracle, std::span<const Value> u, const Rational& delta,
                                                 unsigned guard = kDefaultBitGuard) {
  if (u.size() > oracle.system().num_variables()) throw StructuralError("prefix longer than the variable list");
  if (delta < 0) throw StructuralError("delta must be non-negative");
  unsigned bits = oracle.budget();
  oracle.advance(bits);
  while (oracle.unresolved_mass() > delta) {
    if (bits >= guard)
      throw BudgetExceeded("unresolved mass " + to_string(oracle.unresolved_mass()) + " above delta at guard " +
                           std::to_string(guard));
    oracle.advance(++bits);
  }
  OutputInterval out;
  out.lo = oracle.lower(u, oracle.budget());
  out.hi = out.lo + oracle.unresolved_mass();
  out.bits = oracle.budget();
  return out;
}

inline OutputInterval approx_output_distribution(const ConstraintSystem& system, std::span<const Value> u,
                                                 const Rational& delta, unsigned guard = kDefaultBitGuard) {
  MtOutputOracle oracle(system, guard);
  return approx_output_distribution(oracle, u, delta, guard);
}

struct Extraction {
  std::vector<Value> values;        // emitted cells, after the starting prefix
  std::vector<Rational> lower;      // lower bound on q(prefix) when each cell was emitted
  std::vector<std::size_t> rounds;  // precision at which each cell was decided
  std::size_t queries = 0;
};

/// Follows the unique branch of measure > r through w. Requires q(w) < 2r;
/// then at most one son can have measure > r. Cells are found by raising
/// precision round by round, sons in value order.
inline Extraction extract_from_positive_probability(QOracle& q, const Rational& r, std::vector<Value> w,
                                                    std::size_t cells, std::size_t query_budget = 1000000) {
  if (r <= 0) throw StructuralError("r must be positive");
  Extraction out;
  std::vector<Value> prefix = std::move(w);
  const auto cap = q.max_precision();
  for (std::size_t c = 0; c < cells; ++c) {
    const std::size_t arity = q.arity(prefix.size());
    std::optional<Value> found;
    for (std::size_t n = 1; !found; ++n) {
      if (cap && n > *cap + 1)
        throw BudgetExceeded("no son of the prefix exceeded r at full precision");
      ++out.queries;
      Rational father = q.lower(prefix, n);
      if (father >= 2 * r)
        throw ContractViolation("q(w) reached " + to_string(father) + " >= 2r at length " + std::to_string(prefix.size()));
      for (Value a = 0; a < arity; ++a) {
        if (++out.queries > query_budget) throw BudgetExceeded("extraction query budget exhausted");
        prefix.push_back(a);
        Rational qa = q.lower(prefix, n);
        prefix.pop_back();
        if (qa > r) {
          if (found) throw ContractViolation("two sons exceed r");
          found = a;
          out.lower.push_back(qa);
          out.rounds.push_back(n);
        }
      }
    }
    prefix.push_back(*found);
    out.values.push_back(*found);
  }
  return out;
}

/// Emits, cell by cell, the first son whose lower bound becomes positive.
inline Extraction extract_positive_branch(QOracle& q, std::size_t cells, std::size_t query_budget = 1000000) {
  Extraction out;
  std::vector<Value> prefix;
  const auto cap = q.max_precision();
  for (std::size_t c = 0; c < cells; ++c) {
    const std::size_t arity = q.arity(prefix.size());
    std::optional<Value> found;
    for (std::size_t n = 1; !found; ++n) {
      if (cap && n > *cap + 1) throw BudgetExceeded("no son of the prefix became positive at full precision");
      for (Value a = 0; a < arity && !found; ++a) {
        if (++out.queries > query_budget) throw BudgetExceeded("extraction query budget exhausted");
        prefix.push_back(a);
        Rational qa = q.lower(prefix, n);
        if (qa > 0) {
          found = a;
          out.lower.push_back(qa);
          out.rounds.push_back(n);
        } else {
          prefix.pop_back();
        }
      }
    }
    out.values.push_back(*found);
  }
  return out;
}

struct PrefixResult {
  std::vector<Value> values;
  bool certified = false;
  Rational measure_lower;                 // exact mode: recorded lower bound for the whole prefix
  std::vector<Rational> agreement;        // empirical mode: fraction of trials agreeing per cell
  std::vector<Rational> stable;           // empirical mode: fraction without change after N_i
  std::vector<StabilityCertificate> certificates;
  std::size_t events_used = 0;
  std::size_t trials = 0;
};

namespace detail {

/// Events whose variables all lie below L are false under the prefix.
inline bool decided_events_avoided(const ConstraintSystem& system, std::span<const Value> prefix) {
  for (std::size_t e = 0; e < system.num_events(); ++e) {
    const auto& vbl = system.event(e).vbl;
    if (!vbl.empty() && vbl.back() >= prefix.size()) continue;
    if (system.holds(e, prefix)) return false;
  }
  return true;
}

}  // namespace detail

/// Exact mode: cells 0..L-1 of a branch with positive output measure. Any
/// such prefix extends to an assignment avoiding every event.
inline PrefixResult compute_assignment_prefix_exact(const ConstraintSystem& system, const LLLParams& params,
                                                    std::size_t L, unsigned guard = kDefaultBitGuard) {
  if (!check_computable_lll(system, params).all_hold) throw ContractViolation("local lemma condition does not hold");
  if (L > system.num_variables()) throw StructuralError("prefix longer than the variable list");
  // Every run reads at least one bit per variable that is not a point mass.
  std::size_t random_vars = 0;
  for (const auto& v : system.variables())
    random_vars += std::count_if(v.distribution.begin(), v.distribution.end(), [](const Rational& p) { return p > 0; }) > 1;
  if (random_vars > guard)
    throw BudgetExceeded(std::to_string(random_vars) + " random variables need more bits than the guard " +
                         std::to_string(guard));
  PrefixResult res;
  res.events_used = system.num_events();
  res.certified = true;
  res.measure_lower = 1;
  if (L == 0) return res;
  MtOutputOracle oracle(system, guard);
  Extraction ex = extract_positive_branch(oracle, L);
  res.values = ex.values;
  res.measure_lower = ex.lower.back();
  if (!detail::decided_events_avoided(system, res.values))
    throw Error("internal: extracted prefix violates a decided event");
  return res;
}

/// Empirical mode: runs the algorithm on a prefix of the family long enough
/// to cover every stability horizon, and reports one representative run
/// with per-cell agreement and stability frequencies. Not a proof.
inline PrefixResult compute_assignment_prefix_empirical(const InfiniteFamily& family, const Rational& alpha,
                                                        std::size_t L, std::size_t trials, std::uint64_t seed,
                                                        const Rational& delta = Rational(1, 16),
                                                        std::size_t max_events = 5000000) {
  if (trials == 0) throw StructuralError("empirical mode needs at least one trial");
  PrefixResult res;
  res.trials = trials;
  std::size_t k = 0;
  std::vector<std::size_t> horizon(L, 0);
  HorizonCache cache(family);
  for (std::size_t i = 0; i < L; ++i) {
    res.certificates.push_back(stability_horizon(alpha, i, delta, cache));
    const auto& c = res.certificates.back();
    k = std::max(k, c.k);
    for (std::size_t j : family.events_containing(i)) k = std::max(k, j + 1);
    horizon[i] = c.N.fits_ulong_p() ? c.N.get_ui() : std::numeric_limits<std::size_t>::max();
  }
  if (auto n = family.size()) k = std::min(k, *n);
  if (k > max_events) throw BudgetExceeded("covering prefix of " + std::to_string(k) + " events exceeds budget");
  res.events_used = k;
  ConstraintSystem prefix = materialize(family, k);
  std::vector<std::size_t> agree(L, 0), stable(L, 0);
  for (std::size_t trial = 0; trial < trials; ++trial) {
    Tape tape = Tape::seeded(seed + trial);
    RunResult run = run_finite(prefix, tape);
    std::vector<Value> cells(L);
    for (std::size_t i = 0; i < L; ++i)
      cells[i] = i < run.assignment.size() ? run.assignment[i] : tape.fresh_value(i, Sampler(family.variable(i).distribution));
    if (trial == 0) res.values = cells;
    for (std::size_t i = 0; i < L; ++i) {
      agree[i] += cells[i] == res.values[i];
      if (i >= run.log.initial.size() || !cell_changed_after(run.log, i, horizon[i])) ++stable[i];
    }
  }
  for (std::size_t i = 0; i < L; ++i) {
    res.agreement.push_back(make_rational(static_cast<long>(agree[i]), static_cast<long>(trials)));
    res.stable.push_back(make_rational(static_cast<long>(stable[i]), static_cast<long>(trials)));
  }
  return res;
}

}  // namespace lll
