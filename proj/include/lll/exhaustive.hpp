#pragma once

// Exact appearance probabilities of witness trees by exhaustive enumeration
// of explicit tapes.
//
// Each branch of the tape tree is run to completion or until the bit budget
// is spent. Finished branches contribute their exact dyadic weight.
// Unfinished branches are kept as an explicit "unresolved" mass, so every
// reported probability is a certified interval [lower, upper].

#include <algorithm>
#include <map>
#include <optional>
#include <unordered_set>
#include <string>
#include <unordered_map>
#include <vector>

#include "lll/engine.hpp"
#include "lll/tape.hpp"
#include "lll/witness.hpp"

namespace lll {

struct TreeAppearance {
  WitnessTree tree;
  Rational lower;  // mass of branches in which the tree appeared
  // lower + what the unfinished branches without the tree could still
  // contribute (their whole mass, or a sharper bound for fair bits)
  Rational upper;
};

struct ExhaustiveReport {
  unsigned bit_budget = 0;
  std::size_t branches = 0;
  std::size_t unresolved_branches = 0;
  Rational resolved_mass;
  Rational unresolved_mass;
  Rational expected_resamples_lower;  // counts unresolved branches up to the cut
  std::map<std::string, TreeAppearance> trees;  // keyed by canonical form

  // For each root label: branch mass by the largest size of any tree with
  // that root in the branch (0 = none), all branches and unresolved ones.
  std::map<std::size_t, std::map<std::size_t, Rational>> max_size_mass;
  std::map<std::size_t, std::map<std::size_t, Rational>> max_size_unresolved;

  bool fully_resolved() const { return unresolved_mass == 0; }

  /// Certified interval for Pr[some tree with this root and size >= m
  /// appears].
  std::pair<Rational, Rational> large_tree_probability(std::size_t root, std::size_t m) const {
    Rational lower = 0, upper = 0;
    if (auto it = max_size_mass.find(root); it != max_size_mass.end())
      for (const auto& [size, mass] : it->second)
        if (size >= m && size > 0) lower += mass;
    upper = lower;
    Rational unresolved_with_root = 0;
    if (auto it = max_size_unresolved.find(root); it != max_size_unresolved.end())
      for (const auto& [size, mass] : it->second) {
        unresolved_with_root += mass;
        if (size < m || size == 0) upper += mass;
      }
    // Unresolved branches where the root never appeared at all.
    upper += unresolved_mass - unresolved_with_root;
    return {lower, upper};
  }
};

namespace detail {

/// Tape cells (variable, position) whose values a cut-off branch fixed.
struct KnownCells {
  std::vector<std::vector<Value>> values;  // values[var][pos]

  explicit KnownCells(const ResampleLog& log, std::size_t num_vars) : values(num_vars) {
    for (const auto& d : log.initial) values[d.var].push_back(d.value);
    for (const auto& s : log.steps)
      for (const auto& d : s.draws) values[d.var].push_back(d.value);
  }

  std::optional<Value> at(std::size_t var, std::size_t pos) const {
    return pos < values[var].size() ? std::optional<Value>(values[var][pos]) : std::nullopt;
  }
};

inline bool all_fair_bits(const ConstraintSystem& system) {
  for (const auto& v : system.variables())
    if (v.range() != 2 || v.distribution[0] != Rational(1, 2)) return false;
  return true;
}

/// Pr[every vertex's event holds on the tape cells it was checked on],
/// conditioned on the cells a branch already fixed. The cells of different
/// vertices are distinct, so the vertices are independent. Vertex v with
/// resampling positions P checked its event on positions P-1.
inline Rational conditional_consistency(const std::vector<VertexDraws>& positions, const WitnessTree& tree,
                                        const ConstraintSystem& system, const KnownCells& known) {
  Rational total = 1;
  for (const auto& vd : positions) {
    const Event& e = system.event(tree.vertex(vd.vertex).label);
    Rational p = 0;
    for (const Tuple& t : e.forbidden) {
      Rational q = 1;
      for (std::size_t k = 0; k < e.vbl.size() && q != 0; ++k) {
        const TapeDraw& d = vd.draws[k];
        if (auto v = known.at(d.var, d.position - 1)) q *= *v == t[k] ? 1 : 0;
        else q *= system.variable(d.var).distribution[t[k]];
      }
      p += q;
    }
    total *= p;
    if (total == 0) break;
  }
  return total;
}

}  // namespace detail

/// Enumerates every tape up to `bit_budget` bits and records which witness
/// trees appear in each branch. A step whose resampling ran out of bits
/// still counts: its tree is fixed once the event is selected.
inline ExhaustiveReport enumerate_witness_trees(const ConstraintSystem& system, unsigned bit_budget,
                                                unsigned guard = kDefaultBitGuard) {
  if (bit_budget > guard)
    throw BudgetExceeded("bit budget " + std::to_string(bit_budget) + " exceeds guard " + std::to_string(guard));

  struct Accum {
    WitnessTree tree{0};
    DyadicSum lower;
    DyadicSum unresolved_seen;
  };
  struct OpenBranch {
    unsigned bits;
    detail::KnownCells known;
    std::unordered_set<std::string> seen;
  };
  const bool sharpen = detail::all_fair_bits(system);
  std::vector<OpenBranch> open;
  std::unordered_map<std::string, Accum> acc;
  DyadicSum resolved, unresolved, steps_weighted;
  std::map<std::size_t, std::map<std::size_t, DyadicSum>> max_all, max_unres;
  ExhaustiveReport report;
  report.bit_budget = bit_budget;

  explore_tapes<RunResult>(
      bit_budget,
      [&](Tape& tape, RunResult& out) {
        try {
          out = run_finite(system, tape);
          return true;
        } catch (const RunInterrupted& e) {
          out = e.partial;
          return false;
        }
      },
      [&](const Branch<RunResult>& branch) {
        const unsigned bits = static_cast<unsigned>(branch.prefix.size());
        ++report.branches;
        if (branch.resolved) resolved.add(bits);
        else {
          unresolved.add(bits);
          ++report.unresolved_branches;
        }
        steps_weighted.add(bits, branch.result.log.steps.size());
        auto trees = trees_for_run(branch.result.log, system);
        std::map<std::size_t, std::size_t> largest;
        for (const auto& t : trees) {
          std::size_t& m = largest[t.root_label()];
          m = std::max(m, t.size());
        }
        for (auto [root, m] : largest) {
          max_all[root][m].add(bits);
          if (!branch.resolved) max_unres[root][m].add(bits);
        }
        std::unordered_set<std::string> seen;
        for (auto& t : trees) {
          std::string key = t.canonical();
          auto it = acc.find(key);
          if (it == acc.end()) it = acc.emplace(key, Accum{t, {}, {}}).first;
          it->second.lower.add(bits);
          if (!branch.resolved) it->second.unresolved_seen.add(bits);
          if (sharpen && !branch.resolved) seen.insert(std::move(key));
        }
        if (sharpen && !branch.resolved)
          open.push_back({bits, detail::KnownCells(branch.result.log, system.num_variables()), std::move(seen)});
      });

  report.resolved_mass = resolved.value();
  report.unresolved_mass = unresolved.value();
  report.expected_resamples_lower = steps_weighted.value();
  for (auto& [root, by_size] : max_all)
    for (auto& [m, w] : by_size) report.max_size_mass[root][m] = w.value();
  for (auto& [root, by_size] : max_unres)
    for (auto& [m, w] : by_size) report.max_size_unresolved[root][m] = w.value();
  for (auto& [key, a] : acc) {
    Rational lower = a.lower.value();
    Rational upper;
    if (sharpen) {
      // Appearing forces the tree to be consistent with the tape, so an
      // open branch contributes at most its mass times that probability.
      auto positions = reconstruct_tape_positions(a.tree, system);
      upper = lower;
      for (const auto& b : open)
        if (!b.seen.count(key))
          upper += dyadic(b.bits) * detail::conditional_consistency(positions, a.tree, system, b.known);
    } else {
      upper = lower + report.unresolved_mass - a.unresolved_seen.value();
    }
    report.trees.emplace(key, TreeAppearance{std::move(a.tree), lower, upper});
  }
  return report;
}

struct LemmaRow {
  std::string tree;
  Rational lower, upper, bound;
  bool certified = false;  // upper <= bound
  bool violated = false;   // lower > bound
};

/// Checks Pr[T appears] <= prod Pr[labels] for every tree in the report.
inline std::vector<LemmaRow> check_tree_lemma(const ExhaustiveReport& report, const ConstraintSystem& system) {
  std::vector<LemmaRow> rows;
  for (const auto& [key, t] : report.trees) {
    LemmaRow row{key, t.lower, t.upper, tree_probability_bound(t.tree, system)};
    row.certified = row.upper <= row.bound;
    row.violated = row.lower > row.bound;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace lll
