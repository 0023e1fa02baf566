#pragma once

// The branching process used to bound witness-tree probabilities: every
// vertex labeled i independently gets a son labeled j, for each j in N(i),
// with probability z_j.

#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lll/exhaustive.hpp"
#include "lll/model.hpp"
#include "lll/rational.hpp"
#include "lll/sampler.hpp"
#include "lll/tape.hpp"
#include "lll/witness.hpp"

namespace lll {

struct GWParams {
  std::vector<Rational> z;
  std::size_t root = 0;
  Rational alpha = 1;

  void validate(std::size_t num_events) const {
    LLLParams{z, alpha}.validate(num_events);
    if (root >= num_events) throw StructuralError("root label out of range");
  }
};

namespace detail {

/// Probability that the process produces exactly `tree`, without checking
/// tree-class membership.
inline Rational gw_probability_unchecked(const WitnessTree& tree, const std::vector<Rational>& z,
                                         NeighborCache& neighbors) {
  Rational p = 1;
  for (const auto& v : tree.vertices()) {
    std::map<std::size_t, int> sons;
    for (std::size_t c : v.children) ++sons[tree.vertex(c).label];
    const auto& nbs = neighbors(v.label);
    for (const auto& [label, count] : sons)
      if (count > 1 || !std::binary_search(nbs.begin(), nbs.end(), label)) return 0;
    for (std::size_t j : nbs) p *= sons.count(j) ? z[j] : Rational(1 - z[j]);
  }
  return p;
}

}  // namespace detail

/// Exact probability that the process started at params.root yields
/// exactly this tree.
inline Rational gw_tree_probability(const WitnessTree& tree, const GWParams& params, const ConstraintSystem& system) {
  params.validate(system.num_events());
  auto check = validate_tree(tree, system);
  if (!check.valid) throw StructuralError("invalid witness tree: " + check.violations.front());
  if (tree.root_label() != params.root) throw StructuralError("tree root does not match params.root");
  NeighborCache cache(system);
  return detail::gw_probability_unchecked(tree, params.z, cache);
}

/// Same formula for any tree the process can produce, including trees whose
/// sons are neighbors of each other.
inline Rational gw_process_probability(const WitnessTree& tree, const std::vector<Rational>& z,
                                       const ConstraintSystem& system) {
  NeighborCache cache(system);
  return detail::gw_probability_unchecked(tree, z, cache);
}

enum class SpawnOrder { ascending, descending };

struct GWSample {
  std::optional<WitnessTree> tree;  // empty on overflow
  bool overflow = false;
};

/// Breadth-first sampling. Neighbors are considered in increasing label
/// order (or decreasing, for the order-invariance test); each decision
/// draws from the auxiliary stream of the candidate label. A son deeper
/// than `depth_budget`, or more than `max_vertices` vertices, is reported
/// as overflow.
inline GWSample gw_sample(const GWParams& params, const ConstraintSystem& system, Tape& tape, std::size_t depth_budget,
                          std::size_t max_vertices = 100000, SpawnOrder order = SpawnOrder::ascending) {
  params.validate(system.num_events());
  NeighborCache neighbors(system);
  std::map<std::size_t, Sampler> coins;
  auto coin = [&](std::size_t j) -> const Sampler& {
    auto it = coins.find(j);
    if (it == coins.end()) it = coins.emplace(j, bernoulli(params.z[j])).first;
    return it->second;
  };
  WitnessTree tree(params.root);
  std::deque<std::size_t> queue{0};
  while (!queue.empty()) {
    std::size_t id = queue.front();
    queue.pop_front();
    std::vector<std::size_t> candidates = neighbors(tree.vertex(id).label);
    if (order == SpawnOrder::descending) std::reverse(candidates.begin(), candidates.end());
    for (std::size_t j : candidates) {
      if (tape.aux_value(j, coin(j)) == 0) continue;
      if (tree.vertex(id).depth + 1 > depth_budget || tree.size() >= max_vertices) return {std::nullopt, true};
      queue.push_back(tree.add_child(id, j));
    }
  }
  return {std::move(tree), false};
}

/// sum_{i < k} z_i / (1 - z_i)
inline Rational expected_steps_bound(const std::vector<Rational>& z, std::size_t k) {
  if (k > z.size()) throw StructuralError("prefix longer than z");
  Rational total = 0;
  for (std::size_t i = 0; i < k; ++i) total += z[i] / (1 - z[i]);
  return total;
}

inline Rational expected_steps_bound(const std::vector<Rational>& z) { return expected_steps_bound(z, z.size()); }

struct MtVsGwRow {
  std::string tree;
  std::size_t root = 0;
  std::size_t size = 0;
  Rational p_mt_lower, p_mt_upper;
  Rational p_gw;
  Rational bound;  // z_root/(1-z_root) * alpha^size * p_gw
  bool certified = false;  // p_mt_upper <= bound
  bool violated = false;   // p_mt_lower > bound
};

struct MtVsGwReport {
  bool condition_holds = false;  // plain or strengthened condition
  Rational alpha_used = 1;       // alpha if the strengthened condition holds, else 1
  std::vector<MtVsGwRow> rows;
  std::map<std::size_t, Rational> gw_mass_by_root;  // sum of p_gw over appearing trees
  Rational unresolved_mass;
  bool certified = false;  // condition holds, every row certified, every root mass <= 1
  std::size_t violations = 0;
};

/// Compares exact appearance probabilities in the resampling algorithm with
/// the branching-process bound for every tree that appears in some branch.
inline MtVsGwReport check_mt_vs_gw(const ConstraintSystem& system, const LLLParams& params, unsigned bit_budget,
                                   unsigned guard = kDefaultBitGuard) {
  params.validate(system.num_events());
  MtVsGwReport report;
  bool strengthened = params.alpha < 1 && check_computable_lll(system, params).all_hold;
  bool plain = check_finite_lll(system, params.z).all_hold;
  report.condition_holds = strengthened || plain;
  report.alpha_used = strengthened ? params.alpha : Rational(1);

  ExhaustiveReport ex = enumerate_witness_trees(system, bit_budget, guard);
  report.unresolved_mass = ex.unresolved_mass;
  NeighborCache cache(system);
  bool all_certified = true;
  for (const auto& [key, t] : ex.trees) {
    MtVsGwRow row;
    row.tree = key;
    row.root = t.tree.root_label();
    row.size = t.tree.size();
    row.p_mt_lower = t.lower;
    row.p_mt_upper = t.upper;
    row.p_gw = detail::gw_probability_unchecked(t.tree, params.z, cache);
    const Rational& zr = params.z[row.root];
    row.bound = zr / (1 - zr) * pow(report.alpha_used, row.size) * row.p_gw;
    row.certified = row.p_mt_upper <= row.bound;
    row.violated = row.p_mt_lower > row.bound;
    if (row.violated) ++report.violations;
    all_certified = all_certified && row.certified;
    report.gw_mass_by_root[row.root] += row.p_gw;
    report.rows.push_back(std::move(row));
  }
  for (const auto& [root, mass] : report.gw_mass_by_root)
    if (mass > 1) {
      all_certified = false;
      ++report.violations;
    }
  report.certified = report.condition_holds && all_certified;
  return report;
}

}  // namespace lll
