#pragma once

// Witness trees: for resampling step k, scan steps k-1..1 backwards and hang
// each step that touches the tree under the deepest vertex it neighbors.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "lll/engine.hpp"
#include "lll/error.hpp"
#include "lll/model.hpp"
#include "lll/rational.hpp"

namespace lll {

struct WitnessVertex {
  std::size_t label = 0;
  std::optional<std::size_t> parent;
  std::size_t depth = 0;
  std::optional<std::size_t> step;  // resampling step, when built from a log
  std::vector<std::size_t> children;
};

class WitnessTree {
 public:
  explicit WitnessTree(std::size_t root_label, std::optional<std::size_t> root_step = std::nullopt) {
    vertices_.push_back({root_label, std::nullopt, 0, root_step, {}});
  }

  std::size_t add_child(std::size_t parent, std::size_t label, std::optional<std::size_t> step = std::nullopt) {
    if (parent >= vertices_.size()) throw StructuralError("no such parent vertex");
    std::size_t id = vertices_.size();
    vertices_.push_back({label, parent, vertices_[parent].depth + 1, step, {}});
    vertices_[parent].children.push_back(id);
    return id;
  }

  const std::vector<WitnessVertex>& vertices() const noexcept { return vertices_; }
  const WitnessVertex& vertex(std::size_t id) const { return vertices_.at(id); }
  std::size_t size() const noexcept { return vertices_.size(); }
  std::size_t root_label() const noexcept { return vertices_[0].label; }

  std::size_t count_label(std::size_t label) const {
    return static_cast<std::size_t>(
        std::count_if(vertices_.begin(), vertices_.end(), [&](const WitnessVertex& v) { return v.label == label; }));
  }

  /// Single-line form with children sorted by their own canonical form,
  /// e.g. "1(0(1),2)". Equal strings iff isomorphic as labeled rooted trees.
  std::string canonical() const { return canonical_from(0); }

  /// One vertex per line, two spaces per level, children in label order.
  std::string indented() const {
    std::string out;
    indent_from(0, out);
    return out;
  }

  /// Inverse of canonical().
  static WitnessTree parse(const std::string& text) {
    std::size_t pos = 0;
    auto read_label = [&]() {
      std::size_t start = pos;
      while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
      if (start == pos) throw ParseError("expected a label in tree '" + text + "'", 0);
      return static_cast<std::size_t>(std::stoull(text.substr(start, pos - start)));
    };
    WitnessTree tree(read_label());
    std::vector<std::size_t> stack{0};
    std::size_t last = 0;
    while (pos < text.size()) {
      char c = text[pos];
      if (c == '(') {
        ++pos;
        stack.push_back(last);
        last = tree.add_child(stack.back(), read_label());
      } else if (c == ',') {
        ++pos;
        if (stack.size() < 2) throw ParseError("unexpected ',' in tree", 0);
        last = tree.add_child(stack.back(), read_label());
      } else if (c == ')') {
        ++pos;
        if (stack.size() < 2) throw ParseError("unbalanced ')' in tree", 0);
        last = stack.back();
        stack.pop_back();
      } else {
        throw ParseError("unexpected character in tree '" + text + "'", 0);
      }
    }
    if (stack.size() != 1) throw ParseError("unbalanced tree '" + text + "'", 0);
    return tree;
  }

 private:
  std::string canonical_from(std::size_t id) const {
    const WitnessVertex& v = vertices_[id];
    std::string out = std::to_string(v.label);
    if (v.children.empty()) return out;
    std::vector<std::string> parts;
    for (std::size_t c : v.children) parts.push_back(canonical_from(c));
    std::sort(parts.begin(), parts.end());
    out += '(';
    for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? "," : "") + parts[i];
    return out + ')';
  }

  void indent_from(std::size_t id, std::string& out) const {
    const WitnessVertex& v = vertices_[id];
    out += std::string(2 * v.depth, ' ') + std::to_string(v.label) + '\n';
    std::vector<std::size_t> kids = v.children;
    std::sort(kids.begin(), kids.end(), [&](std::size_t a, std::size_t b) { return vertices_[a].label < vertices_[b].label; });
    for (std::size_t c : kids) indent_from(c, out);
  }

  std::vector<WitnessVertex> vertices_;
};

/// Memoized N(A_i) lookups for repeated tree construction.
class NeighborCache {
 public:
  explicit NeighborCache(const ConstraintSystem& system) : system_(&system) {}

  const std::vector<std::size_t>& operator()(std::size_t e) {
    auto it = cache_.find(e);
    if (it == cache_.end()) it = cache_.emplace(e, system_->neighbors(e)).first;
    return it->second;
  }

 private:
  const ConstraintSystem* system_;
  std::unordered_map<std::size_t, std::vector<std::size_t>> cache_;
};

namespace detail {

/// Same-depth vertices in breadth-first order, children visited by label.
inline bool bfs_before(const WitnessTree& tree, std::size_t a, std::size_t b) {
  while (a != b) {
    const auto& va = tree.vertex(a);
    const auto& vb = tree.vertex(b);
    if (va.parent == vb.parent) return va.label < vb.label;
    a = *va.parent;
    b = *vb.parent;
  }
  return false;
}

inline WitnessTree build_from_events(std::span<const std::size_t> events, std::size_t k, NeighborCache& neighbors) {
  if (k == 0 || k > events.size())
    throw StructuralError("step " + std::to_string(k) + " outside 1.." + std::to_string(events.size()));
  WitnessTree tree(events[k - 1], k);
  std::unordered_map<std::size_t, std::vector<std::size_t>> by_label{{events[k - 1], {0}}};
  for (std::size_t s = k - 1; s >= 1; --s) {
    const std::size_t e = events[s - 1];
    std::optional<std::size_t> best;
    for (std::size_t nb : neighbors(e)) {
      auto it = by_label.find(nb);
      if (it == by_label.end()) continue;
      for (std::size_t v : it->second) {
        if (!best) { best = v; continue; }
        std::size_t dv = tree.vertex(v).depth, db = tree.vertex(*best).depth;
        if (dv > db || (dv == db && bfs_before(tree, v, *best))) best = v;
      }
    }
    if (!best) continue;
    std::size_t id = tree.add_child(*best, e, s);
    by_label[e].push_back(id);
  }
  return tree;
}

inline std::vector<std::size_t> events_of_log(const ResampleLog& log) {
  std::vector<std::size_t> out;
  out.reserve(log.steps.size());
  for (const auto& s : log.steps) out.push_back(s.event);
  return out;
}

}  // namespace detail

/// Tree for resampling step k (1-based). Ties for "deepest neighbor" are
/// broken by breadth-first order with children visited in label order.
inline WitnessTree build_witness_tree(const ResampleLog& log, std::size_t k, const ConstraintSystem& system) {
  NeighborCache cache(system);
  auto events = detail::events_of_log(log);
  return detail::build_from_events(events, k, cache);
}

inline WitnessTree build_witness_tree(std::span<const std::size_t> events, std::size_t k,
                                      const ConstraintSystem& system) {
  NeighborCache cache(system);
  return detail::build_from_events(events, k, cache);
}

struct TreeValidation {
  bool valid = true;
  std::vector<std::string> violations;
};

/// Membership in the tree class: sons are distinct, pairwise disjoint
/// neighbors of their father, and no two vertices at the same depth are
/// neighbors.
inline TreeValidation validate_tree(const WitnessTree& tree, const ConstraintSystem& system) {
  TreeValidation out;
  auto fail = [&](std::string msg) {
    out.valid = false;
    out.violations.push_back(std::move(msg));
  };
  const auto& vs = tree.vertices();
  for (std::size_t id = 0; id < vs.size(); ++id)
    if (vs[id].label >= system.num_events()) {
      fail("vertex " + std::to_string(id) + " has unknown label " + std::to_string(vs[id].label));
      return out;
    }
  if (vs[0].parent || vs[0].depth != 0) fail("root must have depth 0 and no parent");
  for (std::size_t id = 1; id < vs.size(); ++id) {
    const auto& v = vs[id];
    if (!v.parent || *v.parent >= vs.size()) { fail("vertex " + std::to_string(id) + " has no parent"); continue; }
    const auto& p = vs[*v.parent];
    if (v.depth != p.depth + 1) fail("vertex " + std::to_string(id) + " has inconsistent depth");
    if (!system.are_neighbors(v.label, p.label))
      fail("son " + std::to_string(v.label) + " is not a neighbor of father " + std::to_string(p.label));
  }
  for (std::size_t id = 0; id < vs.size(); ++id) {
    const auto& kids = vs[id].children;
    for (std::size_t a = 0; a < kids.size(); ++a)
      for (std::size_t b = a + 1; b < kids.size(); ++b) {
        std::size_t la = vs[kids[a]].label, lb = vs[kids[b]].label;
        if (la == lb) fail("vertex " + std::to_string(id) + " has two sons labeled " + std::to_string(la));
        else if (system.are_neighbors(la, lb))
          fail("sons " + std::to_string(la) + " and " + std::to_string(lb) + " of vertex " + std::to_string(id) +
               " are neighbors");
      }
  }
  std::map<std::size_t, std::vector<std::size_t>> levels;
  for (std::size_t id = 0; id < vs.size(); ++id) levels[vs[id].depth].push_back(id);
  for (const auto& [depth, ids] : levels)
    for (std::size_t a = 0; a < ids.size(); ++a)
      for (std::size_t b = a + 1; b < ids.size(); ++b)
        if (system.are_neighbors(vs[ids[a]].label, vs[ids[b]].label))
          fail("vertices labeled " + std::to_string(vs[ids[a]].label) + " and " + std::to_string(vs[ids[b]].label) +
               " share depth " + std::to_string(depth) + " but are neighbors");
  return out;
}

/// One tree per logged step. Throws if two trees coincide or if the
/// number of root-label occurrences fails to grow across trees sharing a
/// root label; both would contradict the construction.
inline std::vector<WitnessTree> trees_for_run(const ResampleLog& log, const ConstraintSystem& system) {
  NeighborCache cache(system);
  auto events = detail::events_of_log(log);
  std::vector<WitnessTree> trees;
  trees.reserve(events.size());
  std::unordered_set<std::string> seen;
  std::unordered_map<std::size_t, std::size_t> last_count;
  for (std::size_t k = 1; k <= events.size(); ++k) {
    WitnessTree t = detail::build_from_events(events, k, cache);
    if (!seen.insert(t.canonical()).second)
      throw StructuralError("witness tree repeated at step " + std::to_string(k));
    std::size_t count = t.count_label(t.root_label());
    auto [it, fresh] = last_count.emplace(t.root_label(), count);
    if (!fresh) {
      if (count <= it->second) throw StructuralError("root-label count did not increase at step " + std::to_string(k));
      it->second = count;
    }
    trees.push_back(std::move(t));
  }
  return trees;
}

struct VertexDraws {
  std::size_t vertex = 0;
  std::vector<TapeDraw> draws;  // position filled; value left 0
};

/// Tape positions consumed by each vertex's resampling, derived from the
/// tree alone: the vertices using variable x, ordered from deepest to
/// shallowest, consumed x^1, x^2, ... in that order.
inline std::vector<VertexDraws> reconstruct_tape_positions(const WitnessTree& tree, const ConstraintSystem& system) {
  auto check = validate_tree(tree, system);
  if (!check.valid) throw StructuralError("invalid witness tree: " + check.violations.front());
  const auto& vs = tree.vertices();
  std::map<std::size_t, std::vector<std::size_t>> users;  // var -> vertices
  for (std::size_t id = 0; id < vs.size(); ++id)
    for (std::size_t x : system.event(vs[id].label).vbl) users[x].push_back(id);
  std::vector<VertexDraws> out(vs.size());
  for (std::size_t id = 0; id < vs.size(); ++id) out[id].vertex = id;
  for (auto& [x, ids] : users) {
    std::sort(ids.begin(), ids.end(), [&](std::size_t a, std::size_t b) { return vs[a].depth > vs[b].depth; });
    for (std::size_t r = 0; r < ids.size(); ++r) out[ids[r]].draws.push_back({x, r + 1, 0});
  }
  for (auto& vd : out)
    std::sort(vd.draws.begin(), vd.draws.end(), [](const TapeDraw& a, const TapeDraw& b) { return a.var < b.var; });
  return out;
}

/// Compares reconstructed positions with what the run actually consumed.
/// Requires the tree to carry step numbers.
inline bool positions_match_log(const WitnessTree& tree, const std::vector<VertexDraws>& positions,
                                const ResampleLog& log) {
  for (const auto& vd : positions) {
    const auto& step = tree.vertex(vd.vertex).step;
    if (!step || *step == 0 || *step > log.steps.size()) return false;
    const auto& logged = log.steps[*step - 1].draws;
    if (logged.size() != vd.draws.size()) return false;
    for (std::size_t k = 0; k < logged.size(); ++k)
      if (logged[k].var != vd.draws[k].var || logged[k].position != vd.draws[k].position) return false;
  }
  return true;
}

/// Product of Pr[label] over all vertices, with multiplicity.
inline Rational tree_probability_bound(const WitnessTree& tree, const ConstraintSystem& system) {
  Rational out = 1;
  std::map<std::size_t, Rational> cache;
  for (const auto& v : tree.vertices()) {
    auto it = cache.find(v.label);
    if (it == cache.end()) it = cache.emplace(v.label, system.probability(v.label)).first;
    out *= it->second;
  }
  return out;
}

}  // namespace lll
