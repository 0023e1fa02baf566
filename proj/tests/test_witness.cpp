// Witness trees: the worked resampling sequence, structural properties on
// random runs, and tape-position reconstruction.

#include <gtest/gtest.h>

#include <chrono>

#include "helpers.hpp"
#include "lll/engine.hpp"
#include "lll/witness.hpp"

namespace lll {
namespace {

using detail::fair_bits;
using detail::forbid;

// Events 1..4 with neighbor pairs (1,2) and (2,3) only; event 0 is an
// unused isolated event so labels match the usual 1-based numbering.
ConstraintSystem four_events() {
  return ConstraintSystem(fair_bits(4), {forbid(0, {0}, {{1}}), forbid(1, {1}, {{1}}), forbid(2, {1, 2}, {{1, 1}}),
                                         forbid(3, {2}, {{1}}), forbid(4, {3}, {{1}})});
}

TEST(WitnessGolden, SequenceTwoOneThreeFourTwo) {
  ConstraintSystem s = four_events();
  ASSERT_TRUE(s.are_neighbors(1, 2));
  ASSERT_TRUE(s.are_neighbors(2, 3));
  ASSERT_FALSE(s.are_neighbors(1, 3));
  ASSERT_FALSE(s.are_neighbors(4, 2));
  const std::vector<std::size_t> seq{2, 1, 3, 4, 2};
  auto t0 = std::chrono::steady_clock::now();
  WitnessTree t = build_witness_tree(seq, 5, s);
  auto elapsed = std::chrono::steady_clock::now() - t0;
  EXPECT_LT(std::chrono::duration_cast<std::chrono::microseconds>(elapsed).count(), 1000);

  // Root 2; sons 1 and 3; the first 2 goes under 1 (same depth as 3, but
  // earlier in breadth-first label order); 4 is skipped.
  EXPECT_EQ(t.canonical(), "2(1(2),3)");
  EXPECT_EQ(t.indented(), "2\n  1\n    2\n  3\n");
  EXPECT_EQ(t.size(), 4u);
  EXPECT_EQ(t.count_label(4), 0u);
  const auto& v = t.vertices();
  EXPECT_EQ(v[0].step, 5u);
  EXPECT_EQ(v[1].label, 3u);  // scanned first
  EXPECT_EQ(v[2].label, 1u);
  EXPECT_EQ(v[3].label, 2u);
  EXPECT_EQ(v[3].parent, 2u);
  EXPECT_EQ(v[3].step, 1u);
  EXPECT_TRUE(validate_tree(t, s).valid);
}

TEST(WitnessGolden, EarlierStepsOfTheSameSequence) {
  ConstraintSystem s = four_events();
  const std::vector<std::size_t> seq{2, 1, 3, 4, 2};
  EXPECT_EQ(build_witness_tree(seq, 1, s).canonical(), "2");
  EXPECT_EQ(build_witness_tree(seq, 2, s).canonical(), "1(2)");
  EXPECT_EQ(build_witness_tree(seq, 3, s).canonical(), "3(2)");
  EXPECT_EQ(build_witness_tree(seq, 4, s).canonical(), "4");
  EXPECT_THROW(build_witness_tree(seq, 6, s), StructuralError);
  EXPECT_THROW(build_witness_tree(seq, 0, s), StructuralError);
}

// Positions for "2(1(2),3)": users of the shared variable between 1 and 2,
// deepest first, took draws 1, 2, 3.
TEST(WitnessGolden, ReconstructedPositions) {
  ConstraintSystem s = four_events();
  const std::vector<std::size_t> seq{2, 1, 3, 4, 2};
  WitnessTree t = build_witness_tree(seq, 5, s);
  auto pos = reconstruct_tape_positions(t, s);
  auto draws = [&](std::size_t id) {
    std::vector<std::pair<std::size_t, std::uint64_t>> out;
    for (const auto& d : pos[id].draws) out.emplace_back(d.var, d.position);
    return out;
  };
  using P = std::vector<std::pair<std::size_t, std::uint64_t>>;
  EXPECT_EQ(draws(0), (P{{1, 3}, {2, 3}}));  // root: final resampling of 2
  EXPECT_EQ(draws(1), (P{{2, 2}}));          // 3
  EXPECT_EQ(draws(2), (P{{1, 2}}));          // 1
  EXPECT_EQ(draws(3), (P{{1, 1}, {2, 1}}));  // first 2
}

TEST(WitnessTree, CanonicalParseRoundTrip) {
  for (std::string text : {"0", "2(1(2),3)", "1(0(1(0)),2)", "10(3,7(10))"}) {
    WitnessTree t = WitnessTree::parse(text);
    EXPECT_EQ(t.canonical(), text);
  }
  // Child order does not matter.
  EXPECT_EQ(WitnessTree::parse("2(3,1(2))").canonical(), "2(1(2),3)");
  EXPECT_THROW(WitnessTree::parse("2(1"), ParseError);
  EXPECT_THROW(WitnessTree::parse("2)"), ParseError);
  EXPECT_THROW(WitnessTree::parse("(1)"), ParseError);
}

TEST(WitnessTree, ValidationCatchesBadShapes) {
  ConstraintSystem s = four_events();
  EXPECT_FALSE(validate_tree(WitnessTree::parse("1(3)"), s).valid);     // not neighbors
  EXPECT_FALSE(validate_tree(WitnessTree::parse("2(1,1)"), s).valid);   // repeated son
  EXPECT_FALSE(validate_tree(WitnessTree::parse("2(2,3)"), s).valid);   // neighboring sons
  EXPECT_FALSE(validate_tree(WitnessTree::parse("2(1(2),3(2))"), s).valid);  // same-depth neighbors
  EXPECT_TRUE(validate_tree(WitnessTree::parse("2(1(2(3)),3)"), s).valid);
  EXPECT_EQ(tree_probability_bound(WitnessTree::parse("2(1(2),3)"), s), make_rational(1, 4 * 2 * 4 * 2));
}

// Properties over random systems and seeds: every tree is in the tree
// class, trees of one run are pairwise distinct, the root is the step's
// event, and the positions derived from the tree alone equal the ones the
// run consumed.
TEST(WitnessProperty, RandomRuns) {
  std::size_t checked = 0;
  for (std::uint64_t seed = 0; seed < 150; ++seed) {
    ConstraintSystem s = test::random_small_system(seed, 5, 4);
    Tape tape = Tape::seeded(seed + 1000);
    RunOptions options;
    options.max_steps = 300;
    RunResult r = run_finite(s, tape, options);
    std::vector<WitnessTree> trees;
    ASSERT_NO_THROW(trees = trees_for_run(r.log, s)) << "seed " << seed;
    for (std::size_t k = 1; k <= trees.size(); ++k) {
      const WitnessTree& t = trees[k - 1];
      ASSERT_TRUE(validate_tree(t, s).valid) << "seed " << seed << " step " << k;
      EXPECT_EQ(t.root_label(), r.log.steps[k - 1].event);
      EXPECT_LE(t.size(), k);
      EXPECT_TRUE(positions_match_log(t, reconstruct_tape_positions(t, s), r.log));
      ++checked;
    }
  }
  EXPECT_GT(checked, 200u);
}

// Trees sharing a root label strictly grow in the number of root labels.
TEST(WitnessProperty, RootCountGrows) {
  ConstraintSystem s = test::system_named("dense");
  Tape tape = Tape::seeded(3);
  RunResult r = run_finite(s, tape);
  auto trees = trees_for_run(r.log, s);
  for (std::size_t k = 0; k < trees.size(); ++k) EXPECT_EQ(trees[k].size(), k + 1);
}

}  // namespace
}  // namespace lll
