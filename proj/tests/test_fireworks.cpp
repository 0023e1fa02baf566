// The fireworks game and its use against budgeted function oracles.

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "lll/fireworks.hpp"

namespace lll {
namespace {

using test::q;

TEST(Game, WinProbabilityExact) {
  EXPECT_EQ(win_probability_exact(100), q(99, 100));
  EXPECT_EQ(win_probability_exact(1), 0);
  EXPECT_EQ(win_probability_exact(2), q(1, 2));
  EXPECT_EQ(win_probability_exact(7), q(6, 7));
}

// Against a bad firework at position K < n the buyer loses only when k = K.
TEST(GameProperty, LossIsOneOverNForEveryStrategy) {
  for (Natural n : {1, 2, 10, 100}) {
    EXPECT_EQ(loss_probability_exact({n, std::nullopt}), 0);
    for (Natural K = 0; K <= 2 * n; ++K)
      EXPECT_EQ(loss_probability_exact({n, K}), K < n ? q(1, n) : q(0)) << n << " " << K;
  }
}

TEST(GameProperty, SequentialTakeIsUniform) {
  for (Natural n = 1; n <= 100; ++n) EXPECT_TRUE(sequential_matches_uniform(n)) << n;
  auto d = sequential_take_distribution(3);
  EXPECT_EQ(d, (std::vector<Rational>{q(1, 3), q(1, 3), q(1, 3)}));
}

// The seller sees k tests and a take exactly when the k-th firework was not
// the bad one, so nothing about k leaks before the take.
TEST(GameProperty, SellerSeesOnlyTestsBeforeTheTake) {
  const Natural n = 12;
  for (Natural K = 0; K < n + 3; ++K)
    for (Natural k = 0; k < n; ++k) {
      std::string trace = observable_trace({n, K}, k);
      if (K >= k) EXPECT_EQ(trace, std::string(k, 'T') + "X");
      else EXPECT_EQ(trace, std::string(K, 'T') + "F");
    }
  EXPECT_EQ(observable_trace({n, std::nullopt}, 4), "TTTTX");
  EXPECT_THROW(observable_trace({n, std::nullopt}, n), StructuralError);
}

TEST(Game, SampledLossFrequency) {
  const GameConfig c{10, 3};
  std::size_t losses = 0, trials = 20000;
  for (std::size_t t = 0; t < trials; ++t) {
    Tape tape = Tape::seeded(t);
    losses += play_game(c, tape).outcome == Outcome::lose;
  }
  double f = static_cast<double>(losses) / trials, se = std::sqrt(0.1 * 0.9 / trials);
  EXPECT_NEAR(f, 0.1, 5 * se);
}

TEST(Beat, ConstantOracleByHand) {
  ConstantOracle five(5);
  BeatResult r = beat_function_with_k(five, 0, 100);
  EXPECT_EQ(r.status, BeatStatus::took_good);
  EXPECT_EQ(r.g, (std::vector<Natural>{6}));
  EXPECT_EQ(r.beaten_at, 0u);
  EXPECT_EQ(r.ticks, 1u);
  r = beat_function_with_k(five, 2, 100);
  EXPECT_EQ(r.g, (std::vector<Natural>{0, 0, 6}));
  EXPECT_EQ(r.tests_done, 2u);
  EXPECT_EQ(r.beaten_at, 2u);
}

// Identity needs i+1 steps at input i, so testing f(u) writes u+1 zeros and
// the tested indices run 0, 1, 3, 7, ...
TEST(Beat, IdentityIndicesDouble) {
  IdentityOracle id;
  BeatResult r = beat_function_with_k(id, 3, 1000);
  ASSERT_EQ(r.status, BeatStatus::took_good);
  EXPECT_EQ(r.beaten_at, 7u);
  EXPECT_EQ(r.g.size(), 8u);
  EXPECT_EQ(r.g.back(), 8u);
  EXPECT_EQ(std::count(r.g.begin(), r.g.end(), 0u), 7);
  EXPECT_EQ(beat_success_probability(id, 4, 1000), 1);
}

// Diverging at 0: k=0 takes a firework that never goes off, any other k
// stays stuck testing (a success, since f is not total). Diverging at 3
// traps only k=2, which takes index 3.
TEST(Beat, DivergingOracles) {
  auto d0 = make_builtin_oracle("diverge-at:0");
  EXPECT_EQ(beat_function_with_k(*d0, 0, 500).status, BeatStatus::taking);
  EXPECT_EQ(beat_function_with_k(*d0, 1, 500).status, BeatStatus::testing);
  EXPECT_EQ(beat_success_probability(*d0, 4, 500), q(3, 4));
  auto d3 = make_builtin_oracle("diverge-at:3");
  EXPECT_EQ(beat_function_with_k(*d3, 2, 500).status, BeatStatus::taking);
  EXPECT_EQ(beat_success_probability(*d3, 4, 500), q(3, 4));
  EXPECT_EQ(beat_success_probability(*d3, 100, 5000), q(99, 100));
}

TEST(Beat, OracleSpecs) {
  EXPECT_EQ(make_builtin_oracle("constant:7")->eval(3, 1), 7u);
  EXPECT_EQ(make_builtin_oracle("identity")->eval(3, 4), 3u);
  EXPECT_FALSE(make_builtin_oracle("identity")->eval(3, 3));
  EXPECT_FALSE(make_builtin_oracle("diverge-at:1,5")->eval(5, 1000));
  EXPECT_EQ(make_builtin_oracle("diverge-at:1,5")->eval(4, 1000), 4u);
  EXPECT_THROW(make_builtin_oracle("constant:x"), ParseError);
  EXPECT_THROW(make_builtin_oracle("busy-beaver"), ParseError);
  EXPECT_EQ(n_for_epsilon(q(1, 3)), 3u);
  EXPECT_EQ(n_for_epsilon(q(2, 7)), 4u);
  EXPECT_THROW(n_for_epsilon(q(0)), StructuralError);
}

TEST(BitsProperty, RoundTripAndExceed) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 200; ++t) {
    std::vector<Natural> g(rng() % 8);
    for (auto& v : g) v = rng() % 6;
    EXPECT_EQ(bits_to_g(g_to_bits(g)), g);
  }
  EXPECT_THROW(bits_to_g({false, true}), StructuralError);
  BeatResult r = beat_function_with_k(ConstantOracle(2), 1, 100);
  EXPECT_TRUE(bits_exceed_oracle(g_to_bits(r.g), ConstantOracle(2), 100));
  EXPECT_FALSE(bits_exceed_oracle(g_to_bits({0, 1, 2}), ConstantOracle(2), 100));
}

TEST(Pairing, IsABijectionOnAPrefix) {
  std::set<Natural> seen;
  for (Natural a = 0; a < 40; ++a)
    for (Natural b = 0; b < 40; ++b) {
      Natural z = cantor_pair(a, b);
      EXPECT_EQ(cantor_unpair(z), std::make_pair(a, b));
      seen.insert(z);
    }
  for (Natural z = 0; z < 40 * 41 / 2; ++z) EXPECT_TRUE(seen.count(z)) << z;
}

TEST(BeatMany, RowsUseShrinkingErrors) {
  ConstantOracle c(3);
  IdentityOracle id;
  Tape tape = Tape::seeded(9);
  BeatManyResult r = beat_many({&c, &id}, q(1, 2), tape, 4096);
  EXPECT_EQ(r.n, (std::vector<Natural>{4, 8}));
  ASSERT_EQ(r.rows.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    const BeatResult& row = r.rows[i];
    ASSERT_EQ(row.status, BeatStatus::took_good);
    Natural u = *row.beaten_at;
    Natural f = i == 0 ? 3 : u;
    EXPECT_EQ(r.value(cantor_pair(i + 1, u)), f + 1);
  }
  EXPECT_EQ(r.value(cantor_pair(5, 5)), 0u);
  Tape empty_tape = Tape::seeded(1);
  EXPECT_TRUE(beat_many({}, q(1, 2), empty_tape, 10).g.empty());
}

// Rows fail independently; with diverge-at 0 row i fails iff k_i = 0, so
// all rows succeed with probability (1 - 1/4)(1 - 1/8) = 21/32 >= 1/2.
TEST(BeatManyProperty, JointSuccessFrequency) {
  DivergeAtOracle d0({0});
  const std::size_t trials = 8000;
  std::size_t ok = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    Tape tape = Tape::seeded(t);
    BeatManyResult r = beat_many({&d0, &d0}, q(1, 2), tape, 64);
    ok += std::all_of(r.rows.begin(), r.rows.end(), beat_succeeded);
  }
  const double p = 21.0 / 32, se = std::sqrt(p * (1 - p) / trials);
  EXPECT_NEAR(static_cast<double>(ok) / trials, p, 5 * se);
  EXPECT_EQ(beat_success_probability(d0, 4, 64) * beat_success_probability(d0, 8, 64), q(21, 32));
}

}  // namespace
}  // namespace lll
