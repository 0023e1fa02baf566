// Fixed-size CNF check, the beta/M computation, trimming, the degree audit
// and the forbidden-factor pipeline.

#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"
#include "lll/corollaries.hpp"
#include "lll/trials.hpp"

namespace lll {
namespace {

using test::q;

TEST(FixedCnf, InequalityByHand) {
  // m=3: 1/8 <= alpha * 1/2 * (1/2)^2 iff alpha >= 1.
  EXPECT_TRUE(fixed_cnf_inequality(3, q(1)).holds);
  EXPECT_EQ(fixed_cnf_inequality(3, q(1)).rhs, q(1, 8));
  EXPECT_FALSE(fixed_cnf_inequality(3, q(99, 100)).holds);
  // m=4: 1/16 <= alpha * 81/1024 iff alpha >= 64/81.
  EXPECT_EQ(fixed_cnf_inequality(4, q(1)).rhs, q(81, 1024));
  EXPECT_TRUE(fixed_cnf_inequality(4, q(64, 81)).holds);
  EXPECT_FALSE(fixed_cnf_inequality(4, q(63, 81)).holds);
  EXPECT_FALSE(fixed_cnf_inequality(2, q(1)).holds);
  EXPECT_THROW(fixed_cnf_inequality(1, q(1)), StructuralError);
}

TEST(FixedCnf, InequalityHoldsForAllLargerSizesAtPointNineNine) {
  for (unsigned m = 4; m <= 12; ++m) EXPECT_TRUE(fixed_cnf_inequality(m, q(99, 100)).holds) << m;
}

// Property: generated instances respect the neighbor cap, and the run
// always ends in a verified satisfying assignment.
TEST(FixedCnfProperty, RandomInstancesRespectCapAndSolve) {
  for (unsigned m : {3u, 4u, 5u}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      ConstraintSystem s = random_fixed_cnf(m, 300, 2 * m * 300, seed);
      FixedCnfReport r = fixed_cnf_params(s, m, q(1));
      EXPECT_TRUE(r.degree_ok);
      EXPECT_LE(r.max_neighbors, std::size_t{1} << (m - 2));
      EXPECT_TRUE(r.holds);
      TrialStats st = run_trials(s, 20, seed, 1);
      EXPECT_EQ(st.verified, 20u);
    }
  }
}

TEST(FixedCnf, DegreeAuditFlagsDenseInstances) {
  // Five 3-clauses on the same three variables: 4 neighbors > 2.
  std::vector<Event> events;
  for (std::size_t c = 0; c < 5; ++c) events.push_back(Event::clause(c, {0, 1, 2}, {static_cast<Value>(c & 1), 0, 1}));
  ConstraintSystem s(detail::fair_bits(3), events);
  FixedCnfReport r = fixed_cnf_params(s, 3, q(1));
  EXPECT_FALSE(r.degree_ok);
  EXPECT_FALSE(r.holds);
  EXPECT_EQ(r.max_neighbors, 4u);
}

// 2^-x brackets: raising to the denominator must bracket 2^-numerator.
TEST(BetaM, PowerOfTwoBracketsAreSound) {
  for (Rational x : {q(3, 4), q(1, 4), q(5, 3), q(7, 8)}) {
    auto [lo, hi] = detail::pow2_neg_bounds(x);
    unsigned long den = x.get_den().get_ui(), num = x.get_num().get_ui();
    EXPECT_LE(pow(lo, den), dyadic(num));
    EXPECT_GE(pow(hi, den), dyadic(num));
    EXPECT_LT(hi - lo, dyadic(70));
  }
  EXPECT_EQ(detail::round_up(q(1, 3), 4), q(6, 16));
  EXPECT_EQ(detail::round_down(q(1, 3), 4), q(5, 16));
}

// Floating-point evaluation of alpha 2^-beta (1 - r^M/(1-r)), r =
// 2^-(beta-gamma), as an independent check of where the certified M lands.
double master_rhs(double gamma, double alpha, unsigned M) {
  double beta = (1 + gamma) / 2, r = std::pow(2.0, -(beta - gamma));
  return alpha * std::pow(2.0, -beta) * (1 - std::pow(r, M) / (1 - r));
}

TEST(BetaM, HalfAndPointNineNine) {
  BetaM bm = compute_beta_M(q(1, 2), q(99, 100));
  EXPECT_EQ(bm.beta, q(3, 4));
  EXPECT_EQ(bm.M, 22u);
  EXPECT_TRUE(bm.holds_at_M);
  EXPECT_TRUE(bm.fails_below);
  EXPECT_GE(bm.rhs_lower_at_M, q(1, 2));
  EXPECT_LT(bm.rhs_upper_below, q(1, 2));
  EXPECT_GT(master_rhs(0.5, 0.99, 22), 0.5);
  EXPECT_LT(master_rhs(0.5, 0.99, 21), 0.5);
  EXPECT_NEAR(to_double(bm.rhs_lower_at_M), master_rhs(0.5, 0.99, 22), 1e-12);
}

TEST(BetaMProperty, CertifiedMAgreesWithFloatingPoint) {
  for (auto [g, a] : std::vector<std::pair<Rational, Rational>>{
           {q(1, 2), q(9, 10)}, {q(1, 3), q(99, 100)}, {q(1, 4), q(95, 100)}, {q(2, 5), q(97, 100)}}) {
    BetaM bm = compute_beta_M(g, a);
    double gd = to_double(g), ad = to_double(a);
    EXPECT_GE(master_rhs(gd, ad, bm.M), 0.5 - 1e-12);
    if (bm.M > 1) {
      EXPECT_TRUE(bm.fails_below);
      EXPECT_LT(master_rhs(gd, ad, bm.M - 1), 0.5 + 1e-12);
    }
  }
}

TEST(BetaM, RejectsIncompatibleParameters) {
  EXPECT_THROW(compute_beta_M(q(9, 10), q(1, 2)), ContractViolation);
  EXPECT_THROW(compute_beta_M(q(0), q(1, 2)), StructuralError);
  EXPECT_THROW(compute_beta_M(q(1, 2), q(1)), StructuralError);
}

TEST(BetaM, DyadicZ) {
  EXPECT_EQ(dyadic_z(q(3, 4), 4), dyadic(3));
  EXPECT_EQ(dyadic_z(q(3, 4), 5), dyadic(4));  // ceil(15/4)
}

// Property: a trimmed event holds whenever the original does, and the
// variable index agrees with the event list.
TEST(TrimmedProperty, TrimmedEventsContainOriginals) {
  ChainCnfFamily base(6, 2, q(1, 8));
  TrimmedFamily trimmed(base, q(1, 3), q(3, 4));
  std::mt19937_64 rng(1);
  for (std::size_t j = 0; j < 30; ++j) {
    Event e = base.event(j), t = trimmed.event(j);
    EXPECT_EQ(t.vbl.size(), 4u);
    EXPECT_EQ(trimmed.z(j), dyadic(3));
    for (int trial = 0; trial < 20; ++trial) {
      std::map<std::size_t, Value> x;
      for (std::size_t v : e.vbl) x[v] = static_cast<Value>(rng() & 1);
      auto holds = [&](const Event& ev) {
        for (const Tuple& tup : ev.forbidden) {
          bool all = true;
          for (std::size_t k = 0; k < ev.vbl.size(); ++k) all = all && x[ev.vbl[k]] == tup[k];
          if (all) return true;
        }
        return false;
      };
      if (holds(e)) {
        EXPECT_TRUE(holds(t));
      }
    }
    for (std::size_t v : t.vbl) {
      auto users = trimmed.events_containing(v);
      EXPECT_TRUE(std::binary_search(users.begin(), users.end(), j));
    }
    for (std::size_t v : e.vbl) {
      bool kept = std::find(t.vbl.begin(), t.vbl.end(), v) != t.vbl.end();
      auto users = trimmed.events_containing(v);
      EXPECT_EQ(std::binary_search(users.begin(), users.end(), j), kept);
    }
  }
  EXPECT_EQ(trimmed.gamma_prime(q(1, 2)), q(3, 4));
}

TEST(ForbiddenFamily, RejectsShortAndTooManyStrings) {
  ForbiddenSubstringFamily f(runs_family(2, 12), q(1, 2), 22, q(3, 4));
  EXPECT_EQ(f.rejected().size(), 22u);
  EXPECT_TRUE(f.kept().empty());
  EXPECT_EQ(f.size(), 0u);
  // Length 4 allows 2^(4/2) = 4 strings; five is too many.
  EXPECT_THROW(ForbiddenSubstringFamily({"0000", "0001", "0010", "0011", "0100"}, q(1, 2), 4, q(3, 4)),
               StructuralError);
  EXPECT_NO_THROW(ForbiddenSubstringFamily({"0000", "0001", "0010", "0011"}, q(1, 2), 4, q(3, 4)));
  EXPECT_THROW(ForbiddenSubstringFamily({"01a"}, q(1, 2), 2, q(3, 4)), StructuralError);
}

// Brute force over the first events: index_of, event() and
// events_containing() describe the same family, and every (p, f) pair
// appears exactly once.
TEST(ForbiddenFamilyProperty, IndexingIsConsistent) {
  ForbiddenSubstringFamily f({"000", "111", "0101", "1010", "00100"}, q(3, 4), 3, q(7, 8));
  const std::size_t n = 400;
  std::set<std::pair<std::size_t, std::string>> seen;
  std::map<std::size_t, std::vector<std::size_t>> users;
  std::size_t last_diag = 0;
  for (std::size_t j = 0; j < n; ++j) {
    Event e = f.event(j);
    std::string s;
    for (Value v : e.forbidden.at(0)) s += v ? '1' : '0';
    std::size_t p = e.vbl.front();
    EXPECT_TRUE(seen.insert({p, s}).second);
    EXPECT_GE(p + s.size(), last_diag);  // diagonals never decrease
    last_diag = p + s.size();
    auto kept = f.kept();
    std::size_t r = 0;
    for (const auto& g : kept)
      if (g.size() == s.size() && g < s) ++r;
    EXPECT_EQ(f.index_of(p, s.size(), r), j);
    EXPECT_EQ(f.z(j), dyadic_z(q(7, 8), s.size()));
    for (std::size_t v : e.vbl) users[v].push_back(j);
  }
  for (std::size_t v = 0; v < 30; ++v) EXPECT_EQ(f.events_containing(v), users[v]) << v;
}

TEST(ForbiddenFamilyProperty, ClosedFormBallMatchesSearch) {
  ForbiddenSubstringFamily f({"000", "111", "0101", "1010", "00100"}, q(3, 4), 3, q(7, 8));
  for (std::size_t j = 0; j < 60; ++j)
    for (unsigned r = 0; r <= 3; ++r)
      EXPECT_EQ(f.ball_prefix(j, r, 1000000), f.InfiniteFamily::ball_prefix(j, r, 1000000)) << j << " " << r;
}

TEST(ForbiddenFamily, DegreeAudit) {
  ForbiddenSubstringFamily f(runs_family(22, 26), q(1, 2), 22, q(3, 4));
  // A variable lies in m windows of each length m, each holding 2 strings.
  EXPECT_TRUE(audit_degrees(f, 40, q(1, 2), [](std::size_t m) { return m; }).empty());
  EXPECT_TRUE(audit_degrees(f, 40, q(1, 2)).empty());  // 2m <= 2^(m/2) for m >= 22
  ForbiddenSubstringFamily dense({"0000", "0001", "0010", "0011"}, q(1, 2), 4, q(3, 4));
  auto v = audit_degrees(dense, 10, q(1, 2));
  EXPECT_FALSE(v.empty());  // 16 > 4 once a variable is in four windows
}

TEST(Scan, FindsFirstOccurrence) {
  std::vector<Value> bits{0, 1, 1, 1, 0, 0};
  auto hit = find_forbidden(bits, {"111", "00"}, 2);
  ASSERT_TRUE(hit);
  EXPECT_EQ(hit->pattern, "111");
  EXPECT_EQ(hit->position, 1u);
  EXPECT_FALSE(find_forbidden(bits, {"111", "00"}, 4));
  EXPECT_FALSE(find_forbidden(bits, {"0000000"}, 1));
}

TEST(Avoid, LongRunsAreAvoided) {
  AvoidOptions o;
  o.seed = 3;
  AvoidResult r = build_avoiding_sequence(runs_family(22, 30), q(1, 2), q(99, 100), 3000, o);
  EXPECT_TRUE(r.scan_ok);
  EXPECT_EQ(r.kept.size(), 18u);
  EXPECT_TRUE(r.condition_holds);
  EXPECT_EQ(r.bits.size(), 3000u);
  EXPECT_FALSE(find_forbidden(r.bits, runs_family(22, 30), 1));
}

TEST(Avoid, ConditionFailureAndExactRefusal) {
  AvoidOptions o;
  o.M_override = 4;
  EXPECT_THROW(build_avoiding_sequence(runs_family(4, 8), q(1, 2), q(99, 100), 50, o), ContractViolation);
  AvoidOptions exact;
  exact.mode = PrefixMode::exact;
  EXPECT_THROW(build_avoiding_sequence(runs_family(22, 24), q(1, 2), q(99, 100), 10, exact), BudgetExceeded);
}

}  // namespace
}  // namespace lll
