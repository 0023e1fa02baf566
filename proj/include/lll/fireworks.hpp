#pragma once

// The fireworks game: pick k uniformly in 0..n-1, test k fireworks, take the
// next one. Used to beat a (possibly partial) computable bound f.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lll/error.hpp"
#include "lll/rational.hpp"
#include "lll/sampler.hpp"
#include "lll/tape.hpp"

namespace lll {

using Natural = std::uint64_t;

struct GameConfig {
  Natural n = 100;
  std::optional<Natural> seller_K;  // good fireworks before the bad one; empty = all good

  void validate() const {
    if (n < 1) throw StructuralError("n must be at least 1");
  }
};

enum class Outcome { win, lose };

struct GameResult {
  Outcome outcome = Outcome::win;
  Natural k = 0;
  Natural tests_made = 0;
  bool took_home = false;  // false when a bad firework showed up in testing
};

/// One play with a fixed k.
inline GameResult play_game_with_k(const GameConfig& config, Natural k) {
  config.validate();
  if (k >= config.n) throw StructuralError("k out of range");
  GameResult r;
  r.k = k;
  if (config.seller_K && *config.seller_K < k) {
    r.tests_made = *config.seller_K + 1;  // the bad one fails in testing
    return r;
  }
  r.tests_made = k;
  r.took_home = true;
  r.outcome = config.seller_K && *config.seller_K == k ? Outcome::lose : Outcome::win;
  return r;
}

inline GameResult play_game(const GameConfig& config, Tape& tape, std::uint64_t stream = 0) {
  config.validate();
  Natural k = tape.aux_value(stream, uniform(config.n));
  return play_game_with_k(config, k);
}

/// Pr[lose] for a fixed seller strategy, summed over all k.
inline Rational loss_probability_exact(const GameConfig& config) {
  config.validate();
  Natural losses = 0;
  for (Natural k = 0; k < config.n; ++k) losses += play_game_with_k(config, k).outcome == Outcome::lose;
  return ratio(BigInt(losses), BigInt(config.n));
}

/// 1 - max over seller strategies of Pr[lose]. Sweeping K in 0..2n covers
/// every distinct strategy: K >= n behaves like "all good".
inline Rational win_probability_exact(Natural n) {
  Rational worst = loss_probability_exact({n, std::nullopt});
  for (Natural K = 0; K <= 2 * n; ++K) {
    Rational p = loss_probability_exact({n, K});
    if (p > worst) worst = p;
  }
  return 1 - worst;
}

/// Take-time law of the step-by-step description: after t good tests, take
/// with probability 1/(n-t), otherwise test.
inline std::vector<Rational> sequential_take_distribution(Natural n) {
  if (n < 1) throw StructuralError("n must be at least 1");
  std::vector<Rational> out;
  Rational reach = 1;
  for (Natural t = 0; t < n; ++t) {
    Rational take(BigInt(1), BigInt(n - t));
    out.push_back(reach * take);
    reach *= 1 - take;
  }
  return out;
}

inline bool sequential_matches_uniform(Natural n) {
  auto d = sequential_take_distribution(n);
  Rational u(BigInt(1), BigInt(n));
  for (const auto& p : d)
    if (p != u) return false;
  return true;
}

/// What the seller sees: 'T' for every test and 'X' for the take (or 'F'
/// when a tested firework turned out bad).
inline std::string observable_trace(const GameConfig& config, Natural k) {
  GameResult r = play_game_with_k(config, k);
  std::string out(r.tests_made, 'T');
  if (r.took_home) out += 'X';
  else out.back() = 'F';
  return out;
}

// ------------------------------------------------------------ bounds

/// A budgeted evaluator: the value of f(i) if its computation stops within
/// `budget` steps. Once a value appears it stays the same for larger budgets.
class FnOracle {
 public:
  virtual ~FnOracle() = default;
  virtual std::optional<Natural> eval(Natural i, Natural budget) const = 0;
  virtual std::string name() const = 0;
};

class ConstantOracle : public FnOracle {
 public:
  explicit ConstantOracle(Natural c) : c_(c) {}
  std::optional<Natural> eval(Natural, Natural budget) const override {
    if (budget < 1) return std::nullopt;
    return c_;
  }
  std::string name() const override { return "constant " + std::to_string(c_); }

 private:
  Natural c_;
};

/// f(i) = i, taking i+1 steps.
class IdentityOracle : public FnOracle {
 public:
  std::optional<Natural> eval(Natural i, Natural budget) const override {
    if (budget < i + 1) return std::nullopt;
    return i;
  }
  std::string name() const override { return "identity"; }
};

/// Identity, except that the computation never stops on the given inputs.
class DivergeAtOracle : public FnOracle {
 public:
  explicit DivergeAtOracle(std::set<Natural> points) : points_(std::move(points)) {}
  std::optional<Natural> eval(Natural i, Natural budget) const override {
    if (points_.count(i)) return std::nullopt;
    return IdentityOracle().eval(i, budget);
  }
  std::string name() const override {
    std::string out = "diverge-at";
    for (Natural p : points_) out += " " + std::to_string(p);
    return out;
  }
  bool diverges(Natural i) const { return points_.count(i) > 0; }

 private:
  std::set<Natural> points_;
};

/// Parses "constant C", "identity" or "diverge-at P1,P2,...".
inline std::unique_ptr<FnOracle> make_builtin_oracle(const std::string& spec) {
  auto space = spec.find_first_of(" :=");
  std::string head = spec.substr(0, space);
  std::string rest = space == std::string::npos ? "" : spec.substr(space + 1);
  auto number = [&](const std::string& s) -> Natural {
    try {
      std::size_t used = 0;
      Natural v = std::stoull(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ParseError("bad number '" + s + "' in oracle spec", 0);
    }
  };
  if (head == "identity" && rest.empty()) return std::make_unique<IdentityOracle>();
  if (head == "constant") return std::make_unique<ConstantOracle>(number(rest));
  if (head == "diverge-at") {
    std::set<Natural> points;
    std::size_t start = 0;
    while (start <= rest.size() && !rest.empty()) {
      auto comma = rest.find(',', start);
      points.insert(number(rest.substr(start, comma - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    return std::make_unique<DivergeAtOracle>(std::move(points));
  }
  throw ParseError("unknown oracle '" + spec + "'", 0);
}

enum class BeatStatus {
  took_good,  // g(u) = f(u)+1 was set
  testing,    // still testing when the budget ran out; g is zeros so far
  taking,     // took a firework whose computation has not stopped
};

inline const char* to_string(BeatStatus s) {
  switch (s) {
    case BeatStatus::took_good: return "took_good";
    case BeatStatus::testing: return "testing";
    case BeatStatus::taking: return "taking";
  }
  return "?";
}

struct BeatResult {
  std::vector<Natural> g;  // g(0), g(1), ... as far as defined
  BeatStatus status = BeatStatus::testing;
  Natural k = 0;
  Natural tests_done = 0;
  std::optional<Natural> beaten_at;  // u with g(u) = f(u)+1
  Natural ticks = 0;
};

/// Runs the protocol for `tick_budget` ticks with a fixed k. Testing f(u)
/// writes one zero per tick until f(u) stops; the next firework is f at the
/// first unset index. Taking f(u) waits for it and sets g(u) = f(u)+1.
inline BeatResult beat_function_with_k(const FnOracle& f, Natural k, Natural tick_budget) {
  BeatResult r;
  r.k = k;
  while (r.ticks < tick_budget) {
    const Natural u = r.g.size();
    if (r.tests_done < k) {
      Natural t = 0;
      bool stopped = false;
      while (r.ticks < tick_budget) {
        ++r.ticks;
        ++t;
        r.g.push_back(0);
        if (f.eval(u, t)) {
          stopped = true;
          break;
        }
      }
      if (!stopped) return r;  // testing
      ++r.tests_done;
      continue;
    }
    r.status = BeatStatus::taking;
    for (Natural t = 1; r.ticks < tick_budget; ++t) {
      ++r.ticks;
      if (auto v = f.eval(u, t)) {
        r.g.push_back(*v + 1);
        r.beaten_at = u;
        r.status = BeatStatus::took_good;
        return r;
      }
    }
    return r;
  }
  return r;
}

/// n for a rational epsilon: ceil(1/epsilon).
inline Natural n_for_epsilon(const Rational& epsilon) {
  if (epsilon <= 0 || epsilon > 1) throw StructuralError("epsilon must lie in (0,1]");
  BigInt n = lll::ceil(1 / epsilon);
  if (!n.fits_ulong_p()) throw BudgetExceeded("epsilon too small");
  return n.get_ui();
}

inline BeatResult beat_function(const FnOracle& f, const Rational& epsilon, Tape& tape, Natural tick_budget,
                                std::uint64_t stream = 0) {
  Natural n = n_for_epsilon(epsilon);
  return beat_function_with_k(f, tape.aux_value(stream, uniform(n)), tick_budget);
}

/// Success of one trace: a value above f was set, or testing is stuck on a
/// computation that never stops (f is then not total and any g is fine).
inline bool beat_succeeded(const BeatResult& r) { return r.status != BeatStatus::taking; }

/// Exact Pr[success] over the n equiprobable values of k.
inline Rational beat_success_probability(const FnOracle& f, Natural n, Natural tick_budget) {
  if (n < 1) throw StructuralError("n must be at least 1");
  Natural ok = 0;
  for (Natural k = 0; k < n; ++k) ok += beat_succeeded(beat_function_with_k(f, k, tick_budget));
  return ratio(BigInt(ok), BigInt(n));
}

inline Natural cantor_pair(Natural a, Natural b) { return (a + b) * (a + b + 1) / 2 + b; }

inline std::pair<Natural, Natural> cantor_unpair(Natural z) {
  Natural w = 0;
  while ((w + 1) * (w + 2) / 2 <= z) ++w;
  Natural b = z - w * (w + 1) / 2;
  return {w - b, b};
}

struct BeatManyResult {
  std::vector<BeatResult> rows;  // rows[i-1] is row i
  std::vector<Natural> n;        // n_i = ceil(2^i / epsilon)
  std::map<Natural, Natural> g;  // defined cells, g(pair(i, x)) = row i's g(x)
  Natural rounds = 0;

  /// Unset cells read as 0.
  Natural value(Natural index) const {
    auto it = g.find(index);
    return it == g.end() ? 0 : it->second;
  }
};

/// Row i (from 1) beats oracle i with error epsilon 2^-i. Rows are advanced
/// round-robin with budgets 1, 2, 4, ... until `tick_budget` per row.
inline BeatManyResult beat_many(const std::vector<const FnOracle*>& oracles, const Rational& epsilon, Tape& tape,
                                Natural tick_budget) {
  BeatManyResult out;
  std::vector<Natural> ks;
  for (std::size_t i = 1; i <= oracles.size(); ++i) {
    if (i >= 62) throw BudgetExceeded("too many rows");
    out.n.push_back(n_for_epsilon(epsilon / Rational(BigInt(1) << static_cast<mp_bitcnt_t>(i))));
    ks.push_back(tape.aux_value(i, uniform(out.n.back())));
  }
  out.rows.resize(oracles.size());
  for (Natural budget = 1;; budget = std::min(2 * budget, tick_budget)) {
    ++out.rounds;
    for (std::size_t i = 0; i < oracles.size(); ++i) out.rows[i] = beat_function_with_k(*oracles[i], ks[i], budget);
    if (budget >= tick_budget) break;
  }
  for (std::size_t i = 0; i < out.rows.size(); ++i)
    for (Natural x = 0; x < out.rows[i].g.size(); ++x) out.g[cantor_pair(i + 1, x)] = out.rows[i].g[x];
  return out;
}

/// '1' then g(k) zeros, for each k.
inline std::vector<bool> g_to_bits(const std::vector<Natural>& g) {
  std::vector<bool> bits;
  for (Natural v : g) {
    bits.push_back(true);
    bits.insert(bits.end(), v, false);
  }
  return bits;
}

/// Number of zeros after each 1 (the inverse of g_to_bits).
inline std::vector<Natural> bits_to_g(const std::vector<bool>& bits) {
  std::vector<Natural> g;
  for (bool b : bits) {
    if (b) g.push_back(0);
    else if (g.empty()) throw StructuralError("sequence must start with 1");
    else ++g.back();
  }
  return g;
}

/// Some gap in the bit form exceeds the oracle's value at that index.
inline bool bits_exceed_oracle(const std::vector<bool>& bits, const FnOracle& f, Natural budget) {
  auto g = bits_to_g(bits);
  for (Natural k = 0; k < g.size(); ++k)
    if (auto v = f.eval(k, budget); v && g[k] > *v) return true;
  return false;
}

}  // namespace lll
