#pragma once

// Applications: fixed-size CNFs, variable-size CNFs with geometric tails,
// trimming, and binary sequences avoiding long forbidden factors.

#include <algorithm>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "lll/engine.hpp"
#include "lll/error.hpp"
#include "lll/family.hpp"
#include "lll/layerwise.hpp"
#include "lll/model.hpp"
#include "lll/rational.hpp"

namespace lll {

// ---------------------------------------------------------------- fixed m

struct FixedCnfReport {
  unsigned m = 0;
  Rational alpha;
  Rational z;    // 2^-(m-2)
  Rational lhs;  // 2^-m
  Rational rhs;  // alpha * z * (1-z)^(2^(m-2))
  bool holds = false;
  std::size_t max_neighbors = 0;  // excluding the clause itself
  bool degree_ok = true;
};

/// The inequality for clauses of size m with at most 2^(m-2) neighbors.
inline FixedCnfReport fixed_cnf_inequality(unsigned m, const Rational& alpha) {
  if (m < 2) throw StructuralError("clause size must be at least 2");
  if (m > 40) throw BudgetExceeded("clause size too large for exact evaluation");
  FixedCnfReport r;
  r.m = m;
  r.alpha = alpha;
  r.z = dyadic(m - 2);
  r.lhs = dyadic(m);
  r.rhs = alpha * r.z * pow(1 - r.z, 1ul << (m - 2));
  r.holds = r.lhs <= r.rhs;
  return r;
}

/// Same, plus a degree audit of a concrete m-CNF.
inline FixedCnfReport fixed_cnf_params(const ConstraintSystem& system, unsigned m, const Rational& alpha) {
  FixedCnfReport r = fixed_cnf_inequality(m, alpha);
  const std::size_t cap = std::size_t{1} << (m - 2);
  for (std::size_t e = 0; e < system.num_events(); ++e) {
    if (system.event(e).vbl.size() != m) throw StructuralError("clause " + std::to_string(e) + " does not have size m");
    std::size_t d = system.neighbors(e).size() - 1;
    r.max_neighbors = std::max(r.max_neighbors, d);
    if (d > cap) r.degree_ok = false;
  }
  r.holds = r.holds && r.degree_ok;
  return r;
}

/// Random m-CNF on `num_vars` variables in which every clause has at most
/// 2^(m-2) neighbors. Clauses that would break the bound are redrawn.
inline ConstraintSystem random_fixed_cnf(unsigned m, std::size_t num_clauses, std::size_t num_vars, std::uint64_t seed,
                                         std::size_t max_tries = 1000) {
  if (m < 2 || m > 20) throw StructuralError("clause size must lie in 2..20");
  if (num_vars < m) throw StructuralError("fewer variables than the clause size");
  const std::size_t cap = std::size_t{1} << (m - 2);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, num_vars - 1);
  std::vector<std::vector<std::size_t>> var_clauses(num_vars);
  std::vector<std::set<std::size_t>> nbrs;
  std::vector<Event> events;
  while (events.size() < num_clauses) {
    bool placed = false;
    for (std::size_t attempt = 0; attempt < max_tries && !placed; ++attempt) {
      std::set<std::size_t> vars;
      while (vars.size() < m) vars.insert(pick(rng));
      std::set<std::size_t> touched;
      for (std::size_t v : vars) touched.insert(var_clauses[v].begin(), var_clauses[v].end());
      if (touched.size() > cap) continue;
      if (std::any_of(touched.begin(), touched.end(), [&](std::size_t c) { return nbrs[c].size() + 1 > cap; })) continue;
      const std::size_t id = events.size();
      for (std::size_t c : touched) nbrs[c].insert(id);
      nbrs.push_back(touched);
      std::vector<std::size_t> vbl(vars.begin(), vars.end());
      Tuple falsifying(m);
      for (auto& b : falsifying) b = static_cast<Value>(rng() & 1u);
      for (std::size_t v : vbl) var_clauses[v].push_back(id);
      events.push_back(Event::clause(id, std::move(vbl), std::move(falsifying)));
      placed = true;
    }
    if (!placed) throw BudgetExceeded("could not place clause " + std::to_string(events.size()) + " within the degree bound");
  }
  std::vector<VariableSpec> vars;
  for (std::size_t v = 0; v < num_vars; ++v) vars.push_back(VariableSpec::uniform_bit(v));
  return ConstraintSystem(std::move(vars), std::move(events));
}

/// Infinite m-CNF: clause j covers variables j*stride .. j*stride+m-1, with a
/// sign pattern hashed from j.
class ChainCnfFamily : public InfiniteFamily {
 public:
  ChainCnfFamily(unsigned m, std::size_t stride, Rational z) : m_(m), stride_(stride), z_(std::move(z)) {
    if (m_ < 1 || m_ > 32) throw StructuralError("clause size must lie in 1..32");
    if (stride_ == 0) throw StructuralError("stride must be positive");
    if (z_ <= 0 || z_ >= 1) throw StructuralError("z must lie in (0,1)");
  }

  Event event(std::size_t j) const override {
    std::vector<std::size_t> vbl(m_);
    for (unsigned i = 0; i < m_; ++i) vbl[i] = j * stride_ + i;
    std::uint64_t h = detail::splitmix64(j);
    Tuple falsifying(m_);
    for (unsigned i = 0; i < m_; ++i) falsifying[i] = static_cast<Value>((h >> i) & 1u);
    return Event::clause(j, std::move(vbl), std::move(falsifying));
  }

  std::vector<std::size_t> events_containing(std::size_t v) const override {
    std::size_t lo = v + 1 >= m_ ? (v + 1 - m_ + stride_ - 1) / stride_ : 0;
    std::vector<std::size_t> out;
    for (std::size_t j = lo; j <= v / stride_; ++j) out.push_back(j);
    return out;
  }

  Rational z(std::size_t) const override { return z_; }

  std::size_t ball_prefix(std::size_t index, unsigned radius, std::size_t) const override {
    return index + static_cast<std::size_t>(radius) * ((m_ - 1) / stride_) + 1;
  }

 private:
  unsigned m_;
  std::size_t stride_;
  Rational z_;
};

// ------------------------------------------------------- beta and M

namespace detail {

/// Bounds lo <= 2^(-x) <= hi for rational x >= 0, with hi - lo <= 2^-bits.
inline std::pair<Rational, Rational> pow2_neg_bounds(const Rational& x, unsigned bits = 80) {
  if (x < 0) throw StructuralError("exponent must be non-negative");
  const BigInt p = x.get_num(), q = x.get_den();
  if (!p.fits_ulong_p() || !q.fits_ulong_p()) throw BudgetExceeded("exponent too large");
  // y = 2^(-p/q) is the root of y^q = 2^-p in (0, 1].
  const Rational target = dyadic(p.get_ui());
  const unsigned long qq = q.get_ui();
  Rational lo = 0, hi = 1;
  for (unsigned i = 0; i < bits; ++i) {
    Rational mid = (lo + hi) / 2;
    if (lll::pow(mid, qq) <= target) lo = mid;
    else hi = mid;
  }
  return {lo, hi};
}

/// Rounds up to a multiple of 2^-bits.
inline Rational round_up(const Rational& x, unsigned bits = 128) {
  BigInt scale = BigInt(1) << bits;
  BigInt n = lll::ceil(x * scale);
  Rational out(n, scale);
  out.canonicalize();
  return out;
}

inline Rational round_down(const Rational& x, unsigned bits = 128) {
  BigInt scale = BigInt(1) << bits;
  BigInt n = lll::floor(x * scale);
  Rational out(n, scale);
  out.canonicalize();
  return out;
}

}  // namespace detail

struct BetaM {
  Rational gamma, alpha, beta;
  unsigned M = 0;
  Rational rhs_lower_at_M, rhs_upper_at_M;          // bounds on the right side at M
  Rational rhs_lower_below, rhs_upper_below;        // same at M-1 (M > 1)
  bool holds_at_M = false;                          // lower bound >= 1/2
  bool fails_below = false;                         // M == 1, or upper bound at M-1 < 1/2
};

/// Bounds on alpha * 2^-beta * (1 - sum_{m >= M} 2^((gamma-beta) m)).
inline std::pair<Rational, Rational> master_rhs_bounds(const Rational& gamma, const Rational& alpha, const Rational& beta,
                                                       unsigned M) {
  auto [b_lo, b_hi] = detail::pow2_neg_bounds(beta);
  auto [r_lo, r_hi] = detail::pow2_neg_bounds(beta - gamma);
  if (r_hi >= 1) throw BudgetExceeded("beta - gamma too small to bound the tail");
  // Tail r^M / (1 - r) is increasing in r.
  Rational pw_hi = 1, pw_lo = 1;
  for (unsigned i = 0; i < M; ++i) {
    pw_hi = detail::round_up(pw_hi * r_hi);
    pw_lo = detail::round_down(pw_lo * r_lo);
  }
  Rational tail_hi = pw_hi / (1 - r_hi), tail_lo = pw_lo / (1 - r_lo);
  Rational lo = alpha * b_lo * (1 - tail_hi);
  Rational hi = alpha * b_hi * (1 - tail_lo);
  return {lo, hi};
}

/// beta = (1+gamma)/2 and the smallest M at which the master inequality
/// 1/2 <= alpha 2^-beta (1 - tail(M)) is certified.
inline BetaM compute_beta_M(const Rational& gamma, const Rational& alpha, unsigned max_M = 100000) {
  if (gamma <= 0 || gamma >= 1) throw StructuralError("gamma must lie in (0,1)");
  if (alpha <= 0 || alpha >= 1) throw StructuralError("alpha must lie in (0,1)");
  BetaM out;
  out.gamma = gamma;
  out.alpha = alpha;
  out.beta = (1 + gamma) / 2;
  auto [b_lo, b_hi] = detail::pow2_neg_bounds(out.beta);
  if (alpha * b_hi <= Rational(1, 2)) throw ContractViolation("alpha/gamma incompatible: alpha 2^-beta <= 1/2");
  unsigned M = 1;
  for (;; ++M) {
    if (M > max_M) throw BudgetExceeded("no certifiable M up to " + std::to_string(max_M));
    auto [lo, hi] = master_rhs_bounds(gamma, alpha, out.beta, M);
    if (lo >= Rational(1, 2)) {
      out.rhs_lower_at_M = lo;
      out.rhs_upper_at_M = hi;
      break;
    }
  }
  out.M = M;
  out.holds_at_M = true;
  if (M == 1) {
    out.fails_below = true;
  } else {
    auto [lo, hi] = master_rhs_bounds(gamma, alpha, out.beta, M - 1);
    out.rhs_lower_below = lo;
    out.rhs_upper_below = hi;
    out.fails_below = hi < Rational(1, 2);
  }
  return out;
}

/// z for a clause of size s: 2^-ceil(beta s), a rational stand-in for 2^-(beta s).
inline Rational dyadic_z(const Rational& beta, std::size_t s) {
  BigInt e = lll::ceil(beta * Rational(BigInt(s)));
  return dyadic(e.get_ui());
}

// ------------------------------------------------------- trimming

/// Each event loses the ceil(rho s) lowest-index variables of its vbl; the
/// forbidden set is projected onto what remains, so the trimmed event
/// contains the original one.
class TrimmedFamily : public InfiniteFamily {
 public:
  TrimmedFamily(const InfiniteFamily& base, Rational rho, Rational beta)
      : base_(&base), rho_(std::move(rho)), beta_(std::move(beta)) {
    if (rho_ <= 0 || rho_ >= 1) throw StructuralError("rho must lie in (0,1)");
  }

  std::size_t dropped(std::size_t s) const { return lll::ceil(rho_ * Rational(BigInt(s))).get_ui(); }

  Event event(std::size_t j) const override {
    Event e = base_->event(j);
    std::size_t cut = std::min(dropped(e.vbl.size()), e.vbl.size());
    Event out;
    out.index = j;
    out.vbl.assign(e.vbl.begin() + static_cast<std::ptrdiff_t>(cut), e.vbl.end());
    std::set<Tuple> projected;
    for (const Tuple& t : e.forbidden) projected.insert(Tuple(t.begin() + static_cast<std::ptrdiff_t>(cut), t.end()));
    out.forbidden.assign(projected.begin(), projected.end());
    return out;
  }

  std::vector<std::size_t> events_containing(std::size_t v) const override {
    std::vector<std::size_t> out;
    for (std::size_t j : base_->events_containing(v)) {
      Event e = base_->event(j);
      auto pos = static_cast<std::size_t>(std::lower_bound(e.vbl.begin(), e.vbl.end(), v) - e.vbl.begin());
      if (pos >= dropped(e.vbl.size())) out.push_back(j);
    }
    return out;
  }

  VariableSpec variable(std::size_t v) const override { return base_->variable(v); }
  Rational z(std::size_t j) const override { return dyadic_z(beta_, event(j).vbl.size()); }
  std::optional<std::size_t> size() const override { return base_->size(); }

  /// gamma / (1 - rho): exponent for per-size counts after trimming.
  Rational gamma_prime(const Rational& gamma) const { return gamma / (1 - rho_); }

 private:
  const InfiniteFamily* base_;
  Rational rho_;
  Rational beta_;
};

// ------------------------------------------------------- degree audit

struct DegreeViolation {
  std::size_t var = 0;
  std::size_t size = 0;
  std::size_t count = 0;
};

namespace detail {

/// count <= factor * 2^(gamma m), decided exactly.
inline bool within_power_bound(std::size_t count, std::size_t factor, const Rational& gamma, std::size_t m) {
  const unsigned long p = gamma.get_num().get_ui(), q = gamma.get_den().get_ui();
  BigInt lhs, rhs, f;
  mpz_ui_pow_ui(lhs.get_mpz_t(), count, q);
  mpz_ui_pow_ui(f.get_mpz_t(), factor, q);
  rhs = f << static_cast<mp_bitcnt_t>(p * m);
  return lhs <= rhs;
}

}  // namespace detail

/// Counts, for variables 0..num_vars-1 and each size class, the events of
/// that size containing the variable, and checks count <= mult(m) 2^(gamma m).
template <class Multiplier>
std::vector<DegreeViolation> audit_degrees(const InfiniteFamily& family, std::size_t num_vars, const Rational& gamma,
                                           Multiplier&& mult) {
  if (gamma <= 0) throw StructuralError("gamma must be positive");
  std::vector<DegreeViolation> out;
  for (std::size_t v = 0; v < num_vars; ++v) {
    std::map<std::size_t, std::size_t> by_size;
    for (std::size_t j : family.events_containing(v)) ++by_size[family.event(j).vbl.size()];
    for (auto [m, count] : by_size)
      if (!detail::within_power_bound(count, mult(m), gamma, m)) out.push_back({v, m, count});
  }
  return out;
}

inline std::vector<DegreeViolation> audit_degrees(const InfiniteFamily& family, std::size_t num_vars,
                                                  const Rational& gamma) {
  return audit_degrees(family, num_vars, gamma, [](std::size_t) { return std::size_t{1}; });
}

// ------------------------------------------------------- forbidden factors

/// Clauses "the factor at positions p..p+|f|-1 is not f", for every kept f
/// and every p >= 0. Event order: by |f|+p, then p, then f.
class ForbiddenSubstringFamily : public InfiniteFamily {
 public:
  ForbiddenSubstringFamily(std::vector<std::string> F, Rational gamma, unsigned M, Rational beta)
      : gamma_(std::move(gamma)), beta_(std::move(beta)), M_(M) {
    if (gamma_ <= 0 || gamma_ >= 1) throw StructuralError("gamma must lie in (0,1)");
    std::set<std::string> unique;
    for (auto& f : F) {
      if (f.empty()) throw StructuralError("empty forbidden string");
      for (char c : f)
        if (c != '0' && c != '1') throw StructuralError("forbidden string '" + f + "' is not binary");
      if (f.size() < M_) {
        rejected_.push_back(f);
        continue;
      }
      unique.insert(f);
    }
    for (const auto& f : unique) by_length_[f.size()].push_back(f);  // std::set order is lexicographic
    for (const auto& [len, list] : by_length_)
      if (!detail::within_power_bound(list.size(), 1, gamma_, len))
        throw StructuralError("more than 2^(gamma m) forbidden strings of length " + std::to_string(len));
    for (const auto& [len, list] : by_length_) z_by_length_[len] = dyadic_z(beta_, len);
    if (!by_length_.empty()) {
      min_len_ = by_length_.begin()->first;
      max_len_ = by_length_.rbegin()->first;
    }
  }

  const std::vector<std::string>& rejected() const noexcept { return rejected_; }
  std::vector<std::string> kept() const {
    std::vector<std::string> out;
    for (const auto& [len, list] : by_length_) out.insert(out.end(), list.begin(), list.end());
    return out;
  }
  unsigned M() const noexcept { return M_; }
  const Rational& beta() const noexcept { return beta_; }

  std::optional<std::size_t> size() const override {
    if (by_length_.empty()) return 0;
    return std::nullopt;
  }

  Event event(std::size_t j) const override {
    auto [p, f] = locate(j);
    return make_event(j, p, *f);
  }

  std::vector<std::size_t> events_containing(std::size_t v) const override {
    std::vector<std::size_t> out;
    for (const auto& [len, list] : by_length_) {
      std::size_t p0 = v + 1 >= len ? v + 1 - len : 0;
      for (std::size_t p = p0; p <= v; ++p)
        for (std::size_t r = 0; r < list.size(); ++r) out.push_back(index_of(p, len, r));
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  Rational z(std::size_t j) const override { return z_by_length_.at(locate(j).second->size()); }

 private:
  /// Start position and string of event j.
  std::pair<std::size_t, const std::string*> locate(std::size_t j) const {
    if (by_length_.empty()) throw StructuralError("family has no events");
    // Find the diagonal D holding index j.
    std::size_t lo = min_len_, hi = min_len_ + j + 1;  // start(hi) > j
    while (hi - lo > 1) {
      std::size_t mid = lo + (hi - lo) / 2;
      (start(mid) <= j ? lo : hi) = mid;
    }
    const std::size_t D = lo;
    std::size_t offset = j - start(D);
    // Within D: p ascending, i.e. lengths descending.
    for (auto it = by_length_.rbegin(); it != by_length_.rend(); ++it) {
      const auto& [len, list] = *it;
      if (len > D) continue;
      if (offset < list.size()) return {D - len, &list[offset]};
      offset -= list.size();
    }
    throw StructuralError("internal: diagonal index out of range");
  }

 public:
  /// The radius-r ball is every event meeting the interval covered at
  /// radius r-1, whose right end grows by (max length - 1) per step. The
  /// largest index in it is the last string of maximal length starting at
  /// that right end.
  std::size_t ball_prefix(std::size_t index, unsigned radius, std::size_t) const override {
    if (radius == 0) return index + 1;
    Event e = event(index);
    std::size_t right = e.vbl.back() + static_cast<std::size_t>(radius - 1) * (max_len_ - 1);
    std::size_t top = index_of(right, max_len_, by_length_.at(max_len_).size() - 1);
    return std::max(top, index) + 1;
  }

  /// Index of the event for the r-th string (lex order) of length len at p.
  std::size_t index_of(std::size_t p, std::size_t len, std::size_t r) const {
    const std::size_t D = p + len;
    std::size_t idx = start(D);
    for (auto it = by_length_.upper_bound(len); it != by_length_.end(); ++it)
      if (it->first <= D) idx += it->second.size();
    return idx + r;
  }

 private:
  /// Number of events on diagonals below D.
  std::size_t start(std::size_t D) const {
    // Diagonal D' holds sum_{len <= D'} n_len events.
    std::size_t total = 0;
    for (const auto& [len, list] : by_length_)
      if (len < D) total += (D - len) * list.size();
    return total;
  }

  Event make_event(std::size_t j, std::size_t p, const std::string& f) const {
    std::vector<std::size_t> vbl(f.size());
    Tuple t(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
      vbl[i] = p + i;
      t[i] = f[i] == '1';
    }
    Event e;
    e.index = j;
    e.vbl = std::move(vbl);
    e.forbidden = {std::move(t)};
    return e;
  }

  Rational gamma_, beta_;
  unsigned M_;
  std::map<std::size_t, std::vector<std::string>> by_length_;
  std::map<std::size_t, Rational> z_by_length_;
  std::vector<std::string> rejected_;
  std::size_t min_len_ = 0, max_len_ = 0;
};

struct ScanHit {
  std::size_t position = 0;
  std::string pattern;
};

/// Direct search for any f in F with |f| >= min_len occurring in bits.
inline std::optional<ScanHit> find_forbidden(const std::vector<Value>& bits, const std::vector<std::string>& F,
                                             std::size_t min_len) {
  for (const auto& f : F) {
    if (f.size() < min_len || f.size() > bits.size()) continue;
    for (std::size_t p = 0; p + f.size() <= bits.size(); ++p) {
      bool match = true;
      for (std::size_t i = 0; i < f.size() && match; ++i) match = (bits[p + i] ? '1' : '0') == f[i];
      if (match) return ScanHit{p, f};
    }
  }
  return std::nullopt;
}

/// {0^m, 1^m : lo <= m <= hi}
inline std::vector<std::string> runs_family(std::size_t lo, std::size_t hi) {
  std::vector<std::string> out;
  for (std::size_t m = lo; m <= hi; ++m) {
    out.push_back(std::string(m, '0'));
    out.push_back(std::string(m, '1'));
  }
  return out;
}

enum class PrefixMode { exact, empirical };

struct AvoidOptions {
  PrefixMode mode = PrefixMode::empirical;
  std::uint64_t seed = 1;
  std::size_t trials = 1;
  std::optional<unsigned> M_override;
  unsigned guard = kDefaultBitGuard;
};

struct AvoidResult {
  std::vector<Value> bits;
  BetaM beta_M;
  unsigned M = 0;  // the one actually used
  std::vector<std::string> kept, rejected;
  std::size_t events_used = 0;
  bool condition_holds = false;
  bool scan_ok = false;
  PrefixResult prefix;
};

/// A length-L binary prefix containing no f in F with |f| >= M.
inline AvoidResult build_avoiding_sequence(const std::vector<std::string>& F, const Rational& gamma,
                                           const Rational& alpha, std::size_t L, const AvoidOptions& options = {}) {
  AvoidResult res;
  res.beta_M = compute_beta_M(gamma, alpha);
  res.M = options.M_override.value_or(res.beta_M.M);
  ForbiddenSubstringFamily family(F, gamma, res.M, res.beta_M.beta);
  res.kept = family.kept();
  res.rejected = family.rejected();

  std::size_t k = 0;
  for (std::size_t v = 0; v < L; ++v)
    for (std::size_t j : family.events_containing(v)) k = std::max(k, j + 1);
  // Shifting an event right by one position shifts its whole neighborhood,
  // so events starting at p >= max length repeat the shapes of earlier ones
  // (and those near 0 only have fewer neighbors). Checking the diagonals up
  // to twice the longest string covers every shape.
  std::size_t k_check = k;
  if (!res.kept.empty()) {
    std::size_t longest = 0;
    for (const auto& f : res.kept) longest = std::max(longest, f.size());
    k_check = std::min(k, family.index_of(longest, longest, 0));
  }
  res.condition_holds = k == 0 || check_family_prefix(family, k_check, alpha).all_hold;
  if (!res.condition_holds) throw ContractViolation("local lemma condition fails on the covering prefix");

  if (options.mode == PrefixMode::exact) {
    ConstraintSystem system = materialize(family, k);
    std::vector<Rational> z;
    for (std::size_t j = 0; j < k; ++j) z.push_back(family.z(j));
    if (system.num_variables() < L) {
      std::vector<VariableSpec> vars = system.variables();
      for (std::size_t v = vars.size(); v < L; ++v) vars.push_back(VariableSpec::uniform_bit(v));
      system = ConstraintSystem(std::move(vars), system.events());
    }
    res.prefix = compute_assignment_prefix_exact(system, LLLParams{z, alpha}, L, options.guard);
  } else {
    res.prefix = compute_assignment_prefix_empirical(family, alpha, L, options.trials, options.seed);
  }
  res.bits = res.prefix.values;
  res.events_used = res.prefix.events_used;
  if (auto hit = find_forbidden(res.bits, res.kept, res.M))
    throw Error("internal: produced prefix contains '" + hit->pattern + "' at " + std::to_string(hit->position));
  res.scan_ok = true;
  return res;
}

}  // namespace lll
