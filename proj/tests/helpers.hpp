#pragma once

// Small fixtures shared by the test binaries.

#include <random>
#include <vector>

#include "lll/model.hpp"
#include "lll/rational.hpp"
#include "lll/toy_corpus.hpp"

namespace lll::test {

inline Rational q(long num, long den = 1) { return make_rational(num, den); }

inline ConstraintSystem system_named(const std::string& name) {
  for (auto& toy : toy_corpus())
    if (toy.name == name) return toy.system;
  throw std::runtime_error("no toy system " + name);
}

/// Random small system over fair bits: each event picks 1..3 variables and
/// forbids one or two tuples. Deterministic in `seed`.
inline ConstraintSystem random_small_system(std::uint64_t seed, std::size_t num_vars, std::size_t num_events) {
  std::mt19937_64 rng(seed);
  std::vector<Event> events;
  for (std::size_t e = 0; e < num_events; ++e) {
    std::vector<std::size_t> pool(num_vars);
    for (std::size_t v = 0; v < num_vars; ++v) pool[v] = v;
    std::shuffle(pool.begin(), pool.end(), rng);
    std::size_t width = 1 + rng() % std::min<std::size_t>(3, num_vars);
    std::vector<std::size_t> vbl(pool.begin(), pool.begin() + width);
    std::sort(vbl.begin(), vbl.end());
    std::set<Tuple> tuples;
    std::size_t count = 1 + rng() % 2;
    while (tuples.size() < std::min<std::size_t>(count, std::size_t{1} << width)) {
      Tuple t;
      for (std::size_t i = 0; i < width; ++i) t.push_back(static_cast<Value>(rng() % 2));
      tuples.insert(t);
    }
    events.push_back(detail::forbid(e, vbl, {tuples.begin(), tuples.end()}));
  }
  return ConstraintSystem(detail::fair_bits(num_vars), std::move(events));
}

}  // namespace lll::test
