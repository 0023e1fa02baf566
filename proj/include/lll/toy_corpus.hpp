#pragma once

// Small systems (at most 3 events over at most 4 fair bits) with weights
// satisfying the local-lemma condition. Used by the self-test and by the
// exhaustive checks.

#include <string>
#include <vector>

#include "lll/model.hpp"

namespace lll {

struct ToySystem {
  std::string name;
  ConstraintSystem system;
  LLLParams params;
};

namespace detail {

inline std::vector<VariableSpec> fair_bits(std::size_t n) {
  std::vector<VariableSpec> out;
  for (std::size_t v = 0; v < n; ++v) out.push_back(VariableSpec::uniform_bit(v));
  return out;
}

inline Event forbid(std::size_t index, std::vector<std::size_t> vbl, std::vector<Tuple> tuples) {
  Event e;
  e.index = index;
  e.vbl = std::move(vbl);
  e.forbidden = std::move(tuples);
  return e;
}

}  // namespace detail

inline std::vector<ToySystem> toy_corpus() {
  using detail::fair_bits;
  using detail::forbid;
  const Rational half(1, 2), quarter(1, 4);
  std::vector<ToySystem> out;

  out.push_back({"single", ConstraintSystem(fair_bits(1), {forbid(0, {0}, {{1}})}), {{half}, 1}});

  out.push_back({"independent",
                 ConstraintSystem(fair_bits(2), {forbid(0, {0}, {{1}}), forbid(1, {1}, {{0}})}),
                 {{half, half}, 1}});

  out.push_back({"shared",
                 ConstraintSystem(fair_bits(3), {forbid(0, {0, 1}, {{1, 1}}), forbid(1, {1, 2}, {{0, 0}})}),
                 {{half, half}, 1}});

  out.push_back({"triangle",
                 ConstraintSystem(fair_bits(4), {forbid(0, {0, 1, 2}, {{1, 1, 1}}), forbid(1, {1, 2, 3}, {{0, 0, 0}}),
                                                 forbid(2, {0, 1, 3}, {{1, 0, 1}})}),
                 {{quarter, quarter, quarter}, Rational(9, 10)}});

  out.push_back({"two-tuple",
                 ConstraintSystem(fair_bits(4), {forbid(0, {0, 1, 2}, {{0, 0, 1}, {1, 1, 0}}),
                                                 forbid(1, {2, 3}, {{1, 1}})}),
                 {{half, half}, 1}});

  out.push_back({"dense",
                 ConstraintSystem(fair_bits(2), {forbid(0, {0, 1}, {{0, 0}, {0, 1}, {1, 1}})}),
                 {{Rational(3, 4)}, 1}});

  return out;
}

}  // namespace lll
