#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "lll/error.hpp"
#include "lll/rational.hpp"

namespace lll {

/// Turns fair coin flips into draws from a finite rational distribution.
///
/// The unit interval is cut into cumulative cells [c_v, c_{v+1}). Bits are
/// read as a binary expansion that narrows a dyadic interval, and value v is
/// emitted as soon as that interval fits inside v's cell. Because only whole
/// dyadic intervals are ever tested, enumerating all bit strings assigns
/// every value exactly its probability.
class Sampler {
 public:
  Sampler() = default;

  explicit Sampler(std::span<const Rational> distribution) {
    if (distribution.empty()) throw StructuralError("empty distribution");
    Rational total = 0;
    cumulative_.reserve(distribution.size() + 1);
    cumulative_.push_back(0);
    for (const Rational& p : distribution) {
      if (p < 0) throw StructuralError("negative probability");
      total += p;
      cumulative_.push_back(total);
    }
    if (total != 1) throw StructuralError("distribution does not sum to 1");

    // Fast path: every cut point is k / 2^D with D small enough for uint64.
    unsigned depth = 0;
    for (const Rational& c : cumulative_) {
      const BigInt& den = c.get_den();
      if (mpz_popcount(den.get_mpz_t()) != 1) return;
      depth = std::max<unsigned>(depth, mpz_sizeinbase(den.get_mpz_t(), 2) - 1);
    }
    if (depth > 62) return;
    depth_ = depth;
    dyadic_ = true;
    for (const Rational& c : cumulative_) {
      BigInt scaled = c.get_num() * (BigInt(1) << (depth - (mpz_sizeinbase(c.get_den_mpz_t(), 2) - 1)));
      units_.push_back(scaled.get_ui());
    }
  }

  std::size_t size() const noexcept { return cumulative_.size() - 1; }

  /// Exact probability of value v.
  Rational probability(std::size_t v) const { return cumulative_[v + 1] - cumulative_[v]; }

  /// `next_bit()` must return 0 or 1; it may throw (e.g. TapeExhausted).
  template <class NextBit>
  std::uint32_t sample(NextBit&& next_bit) const {
    if (dyadic_) return sample_dyadic(next_bit);
    return sample_general(next_bit);
  }

 private:
  template <class NextBit>
  std::uint32_t sample_dyadic(NextBit& next_bit) const {
    // Current interval is [a, a+1) * 2^(D-d) in units of 2^-D.
    std::uint64_t a = 0;
    unsigned d = 0;
    for (;;) {
      std::uint64_t lo = a << (depth_ - d);
      std::uint64_t hi = (a + 1) << (depth_ - d);
      auto it = std::upper_bound(units_.begin(), units_.end(), lo);
      std::size_t v = static_cast<std::size_t>(it - units_.begin()) - 1;
      if (hi <= units_[v + 1]) return static_cast<std::uint32_t>(v);
      a = (a << 1) | static_cast<std::uint64_t>(next_bit());
      ++d;
    }
  }

  template <class NextBit>
  std::uint32_t sample_general(NextBit& next_bit) const {
    BigInt a = 0;
    BigInt scale = 1;  // 2^d
    for (;;) {
      Rational lo(a, scale);
      lo.canonicalize();
      Rational hi(a + 1, scale);
      hi.canonicalize();
      auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), lo);
      std::size_t v = static_cast<std::size_t>(it - cumulative_.begin()) - 1;
      if (hi <= cumulative_[v + 1]) return static_cast<std::uint32_t>(v);
      a = a * 2 + next_bit();
      scale *= 2;
    }
  }

  std::vector<Rational> cumulative_;
  bool dyadic_ = false;
  unsigned depth_ = 0;
  std::vector<std::uint64_t> units_;
};

/// Two-valued sampler: 1 with probability p, 0 otherwise.
inline Sampler bernoulli(const Rational& p) {
  Rational dist[2] = {Rational(1 - p), p};
  return Sampler(dist);
}

/// Uniform over 0..n-1.
inline Sampler uniform(std::size_t n) {
  std::vector<Rational> dist(n, Rational(1, static_cast<unsigned long>(n)));
  for (auto& p : dist) p.canonicalize();
  return Sampler(dist);
}

}  // namespace lll
