#pragma once

// Tables of pre-drawn random values. Each variable i owns a stream
// x_i^0, x_i^1, ...; a draw always takes the first unused entry.
//
// Seeded tapes derive the bits of x_i^j from a counter-based hash of
// (seed, i, j), so the order in which variables are drawn never changes
// any variable's own stream. Explicit tapes read one finite bit string in
// consumption order and throw TapeExhausted when it runs out.

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "lll/error.hpp"
#include "lll/rational.hpp"
#include "lll/sampler.hpp"

namespace lll {

using BitString = std::vector<bool>;

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// 64 pseudo-random bits for one (seed, channel, stream, draw, block) key.
inline std::uint64_t counter_block(std::uint64_t seed, std::uint64_t channel, std::uint64_t stream,
                                   std::uint64_t draw, std::uint64_t block) {
  std::uint64_t h = splitmix64(seed ^ 0x6a09e667f3bcc908ULL);
  h = splitmix64(h ^ channel);
  h = splitmix64(h ^ stream);
  h = splitmix64(h ^ draw);
  return splitmix64(h ^ block);
}

}  // namespace detail

/// Independent auxiliary streams (Galton-Watson spawning, fireworks draws)
/// live on a separate channel from the variable streams.
enum class Channel : std::uint64_t { variable = 0, auxiliary = 1 };

class Tape {
 public:
  static Tape seeded(std::uint64_t seed) {
    Tape t;
    t.explicit_ = false;
    t.seed_ = seed;
    return t;
  }

  static Tape from_bits(BitString bits) {
    Tape t;
    t.explicit_ = true;
    t.bits_ = std::move(bits);
    return t;
  }

  bool is_explicit() const noexcept { return explicit_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const BitString& bits() const noexcept { return bits_; }

  /// Total bits consumed so far.
  std::size_t bit_cursor() const noexcept { return cursor_; }

  /// Number of values drawn so far for variable `var`; the next draw uses
  /// position consumed(var).
  std::uint64_t consumed(std::size_t var) const noexcept {
    return var < consumed_.size() ? consumed_[var] : 0;
  }

  /// Draws x_var^{consumed(var)} and advances that variable's counter.
  std::uint32_t fresh_value(std::size_t var, const Sampler& sampler) {
    if (var >= consumed_.size()) consumed_.resize(var + 1, 0);
    std::uint64_t draw = consumed_[var];
    std::uint32_t v = sample(Channel::variable, var, draw, sampler);
    ++consumed_[var];
    return v;
  }

  /// Draw from an auxiliary stream; same rules as fresh_value.
  std::uint32_t aux_value(std::uint64_t stream, const Sampler& sampler) {
    std::uint64_t& count = aux_consumed_[stream];
    std::uint32_t v = sample(Channel::auxiliary, stream, count, sampler);
    ++count;
    return v;
  }

 private:
  Tape() = default;

  std::uint32_t sample(Channel channel, std::uint64_t stream, std::uint64_t draw, const Sampler& sampler) {
    if (explicit_) {
      return sampler.sample([this]() -> unsigned {
        if (cursor_ >= bits_.size()) throw TapeExhausted();
        return bits_[cursor_++] ? 1u : 0u;
      });
    }
    std::uint64_t block_index = 0;
    std::uint64_t block = 0;
    unsigned used = 64;
    return sampler.sample([&]() -> unsigned {
      if (used == 64) {
        block = detail::counter_block(seed_, static_cast<std::uint64_t>(channel), stream, draw, block_index++);
        used = 0;
      }
      ++cursor_;
      return static_cast<unsigned>((block >> (63 - used++)) & 1u);
    });
  }

  bool explicit_ = false;
  std::uint64_t seed_ = 0;
  BitString bits_;
  std::size_t cursor_ = 0;
  std::vector<std::uint64_t> consumed_;
  std::unordered_map<std::uint64_t, std::uint64_t> aux_consumed_;
};

/// "<length>:<hex>", most significant bit of each nibble first. Used to
/// reproduce failures from explicit tapes.
inline std::string to_hex(const BitString& bits) {
  static const char* digits = "0123456789abcdef";
  std::string out = std::to_string(bits.size()) + ":";
  for (std::size_t i = 0; i < bits.size(); i += 4) {
    unsigned nibble = 0;
    for (std::size_t k = 0; k < 4; ++k) nibble = (nibble << 1) | (i + k < bits.size() && bits[i + k] ? 1u : 0u);
    out += digits[nibble];
  }
  return out;
}

inline BitString from_hex(const std::string& text) {
  auto colon = text.find(':');
  if (colon == std::string::npos) throw ParseError("tape must be <length>:<hex>", 0);
  std::size_t length = 0;
  try {
    length = std::stoull(text.substr(0, colon));
  } catch (const std::exception&) {
    throw ParseError("bad tape length in '" + text + "'", 0);
  }
  std::string hex = text.substr(colon + 1);
  if (hex.size() != (length + 3) / 4) throw ParseError("tape hex has wrong number of digits", 0);
  BitString bits;
  for (char c : hex) {
    unsigned nibble;
    if (c >= '0' && c <= '9') nibble = c - '0';
    else if (c >= 'a' && c <= 'f') nibble = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') nibble = c - 'A' + 10;
    else throw ParseError("bad hex digit in tape", 0);
    for (int k = 3; k >= 0; --k) bits.push_back((nibble >> k) & 1u);
  }
  for (std::size_t i = length; i < bits.size(); ++i)
    if (bits[i]) throw ParseError("tape padding bits must be zero", 0);
  bits.resize(length);
  return bits;
}

/// Parses "0110" or "0,1,1,0" into bits.
inline BitString parse_bits(const std::string& text) {
  BitString bits;
  for (char c : text) {
    if (c == '0' || c == '1') bits.push_back(c == '1');
    else if (c != ',' && c != ' ') throw ParseError("bad bit '" + std::string(1, c) + "'", 0);
  }
  return bits;
}

inline constexpr unsigned kDefaultBitGuard = 26;

/// Visits all 2^bit_budget explicit bit strings in lexicographic order.
/// Each carries weight 2^-bit_budget.
inline void enumerate_tapes(unsigned bit_budget, const std::function<void(const BitString&)>& visit,
                            unsigned guard = kDefaultBitGuard, bool force = false) {
  if (bit_budget > guard && !force)
    throw BudgetExceeded("bit budget " + std::to_string(bit_budget) + " exceeds guard " + std::to_string(guard));
  if (bit_budget >= 63) throw BudgetExceeded("bit budget too large to enumerate");
  BitString bits(bit_budget, false);
  const std::uint64_t total = std::uint64_t{1} << bit_budget;
  for (std::uint64_t code = 0; code < total; ++code) {
    for (unsigned k = 0; k < bit_budget; ++k) bits[k] = (code >> (bit_budget - 1 - k)) & 1u;
    visit(bits);
  }
}

/// Exact sum of dyadic weights 2^-bits, kept as an integer numerator over
/// 2^scale.
class DyadicSum {
 public:
  DyadicSum() = default;
  explicit DyadicSum(unsigned scale) : scale_(scale) {}

  void add(unsigned bits, unsigned long times = 1) {
    if (bits > scale_) rescale(bits);
    numerator_ += BigInt(times) << (scale_ - bits);
  }

  void add(const DyadicSum& other) {
    if (other.scale_ > scale_) rescale(other.scale_);
    numerator_ += other.numerator_ << (scale_ - other.scale_);
  }

  Rational value() const {
    Rational q(numerator_, BigInt(1) << scale_);
    q.canonicalize();
    return q;
  }

  bool is_zero() const { return numerator_ == 0; }

 private:
  void rescale(unsigned scale) {
    numerator_ <<= (scale - scale_);
    scale_ = scale;
  }

  unsigned scale_ = 0;
  BigInt numerator_ = 0;
};

/// Adaptive exhaustive exploration of bit strings.
///
/// `run(tape)` is called on explicit tapes; it reports whether it finished
/// within the given bits. A branch that needs more bits is split into its
/// two one-bit extensions until `bit_budget` is reached. Every finished
/// branch of length P has weight 2^-P and the finished branches are
/// prefix-free, so the weights are exact. Leaves are visited in
/// lexicographic order.
template <class Result>
struct Branch {
  BitString prefix;
  bool resolved = false;
  Result result;
};

template <class Result, class Run, class Visit>
void explore_tapes(unsigned bit_budget, Run&& run, Visit&& visit, BitString prefix = {}) {
  // Explicit stack keeps deep branches off the call stack.
  std::vector<BitString> stack{std::move(prefix)};
  while (!stack.empty()) {
    BitString current = std::move(stack.back());
    stack.pop_back();
    Tape tape = Tape::from_bits(current);
    Branch<Result> branch;
    bool finished = run(tape, branch.result);
    branch.resolved = finished;
    if (finished || current.size() >= bit_budget) {
      branch.prefix = std::move(current);
      visit(branch);
      continue;
    }
    BitString one = current;
    one.push_back(true);
    current.push_back(false);
    stack.push_back(std::move(one));
    stack.push_back(std::move(current));
  }
}

}  // namespace lll
