#pragma once

// Exact rational arithmetic. All probabilities and bounds in the library are
// carried as GMP rationals; floating point only appears in printed reports.

#include <gmpxx.h>

#include <cstdint>
#include <sstream>
#include <string>
#include <string_view>

#include "lll/error.hpp"

namespace lll {

using Rational = mpq_class;
using BigInt = mpz_class;

inline Rational make_rational(long num, long den = 1) {
  if (den == 0) throw StructuralError("rational with zero denominator");
  Rational q(num, den);
  q.canonicalize();
  return q;
}

inline Rational ratio(const BigInt& num, const BigInt& den) {
  if (den == 0) throw StructuralError("rational with zero denominator");
  Rational q(num, den);
  q.canonicalize();
  return q;
}

/// 2^-e as an exact rational.
inline Rational dyadic(unsigned long e) {
  BigInt den;
  mpz_ui_pow_ui(den.get_mpz_t(), 2, e);
  return Rational(BigInt(1), den);
}

inline Rational pow(const Rational& base, unsigned long e) {
  Rational out;
  mpz_pow_ui(out.get_num_mpz_t(), base.get_num_mpz_t(), e);
  mpz_pow_ui(out.get_den_mpz_t(), base.get_den_mpz_t(), e);
  out.canonicalize();
  return out;
}

/// Smallest integer >= q.
inline BigInt ceil(const Rational& q) {
  BigInt out;
  mpz_cdiv_q(out.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return out;
}

inline BigInt floor(const Rational& q) {
  BigInt out;
  mpz_fdiv_q(out.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return out;
}

/// Parses "a/b", "a", or a finite decimal such as "0.99" (read exactly as
/// 99/100).
inline Rational parse_rational(std::string_view text) {
  std::string s(text);
  if (s.empty()) throw ParseError("empty rational", 0);
  try {
    if (auto dot = s.find('.'); dot != std::string::npos) {
      if (s.find('/') != std::string::npos) throw ParseError("bad rational '" + s + "'", 0);
      bool negative = s[0] == '-';
      std::string whole = s.substr(negative ? 1 : 0, dot - (negative ? 1 : 0));
      std::string frac = s.substr(dot + 1);
      if (whole.empty()) whole = "0";
      if (frac.empty()) throw ParseError("bad rational '" + s + "'", 0);
      for (char c : whole + frac)
        if (c < '0' || c > '9') throw ParseError("bad rational '" + s + "'", 0);
      BigInt num(whole + frac, 10);
      BigInt den;
      mpz_ui_pow_ui(den.get_mpz_t(), 10, frac.size());
      Rational q(num, den);
      q.canonicalize();
      return negative ? Rational(-q) : q;
    }
    for (char c : s)
      if (!((c >= '0' && c <= '9') || c == '/' || c == '-'))
        throw ParseError("bad rational '" + s + "'", 0);
    Rational q(s, 10);
    if (q.get_den() == 0) throw ParseError("zero denominator in '" + s + "'", 0);
    q.canonicalize();
    return q;
  } catch (const std::invalid_argument&) {
    throw ParseError("bad rational '" + s + "'", 0);
  }
}

/// Always "num/den", including integers ("1/1").
inline std::string to_string(const Rational& q) {
  return q.get_num().get_str() + "/" + q.get_den().get_str();
}

inline double to_double(const Rational& q) { return q.get_d(); }

/// "num/den" followed by a decimal approximation, as used in reports.
inline std::string exact_and_decimal(const Rational& q) {
  std::ostringstream os;
  os.precision(12);
  os << to_string(q) << " (" << q.get_d() << ")";
  return os.str();
}

}  // namespace lll
