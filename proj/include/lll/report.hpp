#pragma once

// Line-oriented "key=value" reports. Rationals render as num/den~decimal so
// that the exact value is always one token.

#include <cstdint>
#include <sstream>
#include <string>
#include <type_traits>
#include <deque>
#include <vector>

#include "lll/rational.hpp"

namespace lll {

inline std::string report_value(const Rational& q) {
  std::ostringstream os;
  os.precision(12);
  os << to_string(q) << '~' << q.get_d();
  return os.str();
}

inline std::string report_value(const BigInt& n) { return n.get_str(); }
inline std::string report_value(const std::string& s) { return s; }
inline std::string report_value(const char* s) { return s; }
inline std::string report_value(bool b) { return b ? "1" : "0"; }

template <class T>
  requires std::is_integral_v<T>
std::string report_value(T v) {
  return std::to_string(v);
}

class Report {
 public:
  class Line {
   public:
    explicit Line(std::string& text) : text_(&text) {}

    template <class T>
    Line& add(const std::string& key, const T& value) {
      if (!text_->empty()) *text_ += ' ';
      *text_ += key + '=' + report_value(value);
      return *this;
    }

   private:
    std::string* text_;
  };

  Line line() {
    lines_.emplace_back();
    return Line(lines_.back());
  }

  template <class T>
  Report& set(const std::string& key, const T& value) {
    line().add(key, value);
    return *this;
  }

  const std::deque<std::string>& lines() const noexcept { return lines_; }

  std::string str() const {
    std::string out;
    for (const auto& l : lines_) out += l + '\n';
    return out;
  }

 private:
  std::deque<std::string> lines_;
};

}  // namespace lll
