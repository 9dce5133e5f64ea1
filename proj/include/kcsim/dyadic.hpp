#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>

namespace kcsim {

using BigInt = boost::multiprecision::cpp_int;

/// Exact non-negative dyadic rational numerator / 2^exponent.
/// Canonical form: numerator odd, or numerator zero with exponent zero.
class DyadicMass {
 public:
  DyadicMass() = default;

  static DyadicMass zero() { return DyadicMass(); }
  static DyadicMass one() { return DyadicMass(1, 0); }

  /// 2^(-k), k >= 0.
  static DyadicMass inverse_power(std::int64_t k) {
    if (k < 0) throw std::invalid_argument("DyadicMass::inverse_power: negative exponent");
    return DyadicMass(1, k);
  }

  /// 2^k for any sign of k.
  static DyadicMass power_of_two(std::int64_t k) {
    if (k >= 0) return DyadicMass(BigInt(1) << static_cast<unsigned>(k), 0);
    return DyadicMass(1, -k);
  }

  static DyadicMass from_parts(BigInt numerator, std::int64_t exponent) {
    if (numerator < 0 || exponent < 0) throw std::invalid_argument("DyadicMass: negative part");
    return DyadicMass(std::move(numerator), exponent);
  }

  const BigInt& numerator() const { return num_; }
  std::int64_t exponent() const { return exp_; }
  bool is_zero() const { return num_ == 0; }

  DyadicMass& operator+=(const DyadicMass& o) {
    if (o.is_zero()) return *this;
    if (is_zero()) return *this = o;
    if (exp_ >= o.exp_) {
      num_ += o.num_ << static_cast<unsigned>(exp_ - o.exp_);
    } else {
      num_ = (num_ << static_cast<unsigned>(o.exp_ - exp_)) + o.num_;
      exp_ = o.exp_;
    }
    normalize();
    return *this;
  }
  friend DyadicMass operator+(DyadicMass a, const DyadicMass& b) { return a += b; }

  /// Throws std::domain_error when the result would be negative.
  DyadicMass& operator-=(const DyadicMass& o) {
    if (o.is_zero()) return *this;
    std::int64_t e = exp_ > o.exp_ ? exp_ : o.exp_;
    BigInt a = num_ << static_cast<unsigned>(e - exp_);
    BigInt b = o.num_ << static_cast<unsigned>(e - o.exp_);
    if (a < b) throw std::domain_error("DyadicMass: negative difference");
    num_ = a - b;
    exp_ = e;
    normalize();
    return *this;
  }
  friend DyadicMass operator-(DyadicMass a, const DyadicMass& b) { return a -= b; }

  /// Multiplies by 2^k (k may be negative).
  DyadicMass scaled(std::int64_t k) const {
    if (is_zero()) return *this;
    DyadicMass r = *this;
    if (k >= 0) {
      if (r.exp_ >= k) {
        r.exp_ -= k;
      } else {
        r.num_ <<= static_cast<unsigned>(k - r.exp_);
        r.exp_ = 0;
      }
    } else {
      r.exp_ += -k;
    }
    r.normalize();
    return r;
  }

  friend std::strong_ordering operator<=>(const DyadicMass& a, const DyadicMass& b) {
    std::int64_t e = a.exp_ > b.exp_ ? a.exp_ : b.exp_;
    BigInt x = a.num_ << static_cast<unsigned>(e - a.exp_);
    BigInt y = b.num_ << static_cast<unsigned>(e - b.exp_);
    if (x < y) return std::strong_ordering::less;
    if (x > y) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
  }
  friend bool operator==(const DyadicMass& a, const DyadicMass& b) {
    return a.exp_ == b.exp_ && a.num_ == b.num_;
  }

  /// "numerator/exponent" meaning numerator * 2^-exponent.
  std::string to_string() const {
    std::ostringstream os;
    os << num_ << "/" << exp_;
    return os.str();
  }
  static DyadicMass parse(const std::string& text) {
    auto slash = text.find('/');
    if (slash == std::string::npos) throw std::invalid_argument("DyadicMass: bad text '" + text + "'");
    BigInt n(text.substr(0, slash));
    std::int64_t e = std::stoll(text.substr(slash + 1));
    return from_parts(std::move(n), e);
  }

  double to_double() const {
    if (exp_ > 1000) return 0.0;
    return num_.convert_to<double>() / std::ldexp(1.0, static_cast<int>(exp_));
  }

 private:
  DyadicMass(BigInt n, std::int64_t e) : num_(std::move(n)), exp_(e) { normalize(); }

  void normalize() {
    if (num_ == 0) {
      exp_ = 0;
      return;
    }
    if (exp_ == 0) return;
    unsigned tz = boost::multiprecision::lsb(num_);
    std::int64_t drop = std::min<std::int64_t>(tz, exp_);
    if (drop > 0) {
      num_ >>= static_cast<unsigned>(drop);
      exp_ -= drop;
    }
  }

  BigInt num_ = 0;
  std::int64_t exp_ = 0;
};

inline std::ostream& operator<<(std::ostream& os, const DyadicMass& m) { return os << m.to_string(); }

}  // namespace kcsim
