#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace kcsim {

/// Finite binary string. Stored as '0'/'1' characters so that the text form
/// used by every file format is the representation itself.
class BitString {
 public:
  BitString() = default;

  /// Throws std::invalid_argument on characters other than '0' and '1'.
  explicit BitString(std::string_view bits) : bits_(bits) {
    for (char c : bits_) {
      if (c != '0' && c != '1') {
        throw std::invalid_argument("BitString: invalid character in '" + bits_ + "'");
      }
    }
  }

  static BitString zeros(std::size_t n) { return from_raw(std::string(n, '0')); }

  std::size_t size() const { return bits_.size(); }
  bool empty() const { return bits_.empty(); }
  int bit(std::size_t i) const { return bits_[i] == '1' ? 1 : 0; }
  int operator[](std::size_t i) const { return bit(i); }

  const std::string& str() const { return bits_; }

  /// Text form used in files: "-" stands for the empty string.
  std::string text() const { return bits_.empty() ? std::string("-") : bits_; }
  static BitString from_text(std::string_view t) {
    if (t == "-") return BitString();
    return BitString(t);
  }

  BitString prefix(std::size_t n) const {
    return from_raw(bits_.substr(0, n < bits_.size() ? n : bits_.size()));
  }
  BitString suffix_from(std::size_t n) const {
    return n >= bits_.size() ? BitString() : from_raw(bits_.substr(n));
  }

  BitString& push_back(int b) {
    bits_.push_back(b ? '1' : '0');
    return *this;
  }
  BitString with(int b) const {
    BitString r = *this;
    r.push_back(b);
    return r;
  }
  BitString& append(const BitString& other) {
    bits_ += other.bits_;
    return *this;
  }
  BitString concat(const BitString& other) const {
    BitString r = *this;
    r.append(other);
    return r;
  }
  void set_bit(std::size_t i, int b) { bits_[i] = b ? '1' : '0'; }

  /// this ⪯ other
  bool is_prefix_of(const BitString& other) const {
    return bits_.size() <= other.bits_.size() &&
           other.bits_.compare(0, bits_.size(), bits_) == 0;
  }
  bool comparable(const BitString& other) const {
    return is_prefix_of(other) || other.is_prefix_of(*this);
  }

  /// Plain lexicographic order (a proper prefix sorts first).
  friend std::strong_ordering operator<=>(const BitString& a, const BitString& b) {
    int c = a.bits_.compare(b.bits_);
    if (c < 0) return std::strong_ordering::less;
    if (c > 0) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
  }
  friend bool operator==(const BitString& a, const BitString& b) = default;

 private:
  static BitString from_raw(std::string s) {
    BitString b;
    b.bits_ = std::move(s);
    return b;
  }

  std::string bits_;
};

/// Length-lex order: shorter strings first, ties broken lexicographically.
inline bool length_lex_less(const BitString& a, const BitString& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

struct LengthLexLess {
  bool operator()(const BitString& a, const BitString& b) const { return length_lex_less(a, b); }
};

/// Position of s in the length-lex enumerator: "" -> 0, "0" -> 1, "1" -> 2, "00" -> 3.
/// index(s) = 2^|s| - 1 + value(s). Valid for |s| < 63.
inline std::uint64_t length_lex_index(const BitString& s) {
  if (s.size() >= 63) throw std::out_of_range("length_lex_index: string too long");
  std::uint64_t value = 0;
  for (std::size_t i = 0; i < s.size(); ++i) value = (value << 1) | static_cast<std::uint64_t>(s.bit(i));
  return ((std::uint64_t{1} << s.size()) - 1) + value;
}

inline BitString length_lex_string(std::uint64_t index) {
  std::size_t len = 0;
  while (index >= (std::uint64_t{1} << (len + 1)) - 1) ++len;
  std::uint64_t value = index - ((std::uint64_t{1} << len) - 1);
  BitString s;
  for (std::size_t i = 0; i < len; ++i) s.push_back(static_cast<int>((value >> (len - 1 - i)) & 1));
  return s;
}

}  // namespace kcsim

template <>
struct std::hash<kcsim::BitString> {
  std::size_t operator()(const kcsim::BitString& b) const noexcept {
    return std::hash<std::string>{}(b.str());
  }
};
