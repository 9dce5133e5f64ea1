#pragma once

#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kcsim/dyadic.hpp"

namespace kcsim {

/// One verification line: name, status, exact margin ("num/exp", negative
/// when violated, "-" when not numeric) and free detail.
struct Check {
  std::string name;
  bool pass = true;
  std::string margin = "-";
  std::string detail;
  friend bool operator==(const Check&, const Check&) = default;
};

/// Margin bound - value; prefixed with '-' when value exceeds bound.
inline std::string margin_text(const DyadicMass& bound, const DyadicMass& value) {
  if (value <= bound) return (bound - value).to_string();
  return "-" + (value - bound).to_string();
}

inline Check bound_check(std::string name, const DyadicMass& value, const DyadicMass& bound, std::string detail = {}) {
  Check c;
  c.name = std::move(name);
  c.pass = value <= bound;
  c.margin = margin_text(bound, value);
  c.detail = detail.empty() ? value.to_string() + " <= " + bound.to_string() : std::move(detail);
  return c;
}

class Report {
 public:
  void add(Check c) { checks_.push_back(std::move(c)); }
  void add(const Report& r) {
    for (const auto& c : r.checks_) checks_.push_back(c);
  }
  void add_prefixed(const std::string& prefix, const Report& r) {
    for (auto c : r.checks_) {
      c.name = prefix + c.name;
      checks_.push_back(std::move(c));
    }
  }

  const std::vector<Check>& checks() const { return checks_; }
  std::size_t size() const { return checks_.size(); }
  std::size_t failures() const {
    std::size_t n = 0;
    for (const auto& c : checks_) n += c.pass ? 0 : 1;
    return n;
  }
  bool ok() const { return failures() == 0; }

  /// "check <name> <pass|FAIL> <margin> <detail>" per line.
  void write(std::ostream& os) const {
    for (const auto& c : checks_) {
      os << "check " << c.name << ' ' << (c.pass ? "pass" : "FAIL") << ' ' << c.margin;
      if (!c.detail.empty()) os << ' ' << c.detail;
      os << '\n';
    }
  }

  friend bool operator==(const Report&, const Report&) = default;

 private:
  std::vector<Check> checks_;
};

class BoundViolated : public std::runtime_error {
 public:
  explicit BoundViolated(const Check& c)
      : std::runtime_error("bound violated: " + c.name + " (margin " + c.margin + ") " + c.detail), check_(c) {}
  const Check& check() const { return check_; }

 private:
  Check check_;
};

/// Throws on the first failing check.
inline void require(const Report& r) {
  for (const auto& c : r.checks()) {
    if (!c.pass) throw BoundViolated(c);
  }
}

}  // namespace kcsim
