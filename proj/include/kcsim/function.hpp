#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kcsim/bitstring.hpp"
#include "kcsim/oracle.hpp"

namespace kcsim {

// ---------------------------------------------------------------------------
// Ladder c_0 = 0, c_i = 4^i.

inline constexpr int kMaxLadderIndex = 30;

inline std::int64_t ladder_value(int i) {
  if (i < 0 || i > kMaxLadderIndex) throw std::out_of_range("ladder index out of range");
  return i == 0 ? 0 : std::int64_t{1} << (2 * i);
}

/// Least i with value < c_{i+1}.
inline int ladder_index(std::int64_t value) {
  int i = 0;
  while (i < kMaxLadderIndex && value >= ladder_value(i + 1)) ++i;
  return i;
}

/// Inverse of ladder_value on ladder values; -1 for non-ladder values.
inline int ladder_index_of_value(std::int64_t c) {
  for (int i = 0; i <= kMaxLadderIndex; ++i) {
    if (ladder_value(i) == c) return i;
  }
  return -1;
}

// ---------------------------------------------------------------------------

/// A total function on strings given by a stage-indexed approximation f_s.
class ApproximatedFunction {
 public:
  virtual ~ApproximatedFunction() = default;

  virtual std::int64_t value(const BitString& sigma, Stage s) const = 0;

  /// Ground truth for synthetic instances. Engines never read it.
  virtual bool finite_to_one() const = 0;

  /// Stages s > 1 at which f_s(σ) may differ from f_{s-1}(σ) for some σ.
  virtual std::vector<Stage> change_stages() const { return {}; }

  virtual std::string describe() const = 0;
};

/// How a schedule assigns a value when no explicit rule matches.
struct DefaultRule {
  enum class Kind { kConstant, kLinear, kFloorLog2Length };
  Kind kind = Kind::kConstant;
  std::int64_t a = 0;
  std::int64_t b = 0;

  std::int64_t eval(const BitString& sigma) const {
    const auto n = static_cast<std::int64_t>(sigma.size());
    switch (kind) {
      case Kind::kConstant: return a;
      case Kind::kLinear: return a * n + b;
      case Kind::kFloorLog2Length: {
        std::int64_t r = 0;
        while ((std::int64_t{2} << r) <= n) ++r;
        return n == 0 ? 0 : r;
      }
    }
    return 0;
  }

  std::string text() const {
    switch (kind) {
      case Kind::kConstant: return "const:" + std::to_string(a);
      case Kind::kLinear: return "linear:" + std::to_string(a) + ":" + std::to_string(b);
      case Kind::kFloorLog2Length: return "log2len";
    }
    return "?";
  }

  static DefaultRule parse(const std::string& t) {
    DefaultRule d;
    auto parts = split(t, ':');
    if (parts.size() == 2 && parts[0] == "const") {
      d.kind = Kind::kConstant;
      d.a = std::stoll(parts[1]);
    } else if (parts.size() == 3 && parts[0] == "linear") {
      d.kind = Kind::kLinear;
      d.a = std::stoll(parts[1]);
      d.b = std::stoll(parts[2]);
    } else if (parts.size() == 1 && parts[0] == "log2len") {
      d.kind = Kind::kFloorLog2Length;
    } else {
      throw std::invalid_argument("unknown default rule '" + t + "'");
    }
    if ((d.kind == Kind::kConstant && d.a < 0) || (d.kind == Kind::kLinear && (d.a < 0 || d.b < 0))) {
      throw std::invalid_argument("default rule values must be non-negative");
    }
    return d;
  }

  static std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
      if (c == sep) {
        out.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    out.push_back(cur);
    return out;
  }
};

/// (pattern, stage interval, value). Patterns: "*", "=<bits>", "len:<k>", "prefix:<bits>".
struct ScheduleRule {
  enum class Pattern { kAny, kExact, kLength, kPrefix };
  Pattern pattern = Pattern::kAny;
  BitString bits;
  std::size_t length = 0;
  Stage from = 1;
  Stage to = std::numeric_limits<Stage>::max();
  std::int64_t value = 0;

  bool matches(const BitString& sigma, Stage s) const {
    if (s < from || s > to) return false;
    switch (pattern) {
      case Pattern::kAny: return true;
      case Pattern::kExact: return sigma == bits;
      case Pattern::kLength: return sigma.size() == length;
      case Pattern::kPrefix: return bits.is_prefix_of(sigma);
    }
    return false;
  }

  std::string text() const {
    std::string p;
    switch (pattern) {
      case Pattern::kAny: p = "*"; break;
      case Pattern::kExact: p = "=" + bits.text(); break;
      case Pattern::kLength: p = "len:" + std::to_string(length); break;
      case Pattern::kPrefix: p = "prefix:" + bits.text(); break;
    }
    std::string hi = to == std::numeric_limits<Stage>::max() ? "inf" : std::to_string(to);
    return p + "@" + std::to_string(from) + "-" + hi + "=" + std::to_string(value);
  }

  static ScheduleRule parse(const std::string& t) {
    auto at = t.find('@');
    auto dash = t.find('-', at == std::string::npos ? 0 : at);
    auto eq = t.rfind('=');
    if (at == std::string::npos || dash == std::string::npos || eq == std::string::npos || eq < dash) {
      throw std::invalid_argument("bad schedule rule '" + t + "'");
    }
    ScheduleRule r;
    std::string p = t.substr(0, at);
    if (p == "*") {
      r.pattern = Pattern::kAny;
    } else if (p.rfind("=", 0) == 0) {
      r.pattern = Pattern::kExact;
      r.bits = BitString::from_text(p.substr(1));
    } else if (p.rfind("len:", 0) == 0) {
      r.pattern = Pattern::kLength;
      r.length = std::stoull(p.substr(4));
    } else if (p.rfind("prefix:", 0) == 0) {
      r.pattern = Pattern::kPrefix;
      r.bits = BitString::from_text(p.substr(7));
    } else {
      throw std::invalid_argument("bad pattern '" + p + "'");
    }
    r.from = std::stoll(t.substr(at + 1, dash - at - 1));
    std::string hi = t.substr(dash + 1, eq - dash - 1);
    r.to = hi == "inf" ? std::numeric_limits<Stage>::max() : std::stoll(hi);
    r.value = std::stoll(t.substr(eq + 1));
    if (r.from < 1 || r.to < r.from || r.value < 0) throw std::invalid_argument("bad interval or value in '" + t + "'");
    return r;
  }
};

/// Synthetic approximated function: first matching rule wins, otherwise the
/// default rule. Always total.
class ScheduleFunction final : public ApproximatedFunction {
 public:
  ScheduleFunction() = default;
  ScheduleFunction(std::string name, bool finite_to_one, DefaultRule def, std::vector<ScheduleRule> rules = {})
      : name_(std::move(name)), finite_to_one_(finite_to_one), default_(def), rules_(std::move(rules)) {}

  std::int64_t value(const BitString& sigma, Stage s) const override {
    for (const auto& r : rules_) {
      if (r.matches(sigma, s)) return r.value;
    }
    return default_.eval(sigma);
  }

  bool finite_to_one() const override { return finite_to_one_; }

  std::vector<Stage> change_stages() const override {
    std::set<Stage> out;
    for (const auto& r : rules_) {
      if (r.from > 1) out.insert(r.from);
      if (r.to != std::numeric_limits<Stage>::max()) out.insert(r.to + 1);
    }
    return {out.begin(), out.end()};
  }

  const std::string& name() const { return name_; }
  const DefaultRule& default_rule() const { return default_; }
  const std::vector<ScheduleRule>& rules() const { return rules_; }

  /// "<name> f2o=<0|1> default=<rule> [rule...]"
  std::string describe() const override {
    std::ostringstream os;
    os << name_ << " f2o=" << (finite_to_one_ ? 1 : 0) << " default=" << default_.text();
    for (const auto& r : rules_) os << ' ' << r.text();
    return os.str();
  }

  static ScheduleFunction parse(const std::string& line) {
    std::istringstream is(line);
    std::string name, tok;
    if (!(is >> name)) throw std::invalid_argument("function spec: missing name");
    bool f2o = false;
    bool have_f2o = false;
    DefaultRule def;
    bool have_default = false;
    std::vector<ScheduleRule> rules;
    while (is >> tok) {
      if (tok.rfind("f2o=", 0) == 0) {
        if (tok != "f2o=0" && tok != "f2o=1") throw std::invalid_argument("f2o must be 0 or 1");
        f2o = tok == "f2o=1";
        have_f2o = true;
      } else if (tok.rfind("default=", 0) == 0) {
        def = DefaultRule::parse(tok.substr(8));
        have_default = true;
      } else {
        rules.push_back(ScheduleRule::parse(tok));
      }
    }
    if (!have_f2o || !have_default) throw std::invalid_argument("function spec needs f2o= and default=");
    return ScheduleFunction(name, f2o, def, std::move(rules));
  }

 private:
  std::string name_ = "f";
  bool finite_to_one_ = true;
  DefaultRule default_;
  std::vector<ScheduleRule> rules_;
};

/// f(σ) = ⌊log₂|σ|⌋ with f(empty) = 0.
inline ScheduleFunction floor_log2_length_function() {
  return ScheduleFunction("log2len", true, DefaultRule{DefaultRule::Kind::kFloorLog2Length, 0, 0});
}

}  // namespace kcsim
