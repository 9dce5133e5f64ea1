#pragma once

#include <cstdint>
#include <istream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kcsim/function.hpp"
#include "kcsim/generator.hpp"

namespace kcsim {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::size_t line, const std::string& what)
      : std::runtime_error(line ? "config line " + std::to_string(line) + ": " + what : "config: " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

enum class RunMode { kSingle, kUniversal, kDimension };

inline const char* mode_name(RunMode m) {
  switch (m) {
    case RunMode::kSingle: return "single";
    case RunMode::kUniversal: return "universal";
    case RunMode::kDimension: return "dimension";
  }
  return "?";
}

inline RunMode parse_mode(const std::string& s) {
  if (s == "single") return RunMode::kSingle;
  if (s == "universal") return RunMode::kUniversal;
  if (s == "dimension") return RunMode::kDimension;
  throw ConfigError(0, "unknown mode '" + s + "'");
}

/// A complete, self-describing run. Keys (one per line, '#' comments):
///   mode        single | universal | dimension
///   horizon     stage count
///   seed        generator seed
///   shift       code shift (default 2)
///   stream      "generate" or a replay file path
///   profile     generator profile, space-separated key=value
///   function    single/dimension function spec (dimension defaults to log2len)
///   phi         universal function spec, repeated in index order
///   max_levels  cap on branching levels
///   max_targets cap on monitored strings (0: unlimited)
///   samples     dimension samples
///   output      output directory
struct RunConfig {
  RunMode mode = RunMode::kSingle;
  Stage horizon = 200;
  std::uint64_t seed = 0;
  std::size_t shift = 2;
  std::string stream = "generate";
  GeneratorProfile profile;
  std::string function = "f f2o=1 default=const:0";
  std::vector<std::string> phis;
  std::size_t max_levels = 8;
  std::size_t max_targets = 0;
  std::size_t samples = 50;
  std::string output = "out";

  std::size_t target_cap() const { return max_targets == 0 ? std::numeric_limits<std::size_t>::max() : max_targets; }
  EngineParams engine_params() const { return {max_levels, target_cap()}; }
  UniversalParams universal_params() const { return {max_levels, target_cap()}; }

  std::shared_ptr<const ApproximatedFunction> single_function() const {
    return std::make_shared<ScheduleFunction>(ScheduleFunction::parse(function));
  }
  std::vector<std::shared_ptr<const ApproximatedFunction>> universal_functions() const {
    std::vector<std::shared_ptr<const ApproximatedFunction>> out;
    for (const auto& p : phis) out.push_back(std::make_shared<ScheduleFunction>(ScheduleFunction::parse(p)));
    return out;
  }
  std::vector<bool> truth() const {
    std::vector<bool> out;
    for (const auto& f : universal_functions()) out.push_back(f->finite_to_one());
    return out;
  }

  /// Sets one key. Throws ConfigError with `line` on bad input.
  void set(const std::string& key, const std::string& value, std::size_t line = 0) {
    try {
      if (key == "mode") {
        mode = parse_mode(value);
        if (mode == RunMode::kDimension && function == RunConfig{}.function) function = "log2len f2o=1 default=log2len";
      } else if (key == "horizon") {
        horizon = std::stoll(value);
      } else if (key == "seed") {
        seed = std::stoull(value);
      } else if (key == "shift") {
        shift = std::stoull(value);
      } else if (key == "stream") {
        stream = value;
      } else if (key == "profile") {
        profile = GeneratorProfile::parse(value);
      } else if (key == "function") {
        ScheduleFunction::parse(value);
        function = value;
      } else if (key == "phi") {
        ScheduleFunction::parse(value);
        phis.push_back(value);
      } else if (key == "max_levels") {
        max_levels = std::stoull(value);
      } else if (key == "max_targets") {
        max_targets = std::stoull(value);
      } else if (key == "samples") {
        samples = std::stoull(value);
      } else if (key == "output") {
        output = value;
      } else {
        throw ConfigError(line, "unknown key '" + key + "'");
      }
    } catch (const ConfigError& e) {
      if (e.line() != 0 || line == 0) throw;
      throw ConfigError(line, std::string(e.what()).substr(8));
    } catch (const std::exception& e) {
      throw ConfigError(line, key + ": " + e.what());
    }
  }

  void validate() const {
    if (horizon < 1) throw ConfigError(0, "horizon must be >= 1");
    if (max_levels > 64) throw ConfigError(0, "max_levels must be <= 64");
    if (mode == RunMode::kUniversal && phis.empty()) throw ConfigError(0, "universal mode needs at least one phi");
    if (mode == RunMode::kUniversal && max_levels > 12) throw ConfigError(0, "universal mode supports max_levels <= 12");
    if (stream.empty()) throw ConfigError(0, "stream must be 'generate' or a path");
  }

  static RunConfig parse(std::istream& is) {
    RunConfig c;
    std::string line;
    std::size_t no = 0;
    while (std::getline(is, line)) {
      ++no;
      auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos) continue;
      auto eq = line.find('=');
      if (eq == std::string::npos) throw ConfigError(no, "expected key = value");
      auto trim = [](std::string s) {
        auto a = s.find_first_not_of(" \t\r");
        auto b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
      };
      c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)), no);
    }
    c.validate();
    return c;
  }

  /// Canonical key = value lines; parse(lines()) gives back an equal config.
  std::vector<std::string> lines() const {
    std::vector<std::string> out;
    out.push_back("mode = " + std::string(mode_name(mode)));
    out.push_back("horizon = " + std::to_string(horizon));
    out.push_back("seed = " + std::to_string(seed));
    out.push_back("shift = " + std::to_string(shift));
    out.push_back("stream = " + stream);
    out.push_back("profile = " + profile.text());
    out.push_back("function = " + function);
    for (const auto& p : phis) out.push_back("phi = " + p);
    out.push_back("max_levels = " + std::to_string(max_levels));
    out.push_back("max_targets = " + std::to_string(max_targets));
    out.push_back("samples = " + std::to_string(samples));
    out.push_back("output = " + output);
    return out;
  }
};

}  // namespace kcsim
