// kcsim: run constructions, audit traces, emit event streams.
//
// Exit status: 0 all checks pass, 1 a bound or audit check failed,
// 2 bad config, flags or input file (message names the offending line).

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "kcsim/run.hpp"

namespace fs = std::filesystem;
using namespace kcsim;

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::string> mode;
  std::optional<Stage> horizon;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> profile;
  std::optional<std::size_t> shift;
  std::optional<std::string> output;
  std::optional<std::string> stream;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config_path, "run config file (key = value lines)");
    app->add_option("--mode", mode, "single | universal | dimension");
    app->add_option("--horizon", horizon, "stage count");
    app->add_option("--seed", seed, "generator seed");
    app->add_option("--profile", profile, "generator profile, e.g. \"rate=0.2 injurious=1\"");
    app->add_option("--shift", shift, "code shift");
    app->add_option("-o,--output", output, "output directory");
    app->add_option("--stream", stream, "replay file, or 'generate'");
  }

  RunConfig load() const {
    RunConfig cfg;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw ConfigError(0, "cannot open '" + config_path + "'");
      cfg = RunConfig::parse(in);
    }
    if (mode) cfg.set("mode", *mode);
    if (horizon) cfg.horizon = *horizon;
    if (seed) cfg.seed = *seed;
    if (profile) cfg.set("profile", *profile);
    if (shift) cfg.shift = *shift;
    if (output) cfg.output = *output;
    if (stream) cfg.stream = *stream;
    cfg.validate();
    return cfg;
  }
};

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

std::string joined(const std::vector<std::string>& lines) {
  std::string s;
  for (const auto& l : lines) s += l + '\n';
  return s;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(0, "cannot open '" + path + "'");
  std::vector<std::string> lines;
  std::string l;
  while (std::getline(in, l)) lines.push_back(l);
  return lines;
}

void summary(const Report& r, std::ostream& os) {
  os << r.size() << " checks, " << r.failures() << " failed\n";
  for (const auto& c : r.checks()) {
    if (!c.pass) os << "FAIL " << c.name << ' ' << c.margin << ' ' << c.detail << '\n';
  }
}

int cmd_run(const Overrides& o) {
  const RunConfig cfg = o.load();
  const EventStream stream = obtain_stream(cfg);
  const RunArtifacts a = execute(cfg, stream);
  const fs::path dir(cfg.output);
  fs::create_directories(dir);
  write_file(dir / "trace.txt", joined(a.trace));
  std::ostringstream rep;
  a.report.write(rep);
  write_file(dir / "report.txt", rep.str());
  write_file(dir / "requests.txt", a.requests_log);
  write_file(dir / "code.txt", a.code_dump);
  std::ostringstream st;
  write_stream(st, stream);
  write_file(dir / "stream.txt", st.str());
  std::cout << "mode " << mode_name(cfg.mode) << ", " << stream.events.size() << " events, "
            << (a.quiescent ? "quiescent" : "not quiescent") << ", artifacts in " << dir.string() << '\n';
  summary(a.report, std::cout);
  return a.report.ok() ? 0 : 1;
}

int cmd_generate(const Overrides& o, const std::string& out_path) {
  RunConfig cfg = o.load();
  cfg.stream = "generate";
  const EventStream stream = obtain_stream(cfg);
  if (out_path.empty() || out_path == "-") {
    write_stream(std::cout, stream);
  } else {
    std::ostringstream st;
    write_stream(st, stream);
    write_file(out_path, st.str());
    std::cout << stream.events.size() << " events written to " << out_path << '\n';
  }
  return 0;
}

int cmd_verify(const std::string& path) {
  const VerifyOutcome v = verify_trace(read_lines(path));
  v.report.write(std::cout);
  v.audit.write(std::cout);
  Report all = v.report;
  all.add(v.audit);
  summary(all, std::cerr);
  return v.ok() ? 0 : 1;
}

// Prints the check lines recorded in a trace without re-running anything.
int cmd_report(const std::string& path) {
  std::size_t total = 0;
  std::size_t failed = 0;
  for (const auto& l : read_lines(path)) {
    if (l.rfind("check ", 0) != 0) continue;
    std::cout << l << '\n';
    ++total;
    std::istringstream is(l);
    std::string word, name, status;
    is >> word >> name >> status;
    if (status != "pass") ++failed;
  }
  std::cerr << total << " checks, " << failed << " failed\n";
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kcsim: finite-injury construction simulator and verifier"};
  app.require_subcommand(1);

  Overrides run_opts;
  auto* run = app.add_subcommand("run", "execute a run and its analysis suite, write artifacts");
  run_opts.attach(run);

  Overrides gen_opts;
  std::string gen_out;
  auto* gen = app.add_subcommand("generate-stream", "write the event stream a config would generate");
  gen_opts.attach(gen);
  gen->add_option("--out", gen_out, "stream file ('-' for stdout)");

  std::string verify_path;
  auto* verify = app.add_subcommand("verify", "re-run a trace and compare it line by line");
  verify->add_option("trace", verify_path, "trace file")->required();

  std::string report_path;
  auto* report = app.add_subcommand("report", "print the checks recorded in a trace");
  report->add_option("trace", report_path, "trace file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) return cmd_run(run_opts);
    if (*gen) return cmd_generate(gen_opts, gen_out);
    if (*verify) return cmd_verify(verify_path);
    if (*report) return cmd_report(report_path);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const InvalidStream& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const BoundViolated& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
