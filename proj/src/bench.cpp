#include "polydbg/bench.hpp"

#include <fstream>
#include <map>
#include <numeric>

#include <unistd.h>

#include "polydbg/errors.hpp"
#include "polydbg/headless.hpp"
#include "polydbg/log.hpp"

namespace polydbg {

namespace {

const AgentConfig& language_config(const SessionConfig& config, const std::string& language) {
  for (const auto& lang : config.languages) {
    if (lang.language_id == language) return lang;
  }
  throw UnknownLanguage(language);
}

std::string replace_all(std::string text, const std::string& from, const std::string& to) {
  for (auto pos = text.find(from); pos != std::string::npos; pos = text.find(from, pos + to.size())) {
    text.replace(pos, from.size(), to);
  }
  return text;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw SystemError("cannot write " + path.string());
  out << text;
}

}  // namespace

GeneratedProgram generate_stress_program(const SessionConfig& config, const std::string& caller_language,
                                         const std::string& callee_language, int n,
                                         const std::filesystem::path& dir) {
  if (n < 1) throw PreconditionError("stress iterations must be at least 1, got " + std::to_string(n));
  const auto& caller = language_config(config, caller_language);
  const auto& callee = language_config(config, callee_language);
  if (!caller.stress_templates) throw ConfigError("no stress templates for '" + caller_language + "'");
  if (!callee.stress_templates) throw ConfigError("no stress templates for '" + callee_language + "'");

  std::filesystem::create_directories(dir);
  GeneratedProgram program;
  program.callee_file = dir / ("stress_callee" + callee.file_extensions.front());
  program.caller_file = dir / ("stress_caller" + caller.file_extensions.front());
  std::string text = caller.stress_templates->caller;
  text = replace_all(text, "{n}", std::to_string(n));
  text = replace_all(text, "{callee_language}", callee_language);
  text = replace_all(text, "{callee_file}", program.callee_file.string());
  write_file(program.callee_file, callee.stress_templates->callee);
  write_file(program.caller_file, text);
  return program;
}

LinearFit fit_linear(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 2) throw PreconditionError("a linear fit needs at least two points");
  const double count = static_cast<double>(points.size());
  double sx = 0, sy = 0;
  for (const auto& [x, y] : points) {
    sx += x;
    sy += y;
  }
  const double mx = sx / count, my = sy / count;
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& [x, y] : points) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    syy += (y - my) * (y - my);
  }
  if (sxx == 0) throw PreconditionError("a linear fit needs two distinct x values");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0;
  for (const auto& [x, y] : points) {
    const double r = y - (fit.intercept + fit.slope * x);
    ss_res += r * r;
  }
  fit.r_squared = syy == 0 ? 1.0 : 1.0 - ss_res / syy;
  return fit;
}

BenchReport measure_overhead(const SessionConfig& config, const BenchSpec& spec) {
  if (spec.repetitions < 1) throw PreconditionError("repetitions must be at least 1");
  if (spec.ladder.empty()) throw PreconditionError("empty n ladder");
  language_config(config, spec.caller_language);
  language_config(config, spec.callee_language);

  std::filesystem::path dir = spec.work_dir;
  const bool own_dir = dir.empty();
  if (own_dir) {
    dir = std::filesystem::temp_directory_path() / ("polydbg-bench-" + std::to_string(::getpid()));
  }
  BenchReport report;
  for (int n : spec.ladder) {
    const auto program = generate_stress_program(config, spec.caller_language, spec.callee_language, n, dir);
    SessionConfig run_config = config;
    run_config.defaults.eager_start = true;
    for (auto& lang : run_config.languages) {
      lang.environment["POLYDBG_BENCH_N"] = std::to_string(n);
      lang.environment["POLYDBG_BENCH_CALLER"] = program.caller_file.string();
      lang.environment["POLYDBG_BENCH_CALLEE"] = program.callee_file.string();
    }
    double total = 0;
    for (int rep = 1; rep <= spec.repetitions; ++rep) {
      const auto result = run_headless(run_config, program.caller_file);
      if (result.exit_code != 0) {
        throw Error("bench failed at n=" + std::to_string(n) + ": " +
                    (result.error.empty() ? "final value " + result.output : result.error));
      }
      PDBG_INFO("bench n={} rep={} wall={:.6f}s", n, rep, result.wall_seconds);
      report.samples.push_back({spec.caller_language, spec.callee_language, n, rep, result.wall_seconds});
      total += result.wall_seconds;
    }
    report.means.emplace_back(n, total / spec.repetitions);
  }
  if (own_dir) {
    std::error_code ec;
    std::filesystem::remove_all(dir, ec);
  }
  report.fit = fit_linear(report.means);
  if (!spec.output.empty()) write_bench_csv(spec.output, report.samples);
  return report;
}

void write_bench_csv(const std::filesystem::path& path, const std::vector<BenchSample>& samples) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw SystemError("cannot write " + path.string());
  out << "caller,callee,n,repetition,wall_seconds\n";
  char buf[64];
  for (const auto& s : samples) {
    std::snprintf(buf, sizeof buf, "%.9f", s.wall_seconds);
    out << s.caller << ',' << s.callee << ',' << s.n << ',' << s.repetition << ',' << buf << '\n';
  }
}

}  // namespace polydbg
