#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "polydbg/config.hpp"

namespace polydbg {

struct BenchSpec {
  std::string caller_language;
  std::string callee_language;
  std::vector<int> ladder{1, 2, 5, 10};
  int repetitions = 10;
  std::filesystem::path output;    // CSV; empty to skip
  std::filesystem::path work_dir;  // generated programs; a temp dir when empty
};

struct GeneratedProgram {
  std::filesystem::path caller_file;
  std::filesystem::path callee_file;
};

/// Writes the caller (n iterations, one polyglot call each) and the callee
/// into `dir`. Throws PreconditionError for n < 1, ConfigError without templates.
GeneratedProgram generate_stress_program(const SessionConfig& config, const std::string& caller_language,
                                         const std::string& callee_language, int n,
                                         const std::filesystem::path& dir);

struct BenchSample {
  std::string caller;
  std::string callee;
  int n = 0;
  int repetition = 0;
  double wall_seconds = 0.0;
};

struct LinearFit {
  double intercept = 0.0;  // a
  double slope = 0.0;      // b, seconds per call
  double r_squared = 0.0;
};

/// Least squares y = a + b x. Needs two distinct x values.
LinearFit fit_linear(const std::vector<std::pair<double, double>>& points);

struct BenchReport {
  std::vector<BenchSample> samples;
  std::vector<std::pair<double, double>> means;  // (n, mean wall seconds)
  LinearFit fit;
};

/// Runs the ladder sequentially with agents started eagerly. Adapters see
/// POLYDBG_BENCH_N, POLYDBG_BENCH_CALLER and POLYDBG_BENCH_CALLEE in their
/// environment. Throws Error naming the failing n.
BenchReport measure_overhead(const SessionConfig& config, const BenchSpec& spec);

void write_bench_csv(const std::filesystem::path& path, const std::vector<BenchSample>& samples);

}  // namespace polydbg
