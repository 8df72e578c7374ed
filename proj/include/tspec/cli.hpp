#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tspec/lattice.hpp"

namespace tspec {

enum ExitCode { exit_ok = 0, exit_config = 2, exit_numeric = 3, exit_inconclusive = 4 };

struct RunConfig {
  std::filesystem::path symbol;
  std::optional<std::filesystem::path> perturbation;
  std::string task;
  std::filesystem::path out = "out";
  std::optional<int> grid;         // K
  std::optional<int> half_length;  // L
  double s = 1.0;
  double sigma = 1.0;
  std::optional<Interval> delta;
  std::optional<Interval> gap;
  double t_max = 100.0;
  double wave_t_max = 200.0;  // T_max
  std::uint64_t seed = 0x5EED;
  std::optional<WindowKind> kind;
  std::vector<double> energies;
  bool dump_states = false;
};

const std::vector<std::string>& task_names();

/// "LO:HI" with LO < HI; config error otherwise.
Interval parse_interval(const std::string& text);
/// Hexadecimal seed with or without a 0x prefix.
std::uint64_t parse_seed(const std::string& text);

/// Runs one task, writes REPORT.txt and the task's record files under config.out, echoes the
/// report to `console` and returns the exit code.
int run(const RunConfig& config, std::ostream& console);

}  // namespace tspec
