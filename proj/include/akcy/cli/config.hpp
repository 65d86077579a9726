#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "akcy/solver.hpp"

namespace akcy::cli {

enum class Scenario { kahler, perturbed };
enum class LogLevel { quiet, info, debug };

/// One term amplitude * cos(2 pi k . x / L - phase) of the source F.
struct FourierTerm {
  std::array<int, 4> k{};
  double amplitude = 0;
  double phase = 0;
};

struct UniquenessConfig {
  bool enabled = false;
  std::array<std::uint64_t, 2> seeds{1, 2};
  double amplitude = 1e-2;
};

struct RunConfig {
  std::array<int, 4> n{16, 16, 16, 16};
  std::array<double, 4> periods{1, 1, 1, 1};
  Scenario scenario = Scenario::kahler;
  double epsilon = 0;       ///< bump size of the perturbed scenario
  double corrupt_j = 0;     ///< check only: adds this multiple of Id to J
  std::vector<FourierTerm> f_terms;
  SolverConfig solver;
  UniquenessConfig uniqueness;
  std::string output_dir = "akcy_out";
  bool dump = false;
  LogLevel log_level = LogLevel::info;
  std::uint64_t seed = 1;

  Grid grid() const { return Grid(n, periods); }
};

/// Parses a YAML document; throws ConfigError naming the offending key.
RunConfig parse_config(const std::string &yaml_text);
RunConfig load_config(const std::string &path);

/// Normalized echo of the parsed configuration.
nlohmann::json to_json(const RunConfig &c);

std::string to_string(Scenario s);

} // namespace akcy::cli
