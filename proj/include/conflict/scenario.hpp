#pragma once

// Config-driven experiment runs. A scenario is one JSON document; see
// README.md for the grammar. Unknown keys are rejected at every level.

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "conflict/control.hpp"
#include "conflict/dynamics.hpp"

namespace conflict {

inline constexpr int kReportSchemaVersion = 1;

struct MatrixSpec {
  StructureKind kind = StructureKind::SelfSimilar;
  std::vector<std::vector<double>> rows;

  StructureMatrix build() const;
};

struct ControlConfig {
  enum class Type { Reclaim, Reversal, Strategy, Redistribute, DistanceMonotone };
  Type type = Type::Reclaim;
  std::vector<int> target;
  std::vector<double> fractions{0.5, 0.9, 0.99, 1.0};
  int s = 1;
  int k_max = 8;
  double epsilon = 0.1;
  std::vector<double> masses;
};

const char* to_string(ControlConfig::Type type);

struct OutputConfig {
  std::string report = "report.json";
  std::string trajectory = "trajectory.csv";
  std::string distribution = "distribution.csv";
};

struct ScenarioConfig {
  std::string name = "scenario";
  std::uint64_t seed = 0;
  int n = 2;
  std::vector<std::vector<double>> ratios;  // empty means uniform
  bool repeat_last = true;
  MatrixSpec mu;
  MatrixSpec nu;
  int level = 1;
  std::optional<std::pair<int, int>> sweep;
  ThetaKind theta = ThetaKind::bhattacharyya();
  /// Piecewise-constant kernel values, converted per level when present.
  std::optional<std::vector<std::vector<double>>> kernel_values;
  bool run_dynamics = true;
  DynamicsOptions dynamics;
  std::optional<ControlConfig> control;
  OutputConfig output;
  /// The input document with random matrices resolved to their rows.
  nlohmann::json echo;

  PartitionScheme scheme() const;
  ThetaKind theta_at(int level) const;
};

ScenarioConfig parse_scenario(const nlohmann::json& document);
ScenarioConfig load_scenario(const std::filesystem::path& path);

std::vector<std::string> builtin_scenarios();
nlohmann::json builtin_scenario_json(const std::string& name);

struct RunStages {
  bool limits = true;
  bool dynamics = true;
  bool control = true;
};

struct RunOptions {
  RunStages stages;
  /// Artifacts are written only when set.
  std::optional<std::filesystem::path> out_dir;
};

struct RunReport {
  nlohmann::json body;
  double wall_time = 0.0;
  bool checks_hold = true;
  long clamp_events = 0;

  /// Deterministic rendering; the wall time is the only varying field.
  std::string dump(bool include_wall_time = true) const;
};

RunReport run_scenario(const ScenarioConfig& config, const RunOptions& options = {});

/// Closed-form analysis at each level of [from, to].
RunReport sweep_depths(const ScenarioConfig& config, int from, int to,
                       const RunOptions& options = {});

/// Level-k measure of one opponent (or of its closed-form limit when
/// `limit` is set) for distribution-function output.
LevelMeasure scenario_measure(const ScenarioConfig& config, bool of_mu, int level, bool limit);

void write_trajectory_csv(const Trajectory& trajectory, std::ostream& out);
void write_distribution_csv(const std::vector<std::pair<double, double>>& samples,
                            std::ostream& out);

nlohmann::json to_json(const Inequality& check);

}  // namespace conflict
