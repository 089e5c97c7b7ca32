#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tcopt/scenarios.hpp"
#include "tcopt/solver.hpp"

namespace tcopt {

/// One solved run, flattened for summary.json.
struct RunSummary {
  std::string scenario;
  int n = 0;
  std::string mode;
  int iterations = 0;
  bool converged = false;
  double task_residual = 0.0;
  double proj_residual_v = 0.0;
  double proj_residual_w = 0.0;
  double cost = 0.0;
  double trajectory_task_residual = 0.0;
  std::optional<CyclicityReport> cyclicity;
  double wall_ms = 0.0;
  double dt = 0.1;
  int threads = 1;
};

// Config parsing. Loaders throw std::runtime_error naming the bad field.
KinematicChain load_chain(const std::filesystem::path& path);
KinematicChain parse_chain(const std::string& json_text);
SolverConfig load_solver_config(const std::filesystem::path& path);
TaskSpec load_task_spec(const std::filesystem::path& path);

/// Scenario file: {"id": "app1", ...overrides}. A "chain_file" entry is
/// resolved relative to the scenario file's directory.
struct ScenarioFile {
  std::string id;
  ScenarioOverrides overrides;
};
ScenarioFile load_scenario_file(const std::filesystem::path& path);

// CSV exports use %.17g so values survive a round trip bit for bit.
void write_trajectory_csv(const std::filesystem::path& path,
                          const Trajectory& trajectory);
Trajectory read_trajectory_csv(const std::filesystem::path& path);
void write_residuals_csv(const std::filesystem::path& path,
                         const std::vector<IterationReport>& reports);
void write_summary_json(const std::filesystem::path& path,
                        const RunSummary& summary);
RunSummary read_summary_json(const std::filesystem::path& path);

std::string format_double(double value);

}  // namespace tcopt
