#pragma once

// End-to-end experiment: generate tasks, run RL (and optional distill-then-RL
// rounds), evaluate on the held-out set and write the output directory:
//   config.json        the full config, re-runnable as is
//   tasks.jsonl        every generated task, one record per line
//   difficulty.jsonl   pass@k records when a curriculum is used
//   trajectories.jsonl sampled consumed trajectories
//   metrics.jsonl      one record per trainer step
//   policy.json        final parameters
//   report.json        summary

#include <filesystem>
#include <map>
#include <optional>
#include <vector>

#include <json.hpp>

#include "forge/config.hpp"
#include "forge/orchestrator.hpp"
#include "forge/worlds.hpp"

namespace forge::experiment {

struct TaskSets {
  std::vector<worlds::Task> train;
  std::vector<worlds::Task> validation;
  std::vector<worlds::Task> held_out;
};

TaskSets make_tasks(const config::WorldConfig& world);

struct DistillSummary {
  std::size_t round = 0;
  std::size_t pool_size = 0;
  double log_likelihood_before = 0.0;
  double log_likelihood_after = 0.0;
  double held_out_before = 0.0;
  double held_out_after = 0.0;
};

struct Result {
  std::vector<orchestrator::RunReport> phases;
  std::vector<DistillSummary> distill;
  std::vector<double> params;
  /// Accuracy on the held-out set per evaluation budget.
  std::map<std::size_t, double> accuracy;
  double held_out_reward = 0.0;
  std::optional<std::string> error;
};

nlohmann::json to_json(const Result& result);

/// Runs the experiment. When `out` is set, files are written there.
Result run(const config::ExperimentConfig& config, const std::optional<std::filesystem::path>& out);

nlohmann::json policy_to_json(const TabularPolicy& policy);
TabularPolicy policy_from_json(const nlohmann::json& j);

}  // namespace forge::experiment
