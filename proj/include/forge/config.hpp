#pragma once

// Experiment configuration: the run settings plus world generation,
// evaluation and distillation. Parsing is strict; an unknown key is an error
// that names the key by its dotted path.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "forge/orchestrator.hpp"
#include "forge/worlds.hpp"

namespace forge::config {

struct WorldConfig {
  worlds::WorldKind kind = worlds::WorldKind::tool;
  worlds::ToolWorldParams tool;
  worlds::SearchWorldParams search;
  std::uint64_t task_seed = 1;
  std::size_t train_tasks = 64;
  std::size_t validation_tasks = 16;
  std::size_t held_out_tasks = 32;
  /// Tool-world workflow lengths for training and validation tasks.
  std::size_t min_length = 1;
  std::size_t max_length = 4;
  /// Tool-world workflow lengths for the held-out set.
  std::size_t held_out_min_length = 1;
  std::size_t held_out_max_length = 4;
  double unverified_fraction = 0.0;
  std::size_t num_states = 4096;
};

struct EvalConfig {
  std::vector<std::size_t> budgets{1, 2, 4, 8};
  std::size_t samples_per_task = 8;
  double temperature = 1.0;
  std::uint64_t seed = 17;
};

struct DistillConfig {
  /// Distill-then-RL rounds after the first RL phase.
  std::size_t rounds = 0;
  double threshold = 1.0;
  std::size_t samples_per_task = 8;
  std::size_t epochs = 500;
  double learning_rate = 4.0;
};

struct ExperimentConfig {
  orchestrator::RunConfig run;
  WorldConfig world;
  EvalConfig eval;
  DistillConfig distill;
  std::string out_dir = "runs/default";
  /// Write consumed trajectories every this many steps; 0 disables.
  std::size_t log_trajectories_every = 10;
};

nlohmann::json to_json(const ExperimentConfig& config);

/// Throws ConfigError on unknown keys, wrong types or invalid values.
ExperimentConfig from_json(const nlohmann::json& j);

ExperimentConfig load(const std::filesystem::path& path);

}  // namespace forge::config
