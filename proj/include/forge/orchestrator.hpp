#pragma once

// Policy snapshots, the trainer loop and rollout workers.
//
// colocated_sync: each step the trainer generates rollouts for its current
// version in chunks of `batch_groups` slots, then takes a batch.
// disaggregated_async: worker threads pull the newest snapshot and fill slots
// of that version while the trainer consumes groups up to `max_lag` versions
// old. Both modes share slot seeding and batch selection, so async with
// max_lag 0 reproduces sync exactly.

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stop_token>
#include <string>
#include <vector>

#include <json.hpp>

#include "forge/buffer.hpp"
#include "forge/curriculum.hpp"
#include "forge/grpo.hpp"
#include "forge/policy.hpp"
#include "forge/quantize.hpp"
#include "forge/temperature.hpp"
#include "forge/worlds.hpp"

namespace forge::orchestrator {

enum class Mode { colocated_sync, disaggregated_async };

std::string_view to_string(Mode mode);
Mode mode_from_string(std::string_view name);

enum class CurriculumMode { none, static_moderate, two_stage };

std::string_view to_string(CurriculumMode mode);
CurriculumMode curriculum_mode_from_string(std::string_view name);

struct CurriculumConfig {
  CurriculumMode mode = CurriculumMode::none;
  /// Rollouts per task under the initial policy when estimating difficulty.
  std::size_t samples = 64;
  curriculum::Thresholds thresholds;
  curriculum::SwitchPolicy switch_policy;
  /// Steps averaged into one plateau history entry.
  std::size_t plateau_every = 1;
};

struct TemperatureConfig {
  bool enabled = false;
  double initial = 1.0;
  std::vector<double> candidates{0.6, 0.8, 1.0, 1.2, 1.4};
  /// Steps between temperature checks.
  std::size_t eval_every = 200;
  /// Only re-select when validation reward has plateaued.
  bool require_plateau = true;
  temperature::PlateauConfig plateau;
  std::size_t plateau_every = 1;
  std::size_t eval_samples = 8;
};

struct LengthStage {
  std::size_t step = 0;
  std::size_t max_length = 0;
};

struct RunConfig {
  Mode mode = Mode::colocated_sync;
  std::uint64_t seed = 0;
  std::size_t steps = 100;
  std::size_t group_size = 8;
  std::size_t batch_groups = 4;
  /// Slots generated per version before a short batch is accepted; 0 means 4 * batch_groups.
  std::size_t max_slots_per_step = 0;
  std::size_t max_lag = 0;
  std::size_t workers = 4;
  std::size_t buffer_capacity = 32;
  std::chrono::milliseconds poll_interval{5};
  std::size_t max_retries = 2;

  grpo::LossMode loss_mode = grpo::LossMode::token_weighted;
  grpo::AdvantageOptions advantage;
  double learning_rate = 0.1;
  bool filter_zero_variance = true;

  std::size_t max_turns = 8;
  std::size_t max_length = 64;
  /// Optional growth of max_length over training; empty keeps it fixed.
  std::vector<LengthStage> length_schedule;
  std::size_t history = 2;
  double corrupt_rate = 0.0;

  bool quantize_rollouts = false;
  std::size_t quant_block = 128;

  CurriculumConfig curriculum;
  TemperatureConfig temperature;

  std::size_t slots_per_step() const { return max_slots_per_step ? max_slots_per_step : 4 * batch_groups; }
  std::size_t max_length_at(std::size_t step) const;
  /// Throws ConfigError naming the first inconsistent field.
  void validate() const;
};

struct TrainerState {
  TabularPolicy policy;
  std::uint64_t version = 0;
  double temperature = 1.0;
  curriculum::Stage stage = curriculum::Stage::one;
  std::size_t max_length = 64;
};

/// Immutable view of the trainer's policy handed to rollout workers.
struct PolicySnapshot {
  std::uint64_t version = 0;
  std::vector<double> params;
  std::optional<quant::QuantizedParams> quantized;
  /// The policy workers sample from (dequantized when quantization is on).
  TabularPolicy rollout_policy;
  double temperature = 1.0;
  curriculum::Stage stage = curriculum::Stage::one;
  std::size_t max_length = 64;
};

using SnapshotPtr = std::shared_ptr<const PolicySnapshot>;

/// Builds a snapshot of `state` at its current version.
SnapshotPtr make_snapshot(const TrainerState& state, bool quantize, std::size_t block_size);

/// Increments the state's version and returns its snapshot.
SnapshotPtr publish_snapshot(TrainerState& state, bool quantize, std::size_t block_size);

class SnapshotStore {
 public:
  void publish(SnapshotPtr snapshot);
  SnapshotPtr latest() const;
  /// Waits until a version newer than `version` is published, `stop` fires or
  /// `timeout` passes; returns the latest snapshot either way.
  SnapshotPtr wait_newer(std::uint64_t version, std::stop_token stop, std::chrono::milliseconds timeout) const;
  /// Records the first time a worker picked up `version`.
  void note_observed(std::uint64_t version);
  /// Largest delay between a publish and its first pickup.
  std::chrono::microseconds max_observe_delay() const;
  void notify_all();

 private:
  using Clock = std::chrono::steady_clock;
  mutable std::mutex mutex_;
  mutable std::condition_variable_any published_;
  SnapshotPtr latest_;
  std::map<std::uint64_t, Clock::time_point> published_at_;
  std::chrono::microseconds max_delay_{0};
};

struct TaskPools {
  std::vector<worlds::Task> tasks;
  std::vector<std::size_t> stage1;
  std::vector<std::size_t> stage2;
};

/// Groups a snapshot would produce for a slot; identical in every mode.
grpo::Group make_group(const RunConfig& config, const TaskPools& pools, const PolicySnapshot& snapshot,
                       std::uint64_t slot);

struct StepMetrics {
  std::size_t step = 0;
  std::uint64_t version = 0;
  double mean_reward = 0.0;
  double loss = 0.0;
  grpo::LossMode loss_mode = grpo::LossMode::token_weighted;
  double temperature = 1.0;
  curriculum::Stage stage = curriculum::Stage::one;
  std::size_t buffer_size = 0;
  std::uint64_t max_staleness = 0;
  std::size_t groups = 0;
};

nlohmann::json to_json(const StepMetrics& m);

struct TemperatureDecision {
  std::size_t step = 0;
  double chosen = 1.0;
  std::map<double, double> scores;
};

struct RunReport {
  std::size_t steps_completed = 0;
  std::uint64_t final_version = 0;
  std::vector<StepMetrics> metrics;
  std::optional<std::size_t> stage_switch_step;
  std::vector<TemperatureDecision> temperature_decisions;
  std::vector<curriculum::DifficultyRecord> difficulty;
  std::vector<double> final_params;
  double final_temperature = 1.0;
  std::uint64_t max_staleness = 0;
  std::chrono::microseconds max_observe_delay{0};
  std::optional<std::string> error;

  bool ok() const { return !error.has_value(); }
};

struct RunHooks {
  std::function<void(const PolicySnapshot&)> on_publish;
  std::function<void(const StepMetrics&)> on_metrics;
  /// Called with every group the trainer consumes.
  std::function<void(std::size_t step, const grpo::Group&)> on_group;
  /// Called before each rollout attempt; throwing simulates a crash.
  std::function<void(std::uint64_t version, std::uint64_t slot, std::size_t attempt)> before_rollout;
  /// Called before each trainer step; throwing aborts the run.
  std::function<void(std::size_t step)> before_step;
  std::vector<GroupFilter> filters;
};

struct RunInputs {
  std::vector<worlds::Task> train;
  /// Used for temperature selection.
  std::vector<worlds::Task> validation;
  TabularPolicy initial;
};

/// Trains `inputs.initial` on `inputs.train`. Trainer failures end the run
/// with `error` set rather than throwing; configuration problems throw.
RunReport run(const RunConfig& config, const RunInputs& inputs, const RunHooks& hooks = {});

/// Difficulty records from `samples` rollouts per task under `policy`.
std::vector<curriculum::DifficultyRecord> estimate_difficulty(const std::vector<worlds::Task>& tasks,
                                                              const TabularPolicy& policy,
                                                              const worlds::RolloutOptions& options,
                                                              std::size_t samples, std::uint64_t seed);

/// Mean reward of `policy` on `tasks`, `samples` rollouts each.
double evaluate(const std::vector<worlds::Task>& tasks, const TabularPolicy& policy,
                const worlds::RolloutOptions& options, std::size_t samples, std::uint64_t seed);

struct DistillOptions {
  double threshold = 1.0;
  std::size_t samples_per_task = 8;
  std::size_t epochs = 500;
  double learning_rate = 4.0;
  worlds::RolloutOptions rollout;
  std::uint64_t seed = 0;
};

struct DistillResult {
  TabularPolicy policy;
  std::vector<Trajectory> pool;
  /// Mean per-token log-likelihood of the pool before and after cloning.
  double log_likelihood_before = 0.0;
  double log_likelihood_after = 0.0;
};

/// Collects trajectories with reward >= threshold and behavior-clones them
/// into a fresh policy. Throws EmptyDistillPool when nothing qualifies.
DistillResult distill_round(const TabularPolicy& policy, const std::vector<worlds::Task>& tasks,
                            const DistillOptions& options);

}  // namespace forge::orchestrator
