#pragma once

// Difficulty estimation with the unbiased pass@k estimator and the two-stage
// curriculum: train on moderate tasks until rewards plateau, then move once
// and for all onto verified tasks that are unsolved at k = 8 yet solvable.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "forge/temperature.hpp"
#include "forge/trajectory.hpp"

namespace forge::curriculum {

/// 1 - C(n-c, k) / C(n, k), evaluated as a product in log space.
/// Throws DomainError unless 0 <= c <= n and 1 <= k <= n.
double pass_at_k(std::size_t n, std::size_t c, std::size_t k);

struct DifficultyRecord {
  TaskId task;
  std::size_t n_samples = 0;
  std::size_t n_correct = 0;
  std::map<std::size_t, double> pass_at;
  bool answer_verified = false;
  /// The environment knows a solving action sequence; certifies pass@512 > 0
  /// without drawing 512 samples.
  bool oracle_solvable = false;
};

/// Fills pass_at for every k in `ks` that does not exceed n.
DifficultyRecord make_record(TaskId task, std::size_t n, std::size_t c, bool verified, bool oracle_solvable,
                             std::span<const std::size_t> ks = {});

nlohmann::json to_json(const DifficultyRecord& record);

enum class Difficulty { too_easy, moderate, extreme, unusable };

std::string_view to_string(Difficulty d);

struct Thresholds {
  double easy = 0.9;
  std::size_t min_samples = 8;
  std::size_t probe_k = 8;
  std::size_t deep_k = 512;
};

/// Throws InsufficientSamples when n_samples < min_samples.
Difficulty classify(const DifficultyRecord& record, const Thresholds& thresholds = {});

enum class Stage { one, two };

std::string_view to_string(Stage s);

struct CurriculumState {
  Stage stage = Stage::one;
  std::vector<TaskId> stage1_pool;
  std::vector<TaskId> stage2_pool;
  std::optional<std::size_t> switch_step;
};

/// Stage one draws from moderate tasks, stage two from extreme ones.
CurriculumState build_state(std::span<const DifficultyRecord> records, const Thresholds& thresholds = {});

enum class SwitchTrigger { plateau, fixed_step };

struct SwitchPolicy {
  SwitchTrigger trigger = SwitchTrigger::plateau;
  temperature::PlateauConfig plateau;
  std::size_t fixed_step = 0;
};

/// One-way switch to stage two when the trigger fires and the stage-two pool
/// is non-empty. `reward_history` holds stage-one mean rewards.
CurriculumState maybe_switch(const CurriculumState& state, std::span<const double> reward_history,
                             std::size_t step, const SwitchPolicy& policy = {});

}  // namespace forge::curriculum
