#pragma once

// Deterministic toy environments with verifiable rewards.
//
// Tool world: a multi-step workflow. The user message carries a hint, and
// each correct call returns the hint for the next stage. The correct call at
// a stage is a fixed function of (stage, hint) shared by every task of the
// world, so a tabular policy can generalize across tasks. A wrong call ends
// the episode.
//
// Search world: a tree of pages with one target leaf holding the answer.
// Pages report whether the target lies below them. The agent opens children,
// goes back, or submits; when it stops, the answer is whatever target page it
// has read, otherwise a uniform guess among the leaves.
//
// One model token is one action symbol. Actions are rendered through the
// function-call template and parsed back, so the format penalty applies.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "forge/codec.hpp"
#include "forge/policy.hpp"
#include "forge/reward.hpp"
#include "forge/trajectory.hpp"

namespace forge::worlds {

struct ToolWorldParams {
  std::size_t num_actions = 4;
  std::size_t num_hints = 4;
  std::size_t max_stages = 6;
  std::uint64_t world_seed = 7;
};

struct ToolWorldTask {
  TaskId id;
  /// Concrete calls the agent may emit; action symbol i renders vocabulary[i].
  std::vector<codec::ToolCall> vocabulary;
  /// Hint shown before each stage.
  std::vector<std::size_t> hints;
  std::vector<reward::GoldStep> gold;
  bool verified = true;
  bool oracle_solvable = true;
};

struct SearchWorldParams {
  std::size_t branching = 4;
  std::size_t depth = 2;
};

struct SearchWorldTask {
  TaskId id;
  std::size_t branching = 4;
  std::size_t depth = 2;
  /// Child index at each level on the way to the target.
  std::vector<std::size_t> target_path;
  /// One answer string per leaf, leaves in depth-first order.
  std::vector<std::string> leaf_answers;
  std::string question;

  std::size_t leaf_count() const { return leaf_answers.size(); }
  std::size_t target_leaf() const;
  const std::string& answer() const { return leaf_answers[target_leaf()]; }
};

struct Task {
  std::variant<ToolWorldTask, SearchWorldTask> body;

  const TaskId& id() const;
  bool verified() const;
  bool oracle_solvable() const;
  bool is_tool() const { return std::holds_alternative<ToolWorldTask>(body); }
  std::size_t num_actions() const;
  /// Model turns the oracle needs.
  std::size_t required_turns() const;
};

enum class WorldKind { tool, search };

std::string_view to_string(WorldKind kind);
WorldKind world_kind_from_string(std::string_view name);

/// Correct action index for (stage, hint) in the tool world.
std::size_t tool_gold_action(const ToolWorldParams& params, std::size_t stage, std::size_t hint);

/// Concrete call catalog of the tool world, first `num_actions` entries.
std::vector<codec::ToolCall> tool_vocabulary(std::size_t num_actions);
std::vector<codec::ToolSchema> tool_schemas();

/// Tasks with workflow lengths drawn uniformly from [min_length, max_length].
/// A fraction of tasks is marked as having an unverified answer.
std::vector<Task> generate_tool_tasks(const ToolWorldParams& params, std::size_t n, std::uint64_t seed,
                                      std::size_t min_length, std::size_t max_length,
                                      double unverified_fraction = 0.0, std::string_view id_prefix = "tool");

std::vector<Task> generate_search_tasks(const SearchWorldParams& params, std::size_t n, std::uint64_t seed,
                                        std::string_view id_prefix = "search");

nlohmann::json to_json(const Task& task);
Task task_from_json(const nlohmann::json& j);

struct RolloutOptions {
  /// Sampling temperature; 0 decodes greedily.
  double temperature = 1.0;
  std::size_t max_turns = 8;
  /// Generation length cap in tokens (model and environment).
  std::size_t max_length = 64;
  /// Probability that a rendered action is corrupted into malformed text.
  double corrupt_rate = 0.0;
  /// Number of trailing history items hashed into the policy state.
  std::size_t history = 2;
};

/// Chooses an action given the hashed policy state and the turn index.
using Decider = std::function<std::size_t(std::size_t state, std::size_t turn, Rng& rng)>;

Decider policy_decider(const TabularPolicy& policy, double temperature);
/// Replays the known solution: gold calls in the tool world, the target path
/// then submit in the search world.
Decider oracle_decider(const Task& task);
Decider uniform_decider(std::size_t num_actions);

Trajectory rollout(const Task& task, const Decider& decide, std::size_t num_states, const RolloutOptions& options,
                   std::uint64_t seed);
Trajectory rollout(const Task& task, const TabularPolicy& policy, const RolloutOptions& options, std::uint64_t seed);

/// Rule judge over the stored messages: the tool workflow completed in full,
/// or the final answer equals the target answer.
TaskJudgment judge(const Task& task, const Trajectory& trace);

/// Reward recomputed from the trajectory's messages alone.
double rescore(const Task& task, const Trajectory& trace);

/// Final answer of a search trajectory, empty if none was given.
std::string final_answer(const Trajectory& trace);

struct SweepOptions {
  std::size_t samples_per_task = 8;
  double temperature = 1.0;
  std::size_t max_length = 1024;
  std::size_t history = 2;
  std::uint64_t seed = 0;
};

/// Mean reward per turn budget. Every budget replays the same seeds, so a
/// larger budget sees an extension of the same episode.
std::vector<double> turn_budget_sweep(const std::vector<Task>& tasks, const Decider& decide, std::size_t num_states,
                                      const std::vector<std::size_t>& budgets, const SweepOptions& options);
std::vector<double> turn_budget_sweep(const std::vector<Task>& tasks, const TabularPolicy& policy,
                                      const std::vector<std::size_t>& budgets, const SweepOptions& options);

/// Hash of the last `history` items into [0, num_states).
std::size_t hash_state(const std::vector<std::uint64_t>& items, std::size_t history, std::size_t num_states);

}  // namespace forge::worlds
