#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "forge/codec.hpp"

namespace forge {

using TaskId = std::string;

enum class Origin : std::uint8_t { environment = 0, model = 1 };

/// One action or observation symbol. `state` is the policy state a model
/// token was sampled in; `message` indexes the message the token produced.
struct Token {
  Origin origin = Origin::environment;
  std::uint32_t state = 0;
  std::uint32_t symbol = 0;
  std::uint32_t message = 0;

  friend bool operator==(const Token&, const Token&) = default;
};

enum class JudgeKind { rule, oracle };

struct TaskJudgment {
  bool completed = false;
  JudgeKind judge = JudgeKind::rule;

  friend bool operator==(const TaskJudgment&, const TaskJudgment&) = default;
};

struct Trajectory {
  TaskId task_id;
  std::uint64_t policy_version = 0;
  double temperature = 1.0;
  std::vector<codec::Message> messages;
  std::vector<Token> tokens;
  double reward = 0.0;
  bool halted = false;
  std::optional<TaskJudgment> judgment;

  /// Assistant turns that carry a tool call or failed to parse as one.
  std::size_t call_count() const;
  std::size_t model_token_count() const;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// An assistant turn is a call turn when it holds a tool call or is not
/// format-correct (a malformed attempt at one).
bool is_call_turn(const codec::Message& message);

nlohmann::json message_to_json(const codec::Message& message);
codec::Message message_from_json(const nlohmann::json& j);

/// Trajectory store record. Per-token states are not persisted; origins are.
nlohmann::json to_json(const Trajectory& trajectory);
Trajectory trajectory_from_json(const nlohmann::json& j);

}  // namespace forge
