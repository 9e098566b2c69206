#pragma once

// Function-calling rewards: strict per-step matching against an annotated
// call, end-to-end task rewards, the process format penalty, and final-answer
// accuracy. Every reward is 0 or 1.

#include <optional>
#include <string>
#include <string_view>

#include "forge/codec.hpp"
#include "forge/trajectory.hpp"

namespace forge::reward {

struct GoldStep {
  codec::ToolCall expected;
};

/// Exact match: same name, same key set, every value byte-identical.
/// Key order is ignored.
bool calls_match(const codec::ToolCall& call, const codec::ToolCall& expected);

int step_reward(const codec::ToolCall& call, const GoldStep& gold);

/// An empty optional stands for a call that failed to parse.
int step_reward(const std::optional<codec::ToolCall>& call, const GoldStep& gold);

/// Scores raw assistant output: it must parse and carry exactly one call.
int step_reward(std::string_view assistant_output, const GoldStep& gold);

bool all_calls_format_correct(const Trajectory& trace);

int trajectory_reward(const TaskId& task, const Trajectory& trace, const TaskJudgment& judgment);

/// Truncates at the first malformed call turn (keeping it), marks the trace
/// halted and zeroes its reward. Traces without a malformed turn come back
/// unchanged.
Trajectory apply_format_penalty(Trajectory partial_trace);

/// Trims the ends and collapses interior whitespace runs to one space.
std::string normalize_whitespace(std::string_view s);

int outcome_reward(std::string_view answer, std::string_view gold_answer);

}  // namespace forge::reward
