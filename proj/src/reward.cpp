#include "forge/reward.hpp"

#include <algorithm>
#include <cctype>

namespace forge::reward {

bool calls_match(const codec::ToolCall& call, const codec::ToolCall& expected) {
  if (call.name != expected.name || call.args.size() != expected.args.size()) return false;
  return std::all_of(expected.args.begin(), expected.args.end(), [&](const auto& kv) {
    const std::string* v = call.find(kv.first);
    return v != nullptr && *v == kv.second;
  });
}

int step_reward(const codec::ToolCall& call, const GoldStep& gold) {
  try {
    codec::validate(call);
  } catch (const InvariantViolation&) {
    return 0;
  }
  return calls_match(call, gold.expected) ? 1 : 0;
}

int step_reward(const std::optional<codec::ToolCall>& call, const GoldStep& gold) {
  return call ? step_reward(*call, gold) : 0;
}

int step_reward(std::string_view assistant_output, const GoldStep& gold) {
  try {
    const auto message = codec::parse_body(codec::Role::assistant, assistant_output);
    if (message.tool_call_count() != 1) return 0;
    for (const auto& seg : message.segments)
      if (seg.kind == codec::SegmentKind::tool_call) return step_reward(seg.call(), gold);
  } catch (const FormatError&) {
  }
  return 0;
}

bool all_calls_format_correct(const Trajectory& trace) {
  return std::all_of(trace.messages.begin(), trace.messages.end(), [](const codec::Message& m) {
    return m.role != codec::Role::assistant || codec::format_correct(m);
  });
}

int trajectory_reward(const TaskId& task, const Trajectory& trace, const TaskJudgment& judgment) {
  if (trace.task_id != task || trace.halted) return 0;
  return all_calls_format_correct(trace) && judgment.completed ? 1 : 0;
}

Trajectory apply_format_penalty(Trajectory trace) {
  auto bad = std::find_if(trace.messages.begin(), trace.messages.end(), [](const codec::Message& m) {
    return m.role == codec::Role::assistant && !codec::format_correct(m);
  });
  if (bad == trace.messages.end()) return trace;
  const auto keep = static_cast<std::size_t>(bad - trace.messages.begin()) + 1;
  trace.messages.resize(keep);
  std::erase_if(trace.tokens, [&](const Token& t) { return t.message >= keep; });
  trace.halted = true;
  trace.reward = 0.0;
  if (trace.judgment) trace.judgment->completed = false;
  return trace;
}

std::string normalize_whitespace(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (char ch : s) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      pending_space = !out.empty();
    } else {
      if (pending_space) out.push_back(' ');
      pending_space = false;
      out.push_back(ch);
    }
  }
  return out;
}

int outcome_reward(std::string_view answer, std::string_view gold_answer) {
  return normalize_whitespace(answer) == normalize_whitespace(gold_answer) ? 1 : 0;
}

}  // namespace forge::reward
