#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "forge/codec.hpp"
#include "forge/reward.hpp"
#include "reward_cases.hpp"

using namespace forge;
using namespace forge::codec;

namespace {

Message good_call(int i) {
  return {Role::assistant, {Segment::tool_call({"step", {{"n", std::to_string(i)}}})}};
}

Message bad_call(int i) {
  return {Role::assistant, {Segment::text("<tool_cal>step\n<arg_key>n</arg_key>\n<arg_value>" + std::to_string(i) +
                                          "</arg_value>\n</tool_call>")}};
}

// user, then four call turns each answered by an observation.
Trajectory four_calls(int bad_index) {
  Trajectory t;
  t.task_id = "t";
  t.reward = 1.0;
  t.messages.push_back({Role::user, {Segment::text("go")}});
  t.tokens.push_back({Origin::environment, 0, 0, 0});
  for (int i = 0; i < 4; ++i) {
    t.messages.push_back(i == bad_index ? bad_call(i) : good_call(i));
    t.tokens.push_back({Origin::model, 1, static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(t.messages.size() - 1)});
    t.messages.push_back({Role::observation, {Segment::tool_response("ok")}});
    t.tokens.push_back({Origin::environment, 0, 9, static_cast<std::uint32_t>(t.messages.size() - 1)});
  }
  t.judgment = TaskJudgment{true, JudgeKind::rule};
  return t;
}

}  // namespace

TEST_CASE("step reward truth table") {
  const auto cases = test::reward_cases();
  REQUIRE(cases.size() == 30);
  for (std::size_t i = 0; i < cases.size(); ++i) {
    INFO(cases[i].name);
    CHECK(reward::step_reward(cases[i].output, test::gold_for_case(i)) == cases[i].expected);
  }
}

TEST_CASE("step reward is symmetric under key order") {
  const ToolCall a{"f", {{"x", "1"}, {"y", "2"}, {"z", "3"}}};
  const ToolCall b{"f", {{"z", "3"}, {"x", "1"}, {"y", "2"}}};
  CHECK(reward::step_reward(a, {b}) == 1);
  CHECK(reward::step_reward(b, {a}) == 1);
  CHECK(reward::step_reward(std::optional<ToolCall>{}, {a}) == 0);
}

TEST_CASE("format penalty truncates at the first malformed call") {
  SUBCASE("second of four") {
    const auto t = reward::apply_format_penalty(four_calls(1));
    CHECK(t.call_count() == 2);
    CHECK(t.messages.size() == 4);
    CHECK(t.halted);
    CHECK(t.reward == 0.0);
    for (const auto& tok : t.tokens) CHECK(tok.message < t.messages.size());
    CHECK(reward::trajectory_reward("t", t, *t.judgment) == 0);
  }
  SUBCASE("first call") {
    const auto t = reward::apply_format_penalty(four_calls(0));
    CHECK(t.call_count() == 1);
    CHECK(t.halted);
    CHECK(t.reward == 0.0);
  }
  SUBCASE("well-formed trace is unchanged") {
    const auto t = four_calls(-1);
    CHECK(reward::apply_format_penalty(t) == t);
  }
}

TEST_CASE("trajectory reward") {
  const auto ok = four_calls(-1);
  CHECK(reward::trajectory_reward("t", ok, {true, JudgeKind::rule}) == 1);
  CHECK(reward::trajectory_reward("t", ok, {false, JudgeKind::rule}) == 0);
  CHECK(reward::trajectory_reward("other", ok, {true, JudgeKind::rule}) == 0);
  // A malformed call zeroes the reward even before the penalty is applied.
  CHECK(reward::trajectory_reward("t", four_calls(3), {true, JudgeKind::rule}) == 0);
  auto halted = ok;
  halted.halted = true;
  CHECK(reward::trajectory_reward("t", halted, {true, JudgeKind::rule}) == 0);
}

TEST_CASE("outcome reward normalizes whitespace only") {
  CHECK(reward::outcome_reward("  Paris\n", "Paris") == 1);
  CHECK(reward::outcome_reward("New   York", "New York") == 1);
  CHECK(reward::outcome_reward("paris", "Paris") == 0);
  CHECK(reward::outcome_reward("", "Paris") == 0);
  CHECK(reward::normalize_whitespace("\t a \n b  ") == "a b");
}
