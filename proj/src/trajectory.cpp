#include "forge/trajectory.hpp"

#include <algorithm>

namespace forge {

using nlohmann::json;

bool is_call_turn(const codec::Message& message) {
  if (message.role != codec::Role::assistant) return false;
  return message.tool_call_count() > 0 || !codec::format_correct(message);
}

std::size_t Trajectory::call_count() const {
  return static_cast<std::size_t>(std::count_if(messages.begin(), messages.end(), is_call_turn));
}

std::size_t Trajectory::model_token_count() const {
  return static_cast<std::size_t>(
      std::count_if(tokens.begin(), tokens.end(), [](const Token& t) { return t.origin == Origin::model; }));
}

json message_to_json(const codec::Message& message) {
  json segments = json::array();
  for (const auto& seg : message.segments) {
    json s;
    s["kind"] = codec::to_string(seg.kind);
    if (seg.kind == codec::SegmentKind::tool_call) {
      s["name"] = seg.call().name;
      json args = json::array();
      for (const auto& [k, v] : seg.call().args) args.push_back(json::array({k, v}));
      s["args"] = std::move(args);
    } else {
      s["text"] = seg.str();
    }
    segments.push_back(std::move(s));
  }
  return json{{"role", codec::to_string(message.role)}, {"segments", std::move(segments)}};
}

codec::Message message_from_json(const json& j) {
  codec::Message m;
  m.role = codec::role_from_string(j.at("role").get<std::string>());
  for (const auto& s : j.at("segments")) {
    const auto kind = codec::segment_kind_from_string(s.at("kind").get<std::string>());
    if (kind == codec::SegmentKind::tool_call) {
      codec::ToolCall call;
      call.name = s.at("name").get<std::string>();
      for (const auto& kv : s.at("args")) call.args.emplace_back(kv.at(0).get<std::string>(), kv.at(1).get<std::string>());
      m.segments.push_back(codec::Segment::tool_call(std::move(call)));
    } else {
      m.segments.push_back(codec::Segment{kind, s.at("text").get<std::string>()});
    }
  }
  return m;
}

json to_json(const Trajectory& t) {
  json messages = json::array();
  for (const auto& m : t.messages) messages.push_back(message_to_json(m));
  json origins = json::array();
  for (const auto& tok : t.tokens) origins.push_back(tok.origin == Origin::model ? 1 : 0);
  json j{{"task_id", t.task_id},
         {"policy_version", t.policy_version},
         {"temperature", t.temperature},
         {"messages", std::move(messages)},
         {"token_origins", std::move(origins)},
         {"reward", t.reward},
         {"halted", t.halted}};
  if (t.judgment) {
    j["judgment"] = json{{"completed", t.judgment->completed},
                         {"judge", t.judgment->judge == JudgeKind::rule ? "rule" : "oracle"}};
  }
  return j;
}

Trajectory trajectory_from_json(const json& j) {
  Trajectory t;
  t.task_id = j.at("task_id").get<std::string>();
  t.policy_version = j.at("policy_version").get<std::uint64_t>();
  t.temperature = j.at("temperature").get<double>();
  for (const auto& m : j.at("messages")) t.messages.push_back(message_from_json(m));
  for (const auto& o : j.at("token_origins")) t.tokens.push_back(Token{o.get<int>() != 0 ? Origin::model : Origin::environment});
  t.reward = j.at("reward").get<double>();
  t.halted = j.at("halted").get<bool>();
  if (auto it = j.find("judgment"); it != j.end()) {
    t.judgment = TaskJudgment{it->at("completed").get<bool>(),
                              it->at("judge").get<std::string>() == "rule" ? JudgeKind::rule : JudgeKind::oracle};
  }
  return t;
}

}  // namespace forge
