#include "forge/worlds.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "forge/error.hpp"
#include "forge/rng.hpp"

namespace forge::worlds {

namespace {

using codec::Message;
using codec::Role;
using codec::Segment;
using codec::ToolCall;

constexpr std::uint64_t kActionItem = 1ULL << 40;
constexpr std::uint64_t kObservationItem = 2ULL << 40;

constexpr std::uint32_t kToolDone = 1;
constexpr std::uint32_t kToolError = 2;
constexpr std::uint32_t kToolStageBase = 100;

constexpr std::uint32_t kSearchInvalid = 999;
constexpr std::uint32_t kSearchPageBase = 1000;

const std::vector<std::string_view>& hint_words() {
  static const std::vector<std::string_view> words{"amber", "birch", "cobalt", "dune",  "ember", "fjord",
                                                   "garnet", "harbor", "indigo", "juniper", "kelp", "lumen",
                                                   "marble", "nectar", "onyx",  "prairie"};
  return words;
}

const std::vector<ToolCall>& catalog() {
  static const std::vector<ToolCall> calls{
      {"get_weather", {{"city", "Beijing"}, {"date", "2024-06-27"}}},
      {"get_weather", {{"city", "Shanghai"}, {"date", "2024-06-27"}}},
      {"book_ticket", {{"from", "Beijing"}, {"to", "Shanghai"}, {"date", "2024-06-27"}}},
      {"run_code", {{"code", "print(\"hello\")"}}},
      {"send_message", {{"to", "ops"}, {"body", "Weather report:\n\"sunny\", 26C"}}},
      {"convert_currency", {{"amount", "100"}, {"from", "CNY"}, {"to", "USD"}}},
      {"lookup_user", {{"id", "42"}}},
      {"create_event", {{"title", "Standup"}, {"time", "09:30"}}},
  };
  return calls;
}

std::string tool_prompt(std::size_t hint) {
  return "Complete the workflow with one tool call per step. Stage 0 hint: " + std::string(hint_words()[hint]) + ".";
}

std::uint32_t tool_stage_symbol(std::size_t stage, std::size_t hint) {
  return kToolStageBase + static_cast<std::uint32_t>(stage * hint_words().size() + hint);
}


std::size_t sample_at(std::span<const double> logits, double temperature, Rng& rng) {
  const double top = *std::max_element(logits.begin(), logits.end()) / temperature;
  std::vector<double> w(logits.size());
  double total = 0.0;
  for (std::size_t a = 0; a < logits.size(); ++a) total += w[a] = std::exp(logits[a] / temperature - top);
  double u = rng.uniform() * total;
  for (std::size_t a = 0; a + 1 < w.size(); ++a) {
    if (u < w[a]) return a;
    u -= w[a];
  }
  return w.size() - 1;
}

std::string corrupt(std::string text, Rng& rng) {
  auto replace_first = [&](std::string_view from, std::string_view to) {
    auto pos = text.find(from);
    if (pos == std::string::npos) return false;
    text.replace(pos, from.size(), to);
    return true;
  };
  switch (rng.below(3)) {
    case 0:
      if (replace_first("<arg_value>", "<arg_val>")) break;
      [[fallthrough]];
    case 1:
      if (text.ends_with("</tool_call>")) {
        text.resize(text.size() - std::string_view("</tool_call>").size());
        break;
      }
      [[fallthrough]];
    default:
      replace_first("<tool_call>", "<tool_cal>");
      break;
  }
  return text;
}

// Episode bookkeeping shared by both worlds.
class Episode {
 public:
  Episode(const Task& task, const Decider& decide, std::size_t num_states, const RolloutOptions& options,
          std::uint64_t seed)
      : decide_(decide), num_states_(num_states), options_(options), rng_(mix_seed({seed, 1})) {
    trace_.task_id = task.id();
    trace_.temperature = options.temperature;
  }

  void observe(Message message, std::uint32_t symbol) {
    trace_.tokens.push_back(Token{Origin::environment, 0, symbol, next_index()});
    trace_.messages.push_back(std::move(message));
    items_.push_back(kObservationItem | symbol);
  }

  bool budget_left(std::size_t turn) const {
    return turn < options_.max_turns && trace_.tokens.size() < options_.max_length;
  }

  /// Samples an action, renders it (possibly corrupted) and records the
  /// parsed turn. Returns the parsed call, or nullopt after a format penalty.
  std::optional<ToolCall> act(std::size_t turn, const std::function<ToolCall(std::size_t)>& to_call,
                              std::size_t& action) {
    const auto state = hash_state(items_, options_.history, num_states_);
    action = decide_(state, turn, rng_);
    const ToolCall call = to_call(action);
    std::string text = codec::render_body(Message{Role::assistant, {Segment::tool_call(call)}});
    const bool corrupted = rng_.uniform() < options_.corrupt_rate;
    if (corrupted) text = corrupt(std::move(text), rng_);
    Message parsed;
    try {
      parsed = codec::parse_body(Role::assistant, text);
    } catch (const FormatError&) {
      parsed = Message{Role::assistant, {Segment::text(text)}};
    }
    trace_.tokens.push_back(Token{Origin::model, static_cast<std::uint32_t>(state), static_cast<std::uint32_t>(action),
                                  next_index()});
    trace_.messages.push_back(parsed);
    items_.push_back(kActionItem | action);
    if (!codec::format_correct(parsed) || parsed.tool_call_count() != 1) {
      trace_ = reward::apply_format_penalty(std::move(trace_));
      trace_.halted = true;
      return std::nullopt;
    }
    return parsed.segments.front().call();
  }

  Trajectory& trace() { return trace_; }

 private:
  std::uint32_t next_index() const { return static_cast<std::uint32_t>(trace_.messages.size()); }

  const Decider& decide_;
  std::size_t num_states_;
  RolloutOptions options_;
  Rng rng_;
  Trajectory trace_;
  std::vector<std::uint64_t> items_;
};

Message tool_response(std::string text) {
  return Message{Role::observation, {Segment::tool_response(std::move(text))}};
}

void rollout_tool(const ToolWorldTask& task, Episode& ep) {
  ep.observe(Message{Role::user, {Segment::text(tool_prompt(task.hints.front()))}},
             tool_stage_symbol(0, task.hints.front()));
  std::size_t stage = 0;
  for (std::size_t turn = 0; ep.budget_left(turn); ++turn) {
    std::size_t action = 0;
    auto call = ep.act(turn, [&](std::size_t a) { return task.vocabulary.at(a); }, action);
    if (!call) return;
    if (reward::step_reward(*call, task.gold[stage]) == 1) {
      ++stage;
      if (stage == task.gold.size()) {
        ep.observe(tool_response("{\"status\": \"done\", \"stage\": " + std::to_string(stage) + "}"), kToolDone);
        return;
      }
      const auto hint = task.hints[stage];
      ep.observe(tool_response("{\"status\": \"ok\", \"stage\": " + std::to_string(stage) + ", \"hint\": \"" +
                               std::string(hint_words()[hint]) + "\"}"),
                 tool_stage_symbol(stage, hint));
    } else {
      ep.observe(tool_response("{\"status\": \"error\", \"stage\": " + std::to_string(stage) +
                               ", \"reason\": \"unexpected call\"}"),
                 kToolError);
      return;
    }
  }
}

struct PageView {
  std::string text;
  std::uint32_t symbol;
};

class SearchNavigator {
 public:
  explicit SearchNavigator(const SearchWorldTask& task) : task_(task) {}

  PageView page(std::optional<std::size_t> came_from) const {
    const bool leaf = path_.size() == task_.depth;
    const bool relevant = std::equal(path_.begin(), path_.end(), task_.target_path.begin());
    const auto b = task_.branching;
    const std::uint32_t symbol =
        kSearchPageBase +
        static_cast<std::uint32_t>((((path_.size() * 2 + relevant) * 2 + leaf) * (b + 1)) + (came_from ? *came_from + 1 : 0));
    std::string where = "/";
    for (std::size_t i = 0; i < path_.size(); ++i) where += (i ? "/" : "") + std::to_string(path_[i]);
    std::string text = "Page " + where + ": ";
    if (leaf) {
      text += "archive entry, code " + task_.leaf_answers[leaf_index()] + ".";
      text += relevant ? " This entry carries the marker you are looking for." : " No marker on this entry.";
    } else {
      text += std::to_string(b) + " links.";
      text += relevant ? " The marked entry is filed below this page." : " Nothing below this page is marked.";
    }
    return {text, symbol};
  }

  bool at_target() const { return path_ == task_.target_path; }
  bool at_leaf() const { return path_.size() == task_.depth; }
  bool at_root() const { return path_.empty(); }

  void open(std::size_t child) { path_.push_back(child); }
  std::size_t back() {
    const auto child = path_.back();
    path_.pop_back();
    return child;
  }

 private:
  std::size_t leaf_index() const {
    std::size_t idx = 0;
    for (auto c : path_) idx = idx * task_.branching + c;
    return idx;
  }

  const SearchWorldTask& task_;
  std::vector<std::size_t> path_;
};

void rollout_search(const SearchWorldTask& task, Episode& ep, std::uint64_t seed) {
  Rng guess_rng(mix_seed({seed, 2}));
  const std::string guess = task.leaf_answers[guess_rng.below(task.leaf_count())];
  std::optional<std::string> found;
  SearchNavigator nav(task);
  const auto root = nav.page(std::nullopt);
  ep.observe(Message{Role::user, {Segment::text(task.question + "\n" + root.text)}}, root.symbol);

  const std::size_t b = task.branching;
  auto answer = [&] { return found ? *found : guess; };
  auto to_call = [&](std::size_t a) -> ToolCall {
    if (a < b) return {"open_page", {{"index", std::to_string(a)}}};
    if (a == b) return {"go_back", {}};
    return {"submit_answer", {{"answer", answer()}}};
  };

  for (std::size_t turn = 0; ep.budget_left(turn); ++turn) {
    std::size_t action = 0;
    if (!ep.act(turn, to_call, action)) return;
    if (action == b + 1) return;
    std::optional<std::size_t> came_from;
    if (action < b) {
      if (nav.at_leaf()) {
        ep.observe(tool_response("No links on this page."), kSearchInvalid);
        continue;
      }
      nav.open(action);
    } else {
      if (nav.at_root()) {
        ep.observe(tool_response("Already at the start page."), kSearchInvalid);
        continue;
      }
      came_from = nav.back();
    }
    const auto view = nav.page(came_from);
    if (nav.at_target()) found = task.answer();
    ep.observe(tool_response(view.text), view.symbol);
  }
  ep.trace().messages.push_back(Message{Role::assistant, {Segment::text(answer())}});
}

}  // namespace

std::size_t SearchWorldTask::target_leaf() const {
  std::size_t idx = 0;
  for (auto c : target_path) idx = idx * branching + c;
  return idx;
}

const TaskId& Task::id() const {
  return std::visit([](const auto& t) -> const TaskId& { return t.id; }, body);
}

bool Task::verified() const {
  if (const auto* t = std::get_if<ToolWorldTask>(&body)) return t->verified;
  return true;
}

bool Task::oracle_solvable() const {
  if (const auto* t = std::get_if<ToolWorldTask>(&body)) return t->oracle_solvable;
  return true;
}

std::size_t Task::num_actions() const {
  if (const auto* t = std::get_if<ToolWorldTask>(&body)) return t->vocabulary.size();
  return std::get<SearchWorldTask>(body).branching + 2;
}

std::size_t Task::required_turns() const {
  if (const auto* t = std::get_if<ToolWorldTask>(&body)) return t->gold.size();
  return std::get<SearchWorldTask>(body).depth + 1;
}

std::string_view to_string(WorldKind kind) { return kind == WorldKind::tool ? "tool" : "search"; }

WorldKind world_kind_from_string(std::string_view name) {
  if (name == "tool") return WorldKind::tool;
  if (name == "search") return WorldKind::search;
  throw DomainError("unknown world '" + std::string(name) + "'");
}

std::size_t tool_gold_action(const ToolWorldParams& params, std::size_t stage, std::size_t hint) {
  return static_cast<std::size_t>(mix_seed({params.world_seed, stage, hint}) % params.num_actions);
}

std::vector<codec::ToolCall> tool_vocabulary(std::size_t num_actions) {
  if (num_actions == 0 || num_actions > catalog().size())
    throw DomainError("tool world supports 1.." + std::to_string(catalog().size()) + " actions");
  return {catalog().begin(), catalog().begin() + static_cast<std::ptrdiff_t>(num_actions)};
}

std::vector<codec::ToolSchema> tool_schemas() {
  return {
      codec::make_tool_schema("get_weather", "Get the weather of a city for a specific date.",
                              R"({"type": "object", "properties": {"city": {"type": "string"}, "date": {"type": "string"}}, "required": ["city"]})"),
      codec::make_tool_schema("book_ticket", "Book a train ticket.",
                              R"({"type": "object", "properties": {"from": {"type": "string"}, "to": {"type": "string"}, "date": {"type": "string"}}})"),
      codec::make_tool_schema("run_code", "Run a Python snippet.",
                              R"({"type": "object", "properties": {"code": {"type": "string"}}})"),
      codec::make_tool_schema("send_message", "Send a chat message.",
                              R"({"type": "object", "properties": {"to": {"type": "string"}, "body": {"type": "string"}}})"),
      codec::make_tool_schema("convert_currency", "Convert an amount between currencies.",
                              R"({"type": "object", "properties": {"amount": {"type": "string"}, "from": {"type": "string"}, "to": {"type": "string"}}})"),
      codec::make_tool_schema("lookup_user", "Look up a user record.",
                              R"({"type": "object", "properties": {"id": {"type": "string"}}})"),
      codec::make_tool_schema("create_event", "Create a calendar event.",
                              R"({"type": "object", "properties": {"title": {"type": "string"}, "time": {"type": "string"}}})"),
  };
}

std::vector<Task> generate_tool_tasks(const ToolWorldParams& params, std::size_t n, std::uint64_t seed,
                                      std::size_t min_length, std::size_t max_length, double unverified_fraction,
                                      std::string_view id_prefix) {
  if (min_length < 1 || min_length > max_length || max_length > params.max_stages)
    throw DomainError("tool task lengths must satisfy 1 <= min <= max <= max_stages");
  if (params.num_hints == 0 || params.num_hints > hint_words().size())
    throw DomainError("tool world supports 1.." + std::to_string(hint_words().size()) + " hints");
  const auto vocab = tool_vocabulary(params.num_actions);
  Rng rng(mix_seed({seed, 0x700L}));
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < n; ++i) {
    ToolWorldTask t;
    t.id = std::string(id_prefix) + "-" + std::to_string(i);
    t.vocabulary = vocab;
    const std::size_t len = min_length + rng.below(max_length - min_length + 1);
    for (std::size_t s = 0; s < len; ++s) {
      t.hints.push_back(rng.below(params.num_hints));
      t.gold.push_back(reward::GoldStep{vocab[tool_gold_action(params, s, t.hints.back())]});
    }
    t.verified = !rng.bernoulli(unverified_fraction);
    tasks.push_back(Task{std::move(t)});
  }
  return tasks;
}

std::vector<Task> generate_search_tasks(const SearchWorldParams& params, std::size_t n, std::uint64_t seed,
                                        std::string_view id_prefix) {
  if (params.branching < 1 || params.depth < 1) throw DomainError("search tree needs branching and depth >= 1");
  Rng rng(mix_seed({seed, 0x5ea7L}));
  std::size_t leaves = 1;
  for (std::size_t d = 0; d < params.depth; ++d) leaves *= params.branching;
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < n; ++i) {
    SearchWorldTask t;
    t.id = std::string(id_prefix) + "-" + std::to_string(i);
    t.branching = params.branching;
    t.depth = params.depth;
    for (std::size_t d = 0; d < params.depth; ++d) t.target_path.push_back(rng.below(params.branching));
    for (std::size_t leaf = 0; leaf < leaves; ++leaf) {
      t.leaf_answers.push_back(std::string(hint_words()[rng.below(hint_words().size())]) + "-" +
                               std::to_string(leaf) + "-" + std::to_string(1000 + rng.below(9000)));
    }
    t.question = "Which archive code carries the marker?";
    tasks.push_back(Task{std::move(t)});
  }
  return tasks;
}

nlohmann::json to_json(const Task& task) {
  using nlohmann::json;
  if (const auto* t = std::get_if<ToolWorldTask>(&task.body)) {
    json vocab = json::array();
    for (const auto& c : t->vocabulary) {
      json args = json::array();
      for (const auto& [k, v] : c.args) args.push_back(json::array({k, v}));
      vocab.push_back(json{{"name", c.name}, {"args", std::move(args)}});
    }
    json gold = json::array();
    for (const auto& g : t->gold) {
      auto it = std::find(t->vocabulary.begin(), t->vocabulary.end(), g.expected);
      gold.push_back(static_cast<std::size_t>(it - t->vocabulary.begin()));
    }
    return json{{"world", "tool"},      {"id", t->id},           {"vocabulary", std::move(vocab)},
                {"hints", t->hints},     {"gold", std::move(gold)}, {"verified", t->verified},
                {"oracle_solvable", t->oracle_solvable}};
  }
  const auto& s = std::get<SearchWorldTask>(task.body);
  return json{{"world", "search"},         {"id", s.id},
              {"branching", s.branching}, {"depth", s.depth},
              {"target_path", s.target_path}, {"leaf_answers", s.leaf_answers},
              {"question", s.question}};
}

Task task_from_json(const nlohmann::json& j) {
  const auto world = world_kind_from_string(j.at("world").get<std::string>());
  if (world == WorldKind::tool) {
    ToolWorldTask t;
    t.id = j.at("id").get<std::string>();
    for (const auto& c : j.at("vocabulary")) {
      ToolCall call{c.at("name").get<std::string>(), {}};
      for (const auto& kv : c.at("args")) call.args.emplace_back(kv.at(0).get<std::string>(), kv.at(1).get<std::string>());
      t.vocabulary.push_back(std::move(call));
    }
    t.hints = j.at("hints").get<std::vector<std::size_t>>();
    for (auto idx : j.at("gold").get<std::vector<std::size_t>>()) t.gold.push_back({t.vocabulary.at(idx)});
    t.verified = j.at("verified").get<bool>();
    t.oracle_solvable = j.at("oracle_solvable").get<bool>();
    if (t.gold.empty() || t.hints.size() != t.gold.size()) throw DomainError("tool task " + t.id + " is malformed");
    return Task{std::move(t)};
  }
  SearchWorldTask s;
  s.id = j.at("id").get<std::string>();
  s.branching = j.at("branching").get<std::size_t>();
  s.depth = j.at("depth").get<std::size_t>();
  s.target_path = j.at("target_path").get<std::vector<std::size_t>>();
  s.leaf_answers = j.at("leaf_answers").get<std::vector<std::string>>();
  s.question = j.at("question").get<std::string>();
  if (s.target_path.size() != s.depth) throw DomainError("search task " + s.id + " is malformed");
  return Task{std::move(s)};
}

Decider policy_decider(const TabularPolicy& policy, double temperature) {
  if (temperature <= 0.0) {
    return [&policy](std::size_t state, std::size_t, Rng&) { return policy.greedy(state); };
  }
  return [&policy, temperature](std::size_t state, std::size_t, Rng& rng) {
    return sample_at(policy.row(state), temperature, rng);
  };
}

Decider oracle_decider(const Task& task) {
  if (const auto* t = std::get_if<ToolWorldTask>(&task.body)) {
    std::vector<std::size_t> plan;
    for (const auto& g : t->gold) {
      auto it = std::find(t->vocabulary.begin(), t->vocabulary.end(), g.expected);
      plan.push_back(static_cast<std::size_t>(it - t->vocabulary.begin()));
    }
    return [plan](std::size_t, std::size_t turn, Rng&) { return plan[std::min(turn, plan.size() - 1)]; };
  }
  const auto& s = std::get<SearchWorldTask>(task.body);
  std::vector<std::size_t> plan = s.target_path;
  plan.push_back(s.branching + 1);
  return [plan](std::size_t, std::size_t turn, Rng&) { return plan[std::min(turn, plan.size() - 1)]; };
}

Decider uniform_decider(std::size_t num_actions) {
  return [num_actions](std::size_t, std::size_t, Rng& rng) { return rng.below(num_actions); };
}

std::size_t hash_state(const std::vector<std::uint64_t>& items, std::size_t history, std::size_t num_states) {
  std::uint64_t h = 0xc0ffeeULL;
  const std::size_t start = items.size() > history ? items.size() - history : 0;
  for (std::size_t pad = items.size() - start; pad < history; ++pad) h = splitmix64(h ^ 0x51ULL);
  for (std::size_t i = start; i < items.size(); ++i) h = splitmix64(h ^ splitmix64(items[i]));
  return static_cast<std::size_t>(h % num_states);
}

Trajectory rollout(const Task& task, const Decider& decide, std::size_t num_states, const RolloutOptions& options,
                   std::uint64_t seed) {
  Episode ep(task, decide, num_states, options, seed);
  if (const auto* t = std::get_if<ToolWorldTask>(&task.body)) {
    rollout_tool(*t, ep);
  } else {
    rollout_search(std::get<SearchWorldTask>(task.body), ep, seed);
  }
  Trajectory& trace = ep.trace();
  const auto verdict = judge(task, trace);
  trace.judgment = verdict;
  trace.reward = reward::trajectory_reward(task.id(), trace, verdict);
  return std::move(trace);
}

Trajectory rollout(const Task& task, const TabularPolicy& policy, const RolloutOptions& options, std::uint64_t seed) {
  return rollout(task, policy_decider(policy, options.temperature), policy.num_states(), options, seed);
}

std::string final_answer(const Trajectory& trace) {
  for (auto it = trace.messages.rbegin(); it != trace.messages.rend(); ++it) {
    if (it->role != Role::assistant) continue;
    for (const auto& seg : it->segments) {
      if (seg.kind == codec::SegmentKind::tool_call && seg.call().name == "submit_answer") {
        const auto* v = seg.call().find("answer");
        return v ? *v : std::string{};
      }
    }
    if (it->segments.size() == 1 && it->segments.front().kind == codec::SegmentKind::text &&
        codec::format_correct(*it))
      return it->segments.front().str();
    return {};
  }
  return {};
}

TaskJudgment judge(const Task& task, const Trajectory& trace) {
  TaskJudgment verdict{false, JudgeKind::rule};
  if (trace.halted) return verdict;
  if (const auto* t = std::get_if<ToolWorldTask>(&task.body)) {
    std::size_t matched = 0;
    for (const auto& m : trace.messages) {
      if (!is_call_turn(m)) continue;
      if (matched >= t->gold.size()) return verdict;
      if (m.tool_call_count() != 1 || !codec::format_correct(m)) return verdict;
      auto seg = std::find_if(m.segments.begin(), m.segments.end(),
                              [](const codec::Segment& x) { return x.kind == codec::SegmentKind::tool_call; });
      if (reward::step_reward(seg->call(), t->gold[matched]) != 1) return verdict;
      ++matched;
    }
    verdict.completed = matched == t->gold.size();
    return verdict;
  }
  const auto& s = std::get<SearchWorldTask>(task.body);
  verdict.completed = reward::outcome_reward(final_answer(trace), s.answer()) == 1;
  return verdict;
}

double rescore(const Task& task, const Trajectory& trace) {
  return reward::trajectory_reward(task.id(), trace, judge(task, trace));
}

std::vector<double> turn_budget_sweep(const std::vector<Task>& tasks, const Decider& decide, std::size_t num_states,
                                      const std::vector<std::size_t>& budgets, const SweepOptions& options) {
  for (std::size_t i = 1; i < budgets.size(); ++i)
    if (budgets[i] <= budgets[i - 1]) throw DomainError("turn budgets must be increasing");
  std::vector<double> acc(budgets.size(), 0.0);
  if (tasks.empty() || options.samples_per_task == 0) return acc;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    for (std::size_t s = 0; s < options.samples_per_task; ++s) {
      const auto seed = mix_seed({options.seed, i, s});
      for (std::size_t b = 0; b < budgets.size(); ++b) {
        RolloutOptions ro{options.temperature, budgets[b], options.max_length, 0.0, options.history};
        acc[b] += rollout(tasks[i], decide, num_states, ro, seed).reward;
      }
    }
  }
  for (auto& a : acc) a /= static_cast<double>(tasks.size() * options.samples_per_task);
  return acc;
}

std::vector<double> turn_budget_sweep(const std::vector<Task>& tasks, const TabularPolicy& policy,
                                      const std::vector<std::size_t>& budgets, const SweepOptions& options) {
  return turn_budget_sweep(tasks, policy_decider(policy, options.temperature), policy.num_states(), budgets, options);
}

}  // namespace forge::worlds
