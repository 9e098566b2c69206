#include "forge/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "forge/error.hpp"

namespace forge::config {

using nlohmann::json;

namespace {

const json& empty_object() {
  static const json j = json::object();
  return j;
}

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(label(), label() + ": expected an object");
  }

  std::string key_path(std::string_view key) const {
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it != j_.end()) out = convert<T>(*it, key_path(key));
  }

  template <typename F>
  void get_named(const char* key, F&& parse) {
    std::string name;
    get(key, name);
    if (!j_.contains(key)) return;
    try {
      parse(name);
    } catch (const std::exception&) {
      throw ConfigError(key_path(key), key_path(key) + ": unknown value '" + name + "'");
    }
  }

  Reader object(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return Reader(it == j_.end() ? empty_object() : *it, key_path(key));
  }

  const json* array(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return nullptr;
    if (!it->is_array()) throw ConfigError(key_path(key), key_path(key) + ": expected an array");
    return &*it;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError(key_path(k), "unknown config key '" + key_path(k) + "'");
  }

  template <typename T>
  static T convert(const json& v, const std::string& key) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(key, key + ": expected a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
        throw ConfigError(key, key + ": expected a non-negative integer");
      return v.get<T>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(key, key + ": expected a number");
      return v.get<T>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(key, key + ": expected a string");
      return v.get<std::string>();
    } else {
      if (!v.is_array()) throw ConfigError(key, key + ": expected an array");
      T out;
      for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(convert<typename T::value_type>(v[i], key + "[" + std::to_string(i) + "]"));
      return out;
    }
  }

 private:
  std::string label() const { return path_.empty() ? "config" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string, std::less<>> seen_;
};

json run_to_json(const orchestrator::RunConfig& r) {
  json schedule = json::array();
  for (const auto& s : r.length_schedule) schedule.push_back({{"step", s.step}, {"max_length", s.max_length}});
  const auto& c = r.curriculum;
  const auto& t = r.temperature;
  return {
      {"mode", orchestrator::to_string(r.mode)},
      {"seed", r.seed},
      {"steps", r.steps},
      {"group_size", r.group_size},
      {"batch_groups", r.batch_groups},
      {"max_slots_per_step", r.max_slots_per_step},
      {"max_lag", r.max_lag},
      {"workers", r.workers},
      {"buffer_capacity", r.buffer_capacity},
      {"poll_interval_ms", r.poll_interval.count()},
      {"max_retries", r.max_retries},
      {"loss_mode", grpo::to_string(r.loss_mode)},
      {"normalize_std", r.advantage.normalize_std},
      {"std_epsilon", r.advantage.std_epsilon},
      {"learning_rate", r.learning_rate},
      {"filter_zero_variance", r.filter_zero_variance},
      {"max_turns", r.max_turns},
      {"max_length", r.max_length},
      {"length_schedule", schedule},
      {"history", r.history},
      {"corrupt_rate", r.corrupt_rate},
      {"quantize_rollouts", r.quantize_rollouts},
      {"quant_block", r.quant_block},
      {"curriculum",
       {{"mode", orchestrator::to_string(c.mode)},
        {"samples", c.samples},
        {"easy_threshold", c.thresholds.easy},
        {"min_samples", c.thresholds.min_samples},
        {"probe_k", c.thresholds.probe_k},
        {"deep_k", c.thresholds.deep_k},
        {"switch_trigger", c.switch_policy.trigger == curriculum::SwitchTrigger::plateau ? "plateau" : "fixed_step"},
        {"switch_step", c.switch_policy.fixed_step},
        {"plateau_window", c.switch_policy.plateau.window},
        {"plateau_epsilon", c.switch_policy.plateau.epsilon},
        {"plateau_every", c.plateau_every}}},
      {"temperature",
       {{"enabled", t.enabled},
        {"initial", t.initial},
        {"candidates", t.candidates},
        {"eval_every", t.eval_every},
        {"require_plateau", t.require_plateau},
        {"plateau_window", t.plateau.window},
        {"plateau_epsilon", t.plateau.epsilon},
        {"plateau_every", t.plateau_every},
        {"eval_samples", t.eval_samples}}},
  };
}

void read_run(Reader in, orchestrator::RunConfig& r) {
  in.get_named("mode", [&](const std::string& s) { r.mode = orchestrator::mode_from_string(s); });
  in.get("seed", r.seed);
  in.get("steps", r.steps);
  in.get("group_size", r.group_size);
  in.get("batch_groups", r.batch_groups);
  in.get("max_slots_per_step", r.max_slots_per_step);
  in.get("max_lag", r.max_lag);
  in.get("workers", r.workers);
  in.get("buffer_capacity", r.buffer_capacity);
  std::int64_t poll = r.poll_interval.count();
  in.get("poll_interval_ms", poll);
  r.poll_interval = std::chrono::milliseconds(poll);
  in.get("max_retries", r.max_retries);
  in.get_named("loss_mode", [&](const std::string& s) { r.loss_mode = grpo::loss_mode_from_string(s); });
  in.get("normalize_std", r.advantage.normalize_std);
  in.get("std_epsilon", r.advantage.std_epsilon);
  in.get("learning_rate", r.learning_rate);
  in.get("filter_zero_variance", r.filter_zero_variance);
  in.get("max_turns", r.max_turns);
  in.get("max_length", r.max_length);
  if (const json* schedule = in.array("length_schedule")) {
    r.length_schedule.clear();
    for (std::size_t i = 0; i < schedule->size(); ++i) {
      Reader s((*schedule)[i], in.key_path("length_schedule") + "[" + std::to_string(i) + "]");
      orchestrator::LengthStage stage;
      s.get("step", stage.step);
      s.get("max_length", stage.max_length);
      s.finish();
      r.length_schedule.push_back(stage);
    }
  }
  in.get("history", r.history);
  in.get("corrupt_rate", r.corrupt_rate);
  in.get("quantize_rollouts", r.quantize_rollouts);
  in.get("quant_block", r.quant_block);

  auto c = in.object("curriculum");
  auto& cc = r.curriculum;
  c.get_named("mode", [&](const std::string& s) { cc.mode = orchestrator::curriculum_mode_from_string(s); });
  c.get("samples", cc.samples);
  c.get("easy_threshold", cc.thresholds.easy);
  c.get("min_samples", cc.thresholds.min_samples);
  c.get("probe_k", cc.thresholds.probe_k);
  c.get("deep_k", cc.thresholds.deep_k);
  c.get_named("switch_trigger", [&](const std::string& s) {
    if (s == "plateau") cc.switch_policy.trigger = curriculum::SwitchTrigger::plateau;
    else if (s == "fixed_step") cc.switch_policy.trigger = curriculum::SwitchTrigger::fixed_step;
    else throw Error(s);
  });
  c.get("switch_step", cc.switch_policy.fixed_step);
  c.get("plateau_window", cc.switch_policy.plateau.window);
  c.get("plateau_epsilon", cc.switch_policy.plateau.epsilon);
  c.get("plateau_every", cc.plateau_every);
  c.finish();

  auto t = in.object("temperature");
  auto& tc = r.temperature;
  t.get("enabled", tc.enabled);
  t.get("initial", tc.initial);
  t.get("candidates", tc.candidates);
  t.get("eval_every", tc.eval_every);
  t.get("require_plateau", tc.require_plateau);
  t.get("plateau_window", tc.plateau.window);
  t.get("plateau_epsilon", tc.plateau.epsilon);
  t.get("plateau_every", tc.plateau_every);
  t.get("eval_samples", tc.eval_samples);
  t.finish();
  in.finish();
}

void validate(const ExperimentConfig& c) {
  try {
    c.run.validate();
  } catch (const ConfigError& e) {
    throw ConfigError("run." + e.key(), std::string("run.") + e.what());
  }
  auto need = [](bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw ConfigError(key, key + ": " + what);
  };
  const auto& w = c.world;
  need(w.train_tasks >= 1, "world.train_tasks", "must be at least 1");
  need(w.num_states >= 1, "world.num_states", "must be at least 1");
  need(w.unverified_fraction >= 0.0 && w.unverified_fraction <= 1.0, "world.unverified_fraction",
       "must lie in [0, 1]");
  if (w.kind == worlds::WorldKind::tool) {
    need(w.tool.num_actions >= 1 && w.tool.num_actions <= worlds::tool_vocabulary(8).size(), "world.tool.num_actions",
         "must lie in [1, 8]");
    need(w.tool.num_hints >= 1 && w.tool.num_hints <= 16, "world.tool.num_hints", "must lie in [1, 16]");
    need(w.min_length >= 1 && w.min_length <= w.max_length && w.max_length <= w.tool.max_stages, "world.max_length",
         "need 1 <= min_length <= max_length <= tool.max_stages");
    need(w.held_out_min_length >= 1 && w.held_out_min_length <= w.held_out_max_length &&
             w.held_out_max_length <= w.tool.max_stages,
         "world.held_out_max_length", "need 1 <= held_out_min_length <= held_out_max_length <= tool.max_stages");
  } else {
    need(w.search.branching >= 1, "world.search.branching", "must be at least 1");
    need(w.search.depth >= 1, "world.search.depth", "must be at least 1");
  }
  for (std::size_t i = 1; i < c.eval.budgets.size(); ++i)
    need(c.eval.budgets[i] > c.eval.budgets[i - 1], "eval.budgets", "must be strictly increasing");
  need(c.eval.temperature >= 0.0, "eval.temperature", "must be non-negative");
  need(!c.out_dir.empty(), "out_dir", "must not be empty");
}

}  // namespace

json to_json(const ExperimentConfig& c) {
  const auto& w = c.world;
  return {
      {"out_dir", c.out_dir},
      {"log_trajectories_every", c.log_trajectories_every},
      {"run", run_to_json(c.run)},
      {"world",
       {{"kind", worlds::to_string(w.kind)},
        {"task_seed", w.task_seed},
        {"train_tasks", w.train_tasks},
        {"validation_tasks", w.validation_tasks},
        {"held_out_tasks", w.held_out_tasks},
        {"min_length", w.min_length},
        {"max_length", w.max_length},
        {"held_out_min_length", w.held_out_min_length},
        {"held_out_max_length", w.held_out_max_length},
        {"unverified_fraction", w.unverified_fraction},
        {"num_states", w.num_states},
        {"tool",
         {{"num_actions", w.tool.num_actions},
          {"num_hints", w.tool.num_hints},
          {"max_stages", w.tool.max_stages},
          {"world_seed", w.tool.world_seed}}},
        {"search", {{"branching", w.search.branching}, {"depth", w.search.depth}}}}},
      {"eval",
       {{"budgets", c.eval.budgets},
        {"samples_per_task", c.eval.samples_per_task},
        {"temperature", c.eval.temperature},
        {"seed", c.eval.seed}}},
      {"distill",
       {{"rounds", c.distill.rounds},
        {"threshold", c.distill.threshold},
        {"samples_per_task", c.distill.samples_per_task},
        {"epochs", c.distill.epochs},
        {"learning_rate", c.distill.learning_rate}}},
  };
}

ExperimentConfig from_json(const json& j) {
  ExperimentConfig c;
  Reader root(j, "");
  root.get("out_dir", c.out_dir);
  root.get("log_trajectories_every", c.log_trajectories_every);
  read_run(root.object("run"), c.run);

  auto w = root.object("world");
  w.get_named("kind", [&](const std::string& s) { c.world.kind = worlds::world_kind_from_string(s); });
  w.get("task_seed", c.world.task_seed);
  w.get("train_tasks", c.world.train_tasks);
  w.get("validation_tasks", c.world.validation_tasks);
  w.get("held_out_tasks", c.world.held_out_tasks);
  w.get("min_length", c.world.min_length);
  w.get("max_length", c.world.max_length);
  w.get("held_out_min_length", c.world.held_out_min_length);
  w.get("held_out_max_length", c.world.held_out_max_length);
  w.get("unverified_fraction", c.world.unverified_fraction);
  w.get("num_states", c.world.num_states);
  auto tool = w.object("tool");
  tool.get("num_actions", c.world.tool.num_actions);
  tool.get("num_hints", c.world.tool.num_hints);
  tool.get("max_stages", c.world.tool.max_stages);
  tool.get("world_seed", c.world.tool.world_seed);
  tool.finish();
  auto search = w.object("search");
  search.get("branching", c.world.search.branching);
  search.get("depth", c.world.search.depth);
  search.finish();
  w.finish();

  auto e = root.object("eval");
  e.get("budgets", c.eval.budgets);
  e.get("samples_per_task", c.eval.samples_per_task);
  e.get("temperature", c.eval.temperature);
  e.get("seed", c.eval.seed);
  e.finish();

  auto d = root.object("distill");
  d.get("rounds", c.distill.rounds);
  d.get("threshold", c.distill.threshold);
  d.get("samples_per_task", c.distill.samples_per_task);
  d.get("epochs", c.distill.epochs);
  d.get("learning_rate", c.distill.learning_rate);
  d.finish();
  root.finish();

  validate(c);
  return c;
}

ExperimentConfig load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("", path.string() + ": " + e.what());
  }
  return from_json(j);
}

}  // namespace forge::config
