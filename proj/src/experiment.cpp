#include "forge/experiment.hpp"

#include <fstream>

#include "forge/error.hpp"
#include "forge/rng.hpp"

namespace forge::experiment {

using nlohmann::json;

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path.string());
  return f;
}

json report_to_json(const orchestrator::RunReport& r) {
  json decisions = json::array();
  for (const auto& d : r.temperature_decisions) {
    json scores = json::object();
    for (const auto& [t, s] : d.scores) scores[json(t).dump()] = s;
    decisions.push_back({{"step", d.step}, {"temperature", d.chosen}, {"scores", scores}});
  }
  return {{"steps_completed", r.steps_completed},
          {"final_version", r.final_version},
          {"stage_switch_step", r.stage_switch_step ? json(*r.stage_switch_step) : json(nullptr)},
          {"temperature_decisions", decisions},
          {"final_temperature", r.final_temperature},
          {"max_staleness", r.max_staleness},
          {"max_observe_delay_us", r.max_observe_delay.count()},
          {"error", r.error ? json(*r.error) : json(nullptr)}};
}

}  // namespace

TaskSets make_tasks(const config::WorldConfig& w) {
  TaskSets s;
  const auto val_seed = mix_seed({w.task_seed, 1});
  const auto held_seed = mix_seed({w.task_seed, 2});
  if (w.kind == worlds::WorldKind::tool) {
    s.train = worlds::generate_tool_tasks(w.tool, w.train_tasks, w.task_seed, w.min_length, w.max_length,
                                          w.unverified_fraction, "tool");
    s.validation = worlds::generate_tool_tasks(w.tool, w.validation_tasks, val_seed, w.min_length, w.max_length, 0.0,
                                               "val");
    s.held_out = worlds::generate_tool_tasks(w.tool, w.held_out_tasks, held_seed, w.held_out_min_length,
                                             w.held_out_max_length, 0.0, "held");
  } else {
    s.train = worlds::generate_search_tasks(w.search, w.train_tasks, w.task_seed, "search");
    s.validation = worlds::generate_search_tasks(w.search, w.validation_tasks, val_seed, "val");
    s.held_out = worlds::generate_search_tasks(w.search, w.held_out_tasks, held_seed, "held");
  }
  return s;
}

json policy_to_json(const TabularPolicy& p) {
  return {{"num_states", p.num_states()},
          {"num_actions", p.num_actions()},
          {"params", std::vector<double>(p.params().begin(), p.params().end())}};
}

TabularPolicy policy_from_json(const json& j) {
  auto params = j.at("params").get<std::vector<double>>();
  const auto ns = j.at("num_states").get<std::size_t>();
  const auto na = j.at("num_actions").get<std::size_t>();
  if (params.size() != ns * na) throw Error("policy parameter count does not match its shape");
  return TabularPolicy(ns, na, std::move(params));
}

json to_json(const Result& r) {
  json accuracy = json::object();
  for (const auto& [b, a] : r.accuracy) accuracy[std::to_string(b)] = a;
  json phases = json::array();
  json decisions = json::array();
  std::size_t steps = 0;
  std::uint64_t staleness = 0;
  for (const auto& p : r.phases) {
    phases.push_back(report_to_json(p));
    for (const auto& d : phases.back()["temperature_decisions"]) decisions.push_back(d);
    steps += p.steps_completed;
    staleness = std::max(staleness, p.max_staleness);
  }
  json distill = json::array();
  for (const auto& d : r.distill)
    distill.push_back({{"round", d.round},
                       {"pool_size", d.pool_size},
                       {"log_likelihood_before", d.log_likelihood_before},
                       {"log_likelihood_after", d.log_likelihood_after},
                       {"held_out_before", d.held_out_before},
                       {"held_out_after", d.held_out_after}});
  std::optional<std::size_t> switch_step;
  if (!r.phases.empty()) switch_step = r.phases.front().stage_switch_step;
  return {{"accuracy_per_budget", accuracy},
          {"held_out_reward", r.held_out_reward},
          {"stage_switch_step", switch_step ? json(*switch_step) : json(nullptr)},
          {"temperature_decisions", decisions},
          {"final_temperature", r.phases.empty() ? 1.0 : r.phases.back().final_temperature},
          {"steps_completed", steps},
          {"max_staleness", staleness},
          {"distill", distill},
          {"phases", phases},
          {"error", r.error ? json(*r.error) : json(nullptr)}};
}

Result run(const config::ExperimentConfig& cfg, const std::optional<std::filesystem::path>& out) {
  const auto tasks = make_tasks(cfg.world);
  const std::size_t num_actions = tasks.train.front().num_actions();

  std::ofstream metrics, trajectories;
  if (out) {
    std::filesystem::create_directories(*out);
    open_out(*out / "config.json") << config::to_json(cfg).dump(2) << "\n";
    auto f = open_out(*out / "tasks.jsonl");
    for (const auto* set : {&tasks.train, &tasks.validation, &tasks.held_out})
      for (const auto& t : *set) f << worlds::to_json(t).dump() << "\n";
    metrics = open_out(*out / "metrics.jsonl");
    trajectories = open_out(*out / "trajectories.jsonl");
  }

  const auto& rc0 = cfg.run;
  const worlds::RolloutOptions eval_rollout{cfg.eval.temperature, rc0.max_turns, rc0.max_length, 0.0, rc0.history};

  Result result;
  TabularPolicy policy(cfg.world.num_states, num_actions);
  std::size_t step_offset = 0;
  for (std::size_t phase = 0; phase <= cfg.distill.rounds; ++phase) {
    if (phase > 0) {
      orchestrator::DistillOptions opts;
      opts.threshold = cfg.distill.threshold;
      opts.samples_per_task = cfg.distill.samples_per_task;
      opts.epochs = cfg.distill.epochs;
      opts.learning_rate = cfg.distill.learning_rate;
      opts.rollout = {1.0, rc0.max_turns, rc0.max_length, 0.0, rc0.history};
      opts.seed = mix_seed({rc0.seed, 0xD15, phase});
      DistillSummary s;
      s.round = phase;
      s.held_out_before = orchestrator::evaluate(tasks.held_out, policy, eval_rollout, cfg.eval.samples_per_task,
                                                 cfg.eval.seed);
      try {
        auto d = orchestrator::distill_round(policy, tasks.train, opts);
        s.pool_size = d.pool.size();
        s.log_likelihood_before = d.log_likelihood_before;
        s.log_likelihood_after = d.log_likelihood_after;
        policy = std::move(d.policy);
      } catch (const EmptyDistillPool& e) {
        result.error = e.what();
        break;
      }
      s.held_out_after = orchestrator::evaluate(tasks.held_out, policy, eval_rollout, cfg.eval.samples_per_task,
                                                cfg.eval.seed);
      result.distill.push_back(s);
    }

    auto rc = rc0;
    if (phase > 0) rc.seed = mix_seed({rc0.seed, phase});
    orchestrator::RunHooks hooks;
    if (out) {
      hooks.on_metrics = [&](const orchestrator::StepMetrics& m) {
        auto j = orchestrator::to_json(m);
        j["step"] = m.step + step_offset;
        metrics << j.dump() << "\n";
      };
      if (cfg.log_trajectories_every > 0) {
        hooks.on_group = [&](std::size_t step, const grpo::Group& g) {
          if (step % cfg.log_trajectories_every != 0) return;
          for (const auto& t : g.trajectories) trajectories << to_json(t).dump() << "\n";
        };
      }
    }
    auto report = orchestrator::run(rc, {tasks.train, tasks.validation, policy}, hooks);
    if (out && phase == 0 && !report.difficulty.empty()) {
      auto f = open_out(*out / "difficulty.jsonl");
      for (const auto& d : report.difficulty) f << curriculum::to_json(d).dump() << "\n";
    }
    policy = TabularPolicy(cfg.world.num_states, num_actions, report.final_params);
    step_offset += report.steps_completed;
    const bool failed = report.error.has_value();
    if (failed) result.error = report.error;
    result.phases.push_back(std::move(report));
    if (failed) break;
  }

  worlds::SweepOptions sweep{cfg.eval.samples_per_task, cfg.eval.temperature, rc0.max_length, rc0.history,
                             cfg.eval.seed};
  const auto acc = worlds::turn_budget_sweep(tasks.held_out, policy, cfg.eval.budgets, sweep);
  for (std::size_t i = 0; i < acc.size(); ++i) result.accuracy[cfg.eval.budgets[i]] = acc[i];
  result.held_out_reward =
      orchestrator::evaluate(tasks.held_out, policy, eval_rollout, cfg.eval.samples_per_task, cfg.eval.seed);
  result.params.assign(policy.params().begin(), policy.params().end());

  if (out) {
    open_out(*out / "policy.json") << policy_to_json(policy).dump() << "\n";
    open_out(*out / "report.json") << to_json(result).dump(2) << "\n";
  }
  return result;
}

}  // namespace forge::experiment
