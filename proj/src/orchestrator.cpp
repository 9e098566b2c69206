#include "forge/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "forge/error.hpp"
#include "forge/rng.hpp"

namespace forge::orchestrator {

namespace {

constexpr std::uint64_t kDifficultyStream = 0xD1FF;
constexpr std::uint64_t kTemperatureStream = 0x7E3;
constexpr std::uint64_t kSlotStream = 0x5107;

template <typename E>
E parse_enum(std::string_view name, std::initializer_list<E> values, std::string_view key) {
  for (E v : values)
    if (to_string(v) == name) return v;
  throw ConfigError(std::string(key), "unknown " + std::string(key) + " '" + std::string(name) + "'");
}

worlds::RolloutOptions rollout_options(const RunConfig& c, double temperature, std::size_t max_length) {
  return {temperature, c.max_turns, max_length, c.corrupt_rate, c.history};
}

// Hands out slot numbers of each version to async workers.
class SlotDispatcher {
 public:
  std::optional<std::uint64_t> claim(std::uint64_t version, std::size_t limit) {
    std::lock_guard lock(mutex_);
    if (version < floor_) return std::nullopt;
    auto& next = next_[version];
    if (next >= limit) return std::nullopt;
    return next++;
  }
  void forget_below(std::uint64_t version) {
    std::lock_guard lock(mutex_);
    floor_ = std::max(floor_, version);
    next_.erase(next_.begin(), next_.lower_bound(version));
  }

 private:
  std::mutex mutex_;
  std::uint64_t floor_ = 0;
  std::map<std::uint64_t, std::uint64_t> next_;
};

std::optional<grpo::Group> produce(const RunConfig& config, const TaskPools& pools, const PolicySnapshot& snap,
                                   std::uint64_t slot, const RunHooks& hooks) {
  for (std::size_t attempt = 0; attempt <= config.max_retries; ++attempt) {
    try {
      if (hooks.before_rollout) hooks.before_rollout(snap.version, slot, attempt);
      return make_group(config, pools, snap, slot);
    } catch (const std::exception&) {
    }
  }
  return std::nullopt;
}

}  // namespace

std::string_view to_string(Mode mode) {
  return mode == Mode::colocated_sync ? "colocated_sync" : "disaggregated_async";
}

Mode mode_from_string(std::string_view name) {
  return parse_enum(name, {Mode::colocated_sync, Mode::disaggregated_async}, "mode");
}

std::string_view to_string(CurriculumMode mode) {
  switch (mode) {
    case CurriculumMode::none: return "none";
    case CurriculumMode::static_moderate: return "static_moderate";
    case CurriculumMode::two_stage: return "two_stage";
  }
  return "none";
}

CurriculumMode curriculum_mode_from_string(std::string_view name) {
  return parse_enum(name, {CurriculumMode::none, CurriculumMode::static_moderate, CurriculumMode::two_stage},
                    "curriculum.mode");
}

std::size_t RunConfig::max_length_at(std::size_t step) const {
  std::size_t length = max_length;
  for (const auto& s : length_schedule)
    if (s.step <= step) length = s.max_length;
  return length;
}

void RunConfig::validate() const {
  auto need = [](bool ok, const char* key, const char* what) {
    if (!ok) throw ConfigError(key, std::string(key) + ": " + what);
  };
  need(group_size >= 2, "group_size", "must be at least 2");
  need(batch_groups >= 1, "batch_groups", "must be at least 1");
  need(slots_per_step() >= batch_groups, "max_slots_per_step", "must be at least batch_groups");
  need(buffer_capacity >= 2 * batch_groups, "buffer_capacity", "must be at least 2 * batch_groups");
  need(mode == Mode::disaggregated_async || max_lag == 0, "max_lag", "must be 0 in colocated_sync mode");
  need(workers >= 1, "workers", "must be at least 1");
  need(learning_rate > 0.0 && std::isfinite(learning_rate), "learning_rate", "must be positive");
  need(max_turns >= 1, "max_turns", "must be at least 1");
  need(history >= 1, "history", "must be at least 1");
  need(corrupt_rate >= 0.0 && corrupt_rate <= 1.0, "corrupt_rate", "must lie in [0, 1]");
  need(!quantize_rollouts || quant_block >= 1, "quant_block", "must be at least 1");
  need(poll_interval.count() > 0, "poll_interval_ms", "must be positive");
  need(max_length >= 2, "max_length", "must be at least 2");
  for (const auto& s : length_schedule) need(s.max_length >= 2, "length_schedule", "lengths must be at least 2");
  for (std::size_t i = 1; i < length_schedule.size(); ++i)
    need(length_schedule[i].step > length_schedule[i - 1].step, "length_schedule", "steps must increase");
  need(temperature.initial > 0.0, "temperature.initial", "must be positive");
  need(!temperature.enabled || !temperature.candidates.empty(), "temperature.candidates", "must not be empty");
  for (double t : temperature.candidates) need(t > 0.0, "temperature.candidates", "must be positive");
  need(!temperature.enabled || temperature.eval_every >= 1, "temperature.eval_every", "must be at least 1");
  need(curriculum.plateau_every >= 1, "curriculum.plateau_every", "must be at least 1");
  need(temperature.plateau_every >= 1, "temperature.plateau_every", "must be at least 1");
}

SnapshotPtr make_snapshot(const TrainerState& state, bool quantize, std::size_t block_size) {
  std::vector<double> params(state.policy.params().begin(), state.policy.params().end());
  std::optional<quant::QuantizedParams> q;
  std::vector<double> rollout_params = params;
  if (quantize) {
    q = quant::quantize_blockwise(params, block_size);
    rollout_params = quant::dequantize(*q);
  }
  return std::make_shared<const PolicySnapshot>(PolicySnapshot{
      state.version, std::move(params), std::move(q),
      TabularPolicy(state.policy.num_states(), state.policy.num_actions(), std::move(rollout_params)),
      state.temperature, state.stage, state.max_length});
}

SnapshotPtr publish_snapshot(TrainerState& state, bool quantize, std::size_t block_size) {
  ++state.version;
  return make_snapshot(state, quantize, block_size);
}

void SnapshotStore::publish(SnapshotPtr snapshot) {
  std::lock_guard lock(mutex_);
  published_at_[snapshot->version] = Clock::now();
  latest_ = std::move(snapshot);
  published_.notify_all();
}

SnapshotPtr SnapshotStore::latest() const {
  std::lock_guard lock(mutex_);
  return latest_;
}

SnapshotPtr SnapshotStore::wait_newer(std::uint64_t version, std::stop_token stop,
                                      std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mutex_);
  published_.wait_for(lock, stop, timeout, [&] { return latest_ && latest_->version > version; });
  return latest_;
}

void SnapshotStore::note_observed(std::uint64_t version) {
  std::lock_guard lock(mutex_);
  auto it = published_at_.find(version);
  if (it == published_at_.end()) return;
  const auto delay = std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - it->second);
  max_delay_ = std::max(max_delay_, delay);
  published_at_.erase(published_at_.begin(), std::next(it));
}

std::chrono::microseconds SnapshotStore::max_observe_delay() const {
  std::lock_guard lock(mutex_);
  return max_delay_;
}

void SnapshotStore::notify_all() {
  std::lock_guard lock(mutex_);
  published_.notify_all();
}

grpo::Group make_group(const RunConfig& config, const TaskPools& pools, const PolicySnapshot& snap,
                       std::uint64_t slot) {
  const auto& pool = snap.stage == curriculum::Stage::one ? pools.stage1 : pools.stage2;
  if (pool.empty()) throw Error("task pool for the current stage is empty");
  Rng rng(mix_seed({config.seed, kSlotStream, snap.version, slot}));
  const auto& task = pools.tasks[pool[rng.below(pool.size())]];
  grpo::Group g;
  g.task = task.id();
  g.policy_version = snap.version;
  g.slot = slot;
  g.temperature = snap.temperature;
  const auto options = rollout_options(config, snap.temperature, snap.max_length);
  for (std::size_t i = 0; i < config.group_size; ++i) {
    auto trace = worlds::rollout(task, snap.rollout_policy, options, mix_seed({config.seed, snap.version, slot, i}));
    trace.policy_version = snap.version;
    g.rewards.push_back(trace.reward);
    g.trajectories.push_back(std::move(trace));
  }
  return g;
}

nlohmann::json to_json(const StepMetrics& m) {
  return {{"step", m.step},
          {"version", m.version},
          {"mean_reward", m.mean_reward},
          {"loss", m.loss},
          {"loss_mode", grpo::to_string(m.loss_mode)},
          {"temperature", m.temperature},
          {"stage", curriculum::to_string(m.stage)},
          {"buffer_size", m.buffer_size},
          {"max_staleness", m.max_staleness},
          {"groups", m.groups}};
}

double evaluate(const std::vector<worlds::Task>& tasks, const TabularPolicy& policy,
                const worlds::RolloutOptions& options, std::size_t samples, std::uint64_t seed) {
  if (tasks.empty() || samples == 0) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < tasks.size(); ++i)
    for (std::size_t s = 0; s < samples; ++s) total += worlds::rollout(tasks[i], policy, options, mix_seed({seed, i, s})).reward;
  return total / static_cast<double>(tasks.size() * samples);
}

std::vector<curriculum::DifficultyRecord> estimate_difficulty(const std::vector<worlds::Task>& tasks,
                                                              const TabularPolicy& policy,
                                                              const worlds::RolloutOptions& options,
                                                              std::size_t samples, std::uint64_t seed) {
  static constexpr std::size_t ks[] = {1, 8};
  std::vector<curriculum::DifficultyRecord> records;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    std::size_t correct = 0;
    for (std::size_t s = 0; s < samples; ++s)
      if (worlds::rollout(tasks[i], policy, options, mix_seed({seed, i, s})).reward >= 1.0) ++correct;
    records.push_back(curriculum::make_record(tasks[i].id(), samples, correct, tasks[i].verified(),
                                              tasks[i].oracle_solvable(), ks));
  }
  return records;
}

RunReport run(const RunConfig& config, const RunInputs& inputs, const RunHooks& hooks) {
  config.validate();
  if (inputs.train.empty()) throw ConfigError("tasks", "no training tasks");
  for (const auto& t : inputs.train)
    if (t.num_actions() != inputs.initial.num_actions())
      throw ConfigError("tasks", "task action count does not match the policy");

  RunReport report;
  TaskPools pools{inputs.train, {}, {}};
  curriculum::CurriculumState cstate;
  if (config.curriculum.mode == CurriculumMode::none) {
    for (std::size_t i = 0; i < pools.tasks.size(); ++i) pools.stage1.push_back(i);
  } else {
    const auto opts = rollout_options(config, config.temperature.initial, config.max_length_at(0));
    report.difficulty = estimate_difficulty(pools.tasks, inputs.initial, opts, config.curriculum.samples,
                                            mix_seed({config.seed, kDifficultyStream}));
    for (std::size_t i = 0; i < pools.tasks.size(); ++i) {
      const auto d = curriculum::classify(report.difficulty[i], config.curriculum.thresholds);
      if (d == curriculum::Difficulty::moderate) {
        pools.stage1.push_back(i);
        cstate.stage1_pool.push_back(pools.tasks[i].id());
      } else if (d == curriculum::Difficulty::extreme && config.curriculum.mode == CurriculumMode::two_stage) {
        pools.stage2.push_back(i);
        cstate.stage2_pool.push_back(pools.tasks[i].id());
      }
    }
    if (pools.stage1.empty()) throw ConfigError("curriculum", "no moderate tasks for stage one");
  }

  TrainerState state{inputs.initial, 0, config.temperature.initial, curriculum::Stage::one, config.max_length_at(0)};
  const std::size_t G = config.batch_groups;
  const std::size_t cap = config.slots_per_step();

  DataBuffer buffer({config.buffer_capacity, config.max_lag, config.filter_zero_variance});
  for (const auto& f : hooks.filters) buffer.add_filter(f);
  SnapshotStore store;
  SlotDispatcher dispatcher;

  auto publish = [&](SnapshotPtr snap) {
    store.publish(snap);
    buffer.set_current_version(snap->version);
    dispatcher.forget_below(snap->version);
    if (hooks.on_publish) hooks.on_publish(*snap);
  };
  publish(make_snapshot(state, config.quantize_rollouts, config.quant_block));

  std::vector<std::jthread> workers;
  if (config.mode == Mode::disaggregated_async) {
    for (std::size_t w = 0; w < config.workers; ++w) {
      workers.emplace_back([&](std::stop_token stop) {
        while (!stop.stop_requested()) {
          store.note_observed(store.latest()->version);
          if (!buffer.reserve(stop, config.poll_interval)) continue;
          const auto snap = store.latest();
          store.note_observed(snap->version);
          const auto slot = dispatcher.claim(snap->version, cap);
          if (!slot) {
            buffer.cancel_reservation();
            store.wait_newer(snap->version, stop, config.poll_interval);
            continue;
          }
          auto group = produce(config, pools, *snap, *slot, hooks);
          if (group) buffer.submit_reserved(std::move(*group));
          else buffer.mark_failed(snap->version, *slot, true);
        }
      });
    }
  }

  // Colocated generation: chunks of G slots until a batch is ready.
  auto sync_batch = [&]() -> Batch {
    const auto snap = store.latest();
    for (std::size_t start = 0; start < cap; start += G) {
      const std::size_t end = std::min(cap, start + G);
      std::vector<std::optional<grpo::Group>> results(end - start);
      std::atomic<std::size_t> next{start};
      auto work = [&] {
        for (std::size_t s; (s = next++) < end;) results[s - start] = produce(config, pools, *snap, s, hooks);
      };
      const std::size_t n_threads = std::min(config.workers, end - start);
      if (n_threads <= 1) {
        work();
      } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(work);
      }
      for (std::size_t s = start; s < end; ++s) {
        auto& r = results[s - start];
        if (!r) {
          buffer.mark_failed(snap->version, s, false);
        } else if (buffer.submit(std::move(*r)) == SubmitStatus::full) {
          throw Error("buffer capacity exhausted in colocated mode");
        }
      }
      if (auto b = buffer.try_take(G, cap)) return std::move(*b);
    }
    throw Error("no batch after all slots were resolved");
  };

  std::vector<double> curriculum_points, temperature_points;
  double curriculum_acc = 0.0, temperature_acc = 0.0;
  std::size_t curriculum_n = 0, temperature_n = 0;
  std::stop_source trainer_stop;

  for (std::size_t step = 0; step < config.steps; ++step) {
    try {
      if (hooks.before_step) hooks.before_step(step);
      std::optional<Batch> batch;
      if (config.mode == Mode::colocated_sync) batch = sync_batch();
      else batch = buffer.take(G, cap, trainer_stop.get_token());
      if (!batch) break;

      StepMetrics m;
      m.step = step;
      m.loss_mode = config.loss_mode;
      m.temperature = state.temperature;
      m.stage = state.stage;
      m.groups = batch->groups.size();
      m.max_staleness = batch->max_staleness;
      m.mean_reward = batch->reward_count ? batch->reward_sum / static_cast<double>(batch->reward_count) : 0.0;

      std::vector<double> grad(state.policy.size(), 0.0);
      double loss = 0.0;
      for (const auto& g : batch->groups) {
        if (hooks.on_group) hooks.on_group(step, g);
        state.policy.set_temperature(g.temperature);
        auto lg = grpo::loss_and_gradient(g, state.policy, config.loss_mode, config.advantage);
        loss += lg.loss;
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += lg.gradient[i];
      }
      if (!batch->groups.empty()) {
        const double n = static_cast<double>(batch->groups.size());
        auto theta = state.policy.mutable_params();
        for (std::size_t i = 0; i < grad.size(); ++i) theta[i] -= config.learning_rate * grad[i] / n;
        m.loss = loss / n;
      }
      for (double x : state.policy.params())
        if (!std::isfinite(x)) throw Error("parameters diverged at step " + std::to_string(step));

      // Curriculum switch.
      if (config.curriculum.mode == CurriculumMode::two_stage && state.stage == curriculum::Stage::one) {
        curriculum_acc += m.mean_reward;
        if (++curriculum_n == config.curriculum.plateau_every) {
          curriculum_points.push_back(curriculum_acc / static_cast<double>(curriculum_n));
          curriculum_acc = 0.0;
          curriculum_n = 0;
        }
        cstate = curriculum::maybe_switch(cstate, curriculum_points, step + 1, config.curriculum.switch_policy);
        if (cstate.stage == curriculum::Stage::two) {
          state.stage = curriculum::Stage::two;
          report.stage_switch_step = step + 1;
          temperature_points.clear();
          temperature_acc = 0.0;
          temperature_n = 0;
        }
      }

      // Temperature control.
      if (config.temperature.enabled) {
        temperature_acc += m.mean_reward;
        if (++temperature_n == config.temperature.plateau_every) {
          temperature_points.push_back(temperature_acc / static_cast<double>(temperature_n));
          temperature_acc = 0.0;
          temperature_n = 0;
        }
        const bool due = (step + 1) % config.temperature.eval_every == 0;
        if (due && (!config.temperature.require_plateau ||
                    temperature::plateau(temperature_points, config.temperature.plateau))) {
          const auto& tasks = inputs.validation.empty() ? inputs.train : inputs.validation;
          temperature::TempSchedule schedule{state.temperature, config.temperature.candidates, {}};
          const auto seed = mix_seed({config.seed, kTemperatureStream, step});
          for (double t : schedule.candidates)
            schedule.eval_scores[t] = evaluate(tasks, state.policy, rollout_options(config, t, state.max_length),
                                               config.temperature.eval_samples, seed);
          state.temperature = temperature::select_temperature(schedule);
          report.temperature_decisions.push_back({step + 1, state.temperature, schedule.eval_scores});
          temperature_points.clear();
        }
      }

      m.buffer_size = buffer.size();
      state.max_length = config.max_length_at(step + 1);
      publish(publish_snapshot(state, config.quantize_rollouts, config.quant_block));

      m.version = state.version;
      report.max_staleness = std::max(report.max_staleness, m.max_staleness);
      report.metrics.push_back(m);
      report.steps_completed = step + 1;
      if (hooks.on_metrics) hooks.on_metrics(m);
    } catch (const std::exception& e) {
      report.error = e.what();
      break;
    }
  }

  for (auto& w : workers) w.request_stop();
  buffer.notify_all();
  store.notify_all();
  workers.clear();

  report.final_version = state.version;
  report.final_params.assign(state.policy.params().begin(), state.policy.params().end());
  report.final_temperature = state.temperature;
  report.max_observe_delay = store.max_observe_delay();
  return report;
}

DistillResult distill_round(const TabularPolicy& policy, const std::vector<worlds::Task>& tasks,
                            const DistillOptions& options) {
  std::vector<Trajectory> pool;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    for (std::size_t s = 0; s < options.samples_per_task; ++s) {
      auto trace = worlds::rollout(tasks[i], policy, options.rollout, mix_seed({options.seed, i, s}));
      if (trace.reward >= options.threshold && trace.model_token_count() > 0) pool.push_back(std::move(trace));
    }
  }
  if (pool.empty()) throw EmptyDistillPool();

  TabularPolicy student(policy.num_states(), policy.num_actions());
  std::vector<TokenMask> masks;
  double tokens = 0.0;
  for (const auto& t : pool) {
    masks.push_back(grpo::mask_model_tokens(t));
    tokens += static_cast<double>(t.model_token_count());
  }
  auto mean_ll = [&] {
    double ll = 0.0;
    for (std::size_t i = 0; i < pool.size(); ++i) ll += masked_log_prob(student, pool[i], masks[i]);
    return ll / tokens;
  };

  DistillResult result{student, {}, mean_ll(), 0.0};
  for (std::size_t e = 0; e < options.epochs; ++e) {
    std::vector<double> grad(student.size(), 0.0);
    for (std::size_t i = 0; i < pool.size(); ++i) {
      const auto g = grad_log_prob(student, pool[i], masks[i]);
      for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += g[k];
    }
    auto theta = student.mutable_params();
    for (std::size_t k = 0; k < grad.size(); ++k) theta[k] += options.learning_rate * grad[k] / tokens;
  }
  result.log_likelihood_after = mean_ll();
  result.policy = std::move(student);
  result.pool = std::move(pool);
  return result;
}

}  // namespace forge::orchestrator
