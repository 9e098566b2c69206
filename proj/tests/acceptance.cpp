// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>

#include "forge/codec.hpp"
#include "forge/curriculum.hpp"
#include "forge/grpo.hpp"
#include "forge/orchestrator.hpp"
#include "forge/quantize.hpp"
#include "forge/reward.hpp"
#include "forge/temperature.hpp"
#include "forge/worlds.hpp"
#include "grpo_support.hpp"
#include "reward_cases.hpp"
#include "run_support.hpp"
#include "test_support.hpp"

using namespace forge;
using namespace forge::orchestrator;

namespace {

constexpr int kSeeds = 5;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = secs < budget_s;
  const bool pass = o.pass && in_time;
  if (!pass) ++failures;
  std::printf("%s [%d] %s: %s (%.2fs of %.0fs)\n", pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs,
              budget_s);
  std::fflush(stdout);
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", x);
  return buf;
}

Outcome codec_exactness() {
  const bool figure = codec::render(test::weather_conversation()) == test::read_data("weather_example.txt");
  std::size_t round_trips = 0;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const auto conv = test::random_conversation(seed);
    round_trips += codec::parse(codec::render(conv)) == conv;
  }
  const auto snippets = test::code_snippets();
  std::size_t template_escapes = 0, json_escapes = 0, snippet_trips = 0;
  for (const auto& s : snippets) {
    const codec::ToolCall call{"run_code", {{"code", s}}};
    const auto e = codec::escape_overhead(call);
    template_escapes += e.template_escapes;
    json_escapes += e.json_escapes;
    const std::vector<codec::Message> conv{{codec::Role::assistant, {codec::Segment::tool_call(call)}}};
    snippet_trips += codec::parse(codec::render(conv)).messages == conv;
  }
  const double avg = snippets.empty() ? 0.0 : double(json_escapes) / double(snippets.size());
  const bool pass = figure && round_trips == 500 && snippets.size() == 50 && template_escapes == 0 && avg >= 2.0 &&
                    snippet_trips == snippets.size();
  return {pass, std::string("figure ") + (figure ? "byte-exact" : "differs") + ", round-trips " +
                    std::to_string(round_trips) + "/500, snippets " + std::to_string(snippets.size()) +
                    " with template escapes " + std::to_string(template_escapes) + " vs JSON escapes/snippet " +
                    fmt(avg)};
}

Outcome grpo_math() {
  Rng rng(2024);
  double worst_sum = 0.0;
  for (int g = 0; g < 1000; ++g) {
    std::vector<double> r(1 + rng.below(16));
    for (auto& x : r) x = rng.uniform() * 4.0 - 2.0;
    const auto a = grpo::group_advantages(r);
    worst_sum = std::max(worst_sum, std::abs(std::accumulate(a.begin(), a.end(), 0.0)));
  }
  double worst_fd = 0.0;
  for (const auto mode : {grpo::LossMode::token_weighted, grpo::LossMode::sequence_mean})
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      Rng r(seed);
      const auto policy = test::random_policy(r, 6, 4);
      const auto g = test::random_group(r, 6, 4, false);
      worst_fd = std::max(worst_fd, test::gradient_error(g, policy, mode, 1e-5));
    }
  double worst_mode = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng r(seed + 5000);
    auto policy = test::random_policy(r, 6, 4);
    const auto g = test::random_group(r, 6, 4, true);
    policy.set_temperature(g.temperature);
    const auto a = grpo::loss_and_gradient(g, policy, grpo::LossMode::token_weighted);
    const auto b = grpo::loss_and_gradient(g, policy, grpo::LossMode::sequence_mean);
    worst_mode = std::max(worst_mode, std::abs(a.loss - b.loss));
    for (std::size_t j = 0; j < a.gradient.size(); ++j)
      worst_mode = std::max(worst_mode, std::abs(a.gradient[j] - b.gradient[j]));
  }
  std::ostringstream d;
  d << "max |sum A| " << worst_sum << ", max FD rel err " << worst_fd << ", max mode gap " << worst_mode;
  return {worst_sum <= 1e-12 && worst_fd < 1e-4 && worst_mode <= 1e-12, d.str()};
}

Outcome curriculum_replication() {
  int wins = 0, switched = 0;
  std::ostringstream d;
  for (int seed = 0; seed < kSeeds; ++seed) {
    const worlds::ToolWorldParams wp;
    const auto train = worlds::generate_tool_tasks(wp, 96, 200 + seed, 1, 6, 0.1);
    const auto held = worlds::generate_tool_tasks(wp, 32, 900 + seed, 5, 6, 0.0, "hard");
    double score[2] = {0, 0};
    bool logged = false;
    for (int k = 0; k < 2; ++k) {
      RunConfig c;
      c.seed = seed;
      c.steps = 1500;
      c.learning_rate = 2.0;
      c.workers = 1;
      c.curriculum.mode = k == 0 ? CurriculumMode::static_moderate : CurriculumMode::two_stage;
      c.curriculum.switch_policy.plateau = {5, 0.05};
      c.curriculum.plateau_every = 10;
      const auto r = run(c, {train, {}, TabularPolicy(4096, 4)});
      if (!r.ok()) throw Error(*r.error);
      score[k] = evaluate(held, TabularPolicy(4096, 4, r.final_params), {1.0, 8, 64, 0.0, 2}, 8, 77);
      if (k == 1) {
        const bool in_metrics = std::any_of(r.metrics.begin(), r.metrics.end(), [](const StepMetrics& m) {
          return m.stage == curriculum::Stage::two;
        });
        logged = r.stage_switch_step.has_value() && in_metrics;
        d << " s" << seed << " two-stage " << fmt(score[1]) << " vs static " << fmt(score[0]) << " (switch "
          << (r.stage_switch_step ? std::to_string(*r.stage_switch_step) : "none") << ")";
      }
    }
    switched += logged;
    wins += logged && score[1] > score[0];
  }
  return {wins >= 4, std::to_string(wins) + "/5 wins, " + std::to_string(switched) + "/5 switches logged;" + d.str()};
}

// First step whose trailing 20-step mean reward reaches 0.8, or -1.
long steps_to_target(const RunReport& r) {
  std::deque<double> w;
  double s = 0.0;
  for (const auto& m : r.metrics) {
    w.push_back(m.mean_reward);
    s += m.mean_reward;
    if (w.size() > 20) {
      s -= w.front();
      w.pop_front();
    }
    if (w.size() == 20 && s / 20.0 >= 0.8) return static_cast<long>(m.step);
  }
  return -1;
}

Outcome loss_mode_replication() {
  int wins = 0;
  std::ostringstream d;
  for (int seed = 0; seed < kSeeds; ++seed) {
    const worlds::ToolWorldParams wp;
    const auto train = worlds::generate_tool_tasks(wp, 64, 100 + seed, 3, 5);
    long hit[2];
    for (int k = 0; k < 2; ++k) {
      RunConfig c;
      c.seed = seed;
      c.steps = 1500;
      c.learning_rate = 2.0;
      c.workers = 1;
      c.loss_mode = k == 0 ? grpo::LossMode::token_weighted : grpo::LossMode::sequence_mean;
      const auto r = run(c, {train, {}, TabularPolicy(4096, 4)});
      if (!r.ok()) throw Error(*r.error);
      hit[k] = steps_to_target(r);
    }
    const bool win = hit[0] >= 0 && (hit[1] < 0 || hit[0] < hit[1]);
    wins += win;
    d << " s" << seed << " " << hit[0] << " vs " << hit[1];
  }
  return {wins >= 4, std::to_string(wins) + "/5 seeds token_weighted faster (steps to 0.8):" + d.str()};
}

Outcome turn_scaling() {
  int ok = 0;
  std::ostringstream d;
  for (int seed = 0; seed < kSeeds; ++seed) {
    const worlds::SearchWorldParams sp;
    const auto train = worlds::generate_search_tasks(sp, 64, 300 + seed);
    const auto held = worlds::generate_search_tasks(sp, 32, 800 + seed, "held");
    const auto na = train.front().num_actions();
    RunConfig c;
    c.seed = seed;
    c.steps = 1000;
    c.learning_rate = 8.0;
    c.workers = 1;
    c.max_turns = 8;
    const auto r = run(c, {train, {}, TabularPolicy(4096, na)});
    if (!r.ok()) throw Error(*r.error);
    worlds::SweepOptions so;
    so.seed = 5;
    const auto acc = worlds::turn_budget_sweep(held, TabularPolicy(4096, na, r.final_params), {1, 2, 4, 8}, so);
    const bool monotone = std::is_sorted(acc.begin(), acc.end());
    ok += monotone && acc.back() - acc.front() >= 0.2;
    d << " s" << seed << " [";
    for (std::size_t i = 0; i < acc.size(); ++i) d << (i ? " " : "") << fmt(acc[i]);
    d << "]";
  }
  return {ok >= 4, std::to_string(ok) + "/5 seeds monotone with gain >= 0.2:" + d.str()};
}

Outcome temperature_rule() {
  Rng rng(606);
  int agree = 0;
  for (int table = 0; table < 100; ++table) {
    temperature::TempSchedule s;
    const auto n = 2 + rng.below(9);
    double t = 0.1 + rng.uniform();
    for (std::size_t i = 0; i < n; ++i) {
      s.candidates.push_back(t);
      s.eval_scores[t] = 0.5 + 0.5 * rng.uniform();
      t += 0.05 + 0.3 * rng.uniform();
    }
    // Near-ties just inside the cutoff.
    if (rng.bernoulli(0.5)) {
      double best = 0.0;
      for (const auto& [k, v] : s.eval_scores) best = std::max(best, v);
      s.eval_scores[s.candidates[rng.below(n)]] = 0.99 * best + 1e-9;
    }
    double best = 0.0;
    for (const auto& [k, v] : s.eval_scores) best = std::max(best, v);
    double expected = 0.0;
    for (double c : s.candidates)
      if (s.eval_scores[c] >= 0.99 * best) expected = std::max(expected, c);
    agree += temperature::select_temperature(s) == expected && s.current == expected;
  }
  return {agree == 100, std::to_string(agree) + "/100 tables match the exhaustive scan"};
}

Outcome infrastructure() {
  const auto in = test::small_inputs();
  test::ParamTrace sync_trace, async_trace;
  const auto rs = run(test::small_config(Mode::colocated_sync, 0, 500), in, sync_trace.hooks());
  const auto ra = run(test::small_config(Mode::disaggregated_async, 0, 500), in, async_trace.hooks());
  const bool identical = rs.ok() && ra.ok() && sync_trace.versions.size() == 501 &&
                         sync_trace.versions == async_trace.versions && sync_trace.params == async_trace.params;

  std::ostringstream d;
  d << "lag-0 trace " << (identical ? "identical" : "differs") << " over " << sync_trace.versions.size()
    << " versions";
  bool stale_ok = true;
  for (std::size_t lag : {1, 4}) {
    std::uint64_t version = 0, worst = 0;
    RunHooks hooks;
    hooks.on_publish = [&](const PolicySnapshot& s) { version = s.version; };
    hooks.on_group = [&](std::size_t, const grpo::Group& g) { worst = std::max(worst, version - g.policy_version); };
    const auto r = run(test::small_config(Mode::disaggregated_async, lag, 300), in, hooks);
    stale_ok = stale_ok && r.ok() && worst <= lag && r.max_staleness <= lag;
    d << ", lag " << lag << " max staleness " << worst;
  }

  Rng rng(77);
  std::size_t stable = 0;
  for (int b = 0; b < 10000; ++b) {
    std::vector<double> x(128);
    const double spread = std::ldexp(1.0, static_cast<int>(rng.below(16)) - 8);
    for (auto& v : x) v = (2.0 * rng.uniform() - 1.0) * spread;
    const auto q = quant::quantize_blockwise(x, 128);
    stable += quant::quantize_blockwise(quant::dequantize(q), 128) == q;
  }
  d << ", idempotent blocks " << stable << "/10000";

  auto c = test::small_config(Mode::disaggregated_async, 2, 100);
  c.quantize_rollouts = true;
  c.quant_block = 32;
  std::size_t publishes = 0, rollout_quantized = 0;
  RunHooks hooks;
  hooks.on_publish = [&](const PolicySnapshot& s) {
    ++publishes;
    const auto deq = quant::dequantize(*s.quantized);
    const bool rollout_uses_quantized =
        std::equal(deq.begin(), deq.end(), s.rollout_policy.params().begin(), s.rollout_policy.params().end());
    rollout_quantized += rollout_uses_quantized;
  };
  TrainerState state{TabularPolicy(64, 4), 0, 1.0, curriculum::Stage::one, 64};
  for (std::size_t i = 0; i < state.policy.size(); ++i) state.policy.mutable_params()[i] = std::sin(double(i)) * 3.0;
  const std::vector<double> before(state.policy.params().begin(), state.policy.params().end());
  const auto snap = publish_snapshot(state, true, 32);
  const bool trainer_kept = std::equal(before.begin(), before.end(), state.policy.params().begin()) &&
                            snap->params == before && snap->quantized.has_value();
  const auto rq = run(c, in, hooks);
  const bool quant_ok = trainer_kept && rq.ok() && publishes > 0 && rollout_quantized == publishes;
  d << ", trainer params " << (quant_ok ? "bit-identical" : "changed") << " across quantized publishes";
  return {identical && stale_ok && stable == 10000 && quant_ok, d.str()};
}

Outcome reward_kernel() {
  const auto cases = test::reward_cases();
  std::size_t agree = 0;
  for (std::size_t i = 0; i < cases.size(); ++i)
    agree += reward::step_reward(cases[i].output, test::gold_for_case(i)) == cases[i].expected;

  // user, then four call turns; the second is malformed.
  Trajectory t;
  t.task_id = "t";
  t.reward = 1.0;
  t.judgment = TaskJudgment{true, JudgeKind::rule};
  t.messages.push_back({codec::Role::user, {codec::Segment::text("go")}});
  for (int i = 0; i < 4; ++i) {
    if (i == 1)
      t.messages.push_back({codec::Role::assistant, {codec::Segment::text("<tool_call>step\n<arg_val>1")}});
    else
      t.messages.push_back({codec::Role::assistant, {codec::Segment::tool_call({"step", {{"n", std::to_string(i)}}})}});
    t.tokens.push_back({Origin::model, 0, 0, static_cast<std::uint32_t>(t.messages.size() - 1)});
    t.messages.push_back({codec::Role::observation, {codec::Segment::tool_response("ok")}});
  }
  const auto p = reward::apply_format_penalty(t);
  auto first = t;
  first.messages[1] = first.messages[3];
  const auto p1 = reward::apply_format_penalty(first);
  const bool halting = p.call_count() == 2 && p.halted && p.reward == 0.0 &&
                       reward::trajectory_reward("t", p, *p.judgment) == 0 && p1.call_count() == 1 && p1.halted;
  return {agree == 30 && cases.size() == 30 && halting,
          std::to_string(agree) + "/" + std::to_string(cases.size()) + " truth-table cases, format penalty " +
              (halting ? "halts at the first malformed call" : "wrong")};
}

Outcome distillation() {
  int ok = 0;
  std::ostringstream d;
  for (int seed = 0; seed < kSeeds; ++seed) {
    const worlds::ToolWorldParams wp;
    const auto train = worlds::generate_tool_tasks(wp, 64, 400 + seed, 1, 4);
    const auto held = worlds::generate_tool_tasks(wp, 64, 700 + seed, 1, 4, 0.0, "held");
    RunConfig c;
    c.seed = seed;
    c.steps = 300;
    c.learning_rate = 2.0;
    c.workers = 1;
    const auto r = run(c, {train, {}, TabularPolicy(4096, 4)});
    if (!r.ok()) throw Error(*r.error);
    const TabularPolicy teacher(4096, 4, r.final_params);
    DistillOptions opts;
    opts.epochs = 500;
    opts.learning_rate = 4.0;
    opts.seed = 11;
    opts.rollout = {1.0, 8, 64, 0.0, 2};
    const auto res = distill_round(teacher, train, opts);
    const worlds::RolloutOptions ro{1.0, 8, 64, 0.0, 2};
    const double before = evaluate(held, teacher, ro, 16, 5);
    const double after = evaluate(held, res.policy, ro, 16, 5);
    ok += res.log_likelihood_after > res.log_likelihood_before && after >= before;
    d << " s" << seed << " LL " << fmt(res.log_likelihood_before) << "->" << fmt(res.log_likelihood_after)
      << " held-out " << fmt(before) << "->" << fmt(after);
  }
  return {ok >= 4, std::to_string(ok) + "/5 seeds:" + d.str()};
}

}  // namespace

int main() {
  criterion(1, "codec exactness", 5, codec_exactness);
  criterion(2, "GRPO math", 30, grpo_math);
  criterion(3, "two-stage curriculum beats static", 600, curriculum_replication);
  criterion(4, "token-weighted loss converges faster", 600, loss_mode_replication);
  criterion(5, "accuracy scales with turn budget", 600, turn_scaling);
  criterion(6, "temperature 1% rule", 1, temperature_rule);
  criterion(7, "infrastructure contracts", 120, infrastructure);
  criterion(8, "reward kernel", 1, reward_kernel);
  criterion(9, "distillation", 300, distillation);
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
