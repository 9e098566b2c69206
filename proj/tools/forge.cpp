// forge: command-line entry point.
//
//   forge run <config> [--seed N] [--mode M] [--loss-mode L] [--max-lag N] [--out DIR]
//   forge gen-tasks --world tool|search --n N --seed S [--out FILE]
//   forge codec render <conversation.json>
//   forge codec parse <template.txt>
//   forge eval-temp <config> [--policy policy.json]
//   forge replay <trajectories.jsonl> [--tasks tasks.jsonl]
//   forge report <metrics.jsonl> [--window N] [--accuracy report.json] [--out FILE]
//
// Exit codes: 0 ok, 1 runtime or I/O failure, 2 bad configuration or usage.

#include <deque>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "forge/codec.hpp"
#include "forge/config.hpp"
#include "forge/error.hpp"
#include "forge/experiment.hpp"
#include "forge/temperature.hpp"
#include "forge/trajectory.hpp"
#include "forge/worlds.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace forge;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<json> read_jsonl(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open " + path.string());
  std::vector<json> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(f, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw Error(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

// Output goes to a file when a path is given, else stdout.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw Error("cannot write " + path);
    }
  }
  std::ostream& get() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

struct RunArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string mode, loss_mode, out;
  std::optional<std::size_t> max_lag;
};

int cmd_run(const RunArgs& a) {
  auto j = json::parse(read_file(a.config), nullptr, false);
  if (j.is_discarded()) throw ConfigError("", a.config + ": not valid JSON");
  if (a.seed) j["run"]["seed"] = *a.seed;
  if (!a.mode.empty()) j["run"]["mode"] = a.mode;
  if (!a.loss_mode.empty()) j["run"]["loss_mode"] = a.loss_mode;
  if (a.max_lag) j["run"]["max_lag"] = *a.max_lag;
  if (!a.out.empty()) j["out_dir"] = a.out;
  const auto cfg = config::from_json(j);

  const fs::path out = cfg.out_dir;
  const auto result = experiment::run(cfg, out);
  std::cout << "steps " << experiment::to_json(result)["steps_completed"].get<std::size_t>() << ", held-out reward "
            << result.held_out_reward << "\n";
  for (const auto& [b, acc] : result.accuracy) std::cout << "  budget " << b << ": accuracy " << acc << "\n";
  std::cout << "wrote " << out.string() << "\n";
  if (result.error) {
    std::cerr << "run aborted: " << *result.error << "\n";
    return 1;
  }
  return 0;
}

struct GenArgs {
  std::string world = "tool";
  std::size_t n = 16;
  std::uint64_t seed = 0;
  std::size_t min_length = 1, max_length = 4;
  double unverified = 0.0;
  std::string out;
};

int cmd_gen_tasks(const GenArgs& a) {
  const auto kind = worlds::world_kind_from_string(a.world);
  const auto tasks = kind == worlds::WorldKind::tool
                         ? worlds::generate_tool_tasks({}, a.n, a.seed, a.min_length, a.max_length, a.unverified)
                         : worlds::generate_search_tasks({}, a.n, a.seed);
  Sink sink(a.out);
  for (const auto& t : tasks) sink.get() << worlds::to_json(t).dump() << "\n";
  return 0;
}

int cmd_codec_render(const std::string& path) {
  const auto j = json::parse(read_file(path));
  codec::Conversation c;
  for (const auto& m : j.at("messages")) c.messages.push_back(message_from_json(m));
  if (j.contains("tools"))
    for (const auto& t : j.at("tools")) c.tools.push_back({t.get<std::string>()});
  std::cout << codec::render(c);
  return 0;
}

int cmd_codec_parse(const std::string& path) {
  const auto c = codec::parse(read_file(path));
  json messages = json::array();
  for (const auto& m : c.messages) messages.push_back(message_to_json(m));
  json tools = json::array();
  for (const auto& t : c.tools) tools.push_back(t.json_line);
  std::cout << json{{"messages", messages}, {"tools", tools}}.dump(2) << "\n";
  return 0;
}

int cmd_eval_temp(const std::string& config_path, const std::string& policy_path) {
  const auto cfg = config::load(config_path);
  const auto tasks = experiment::make_tasks(cfg.world);
  const auto policy = policy_path.empty()
                          ? TabularPolicy(cfg.world.num_states, tasks.train.front().num_actions())
                          : experiment::policy_from_json(json::parse(read_file(policy_path)));
  const auto& eval_tasks = tasks.validation.empty() ? tasks.train : tasks.validation;
  temperature::TempSchedule schedule{cfg.run.temperature.initial, cfg.run.temperature.candidates, {}};
  for (double t : schedule.candidates) {
    worlds::RolloutOptions ro{t, cfg.run.max_turns, cfg.run.max_length, 0.0, cfg.run.history};
    schedule.eval_scores[t] =
        orchestrator::evaluate(eval_tasks, policy, ro, cfg.run.temperature.eval_samples, cfg.eval.seed);
  }
  const double chosen = temperature::select_temperature(schedule);
  std::cout << "temperature,score\n";
  for (const auto& [t, s] : schedule.eval_scores) std::cout << t << "," << s << "\n";
  std::cout << "selected " << chosen << "\n";
  return 0;
}

int cmd_replay(const std::string& traj_path, std::string tasks_path) {
  if (tasks_path.empty()) tasks_path = (fs::path(traj_path).parent_path() / "tasks.jsonl").string();
  std::map<TaskId, worlds::Task> tasks;
  for (const auto& j : read_jsonl(tasks_path)) {
    auto t = worlds::task_from_json(j);
    auto id = t.id();
    tasks.emplace(std::move(id), std::move(t));
  }
  std::size_t total = 0, agree = 0;
  for (const auto& j : read_jsonl(traj_path)) {
    const auto trace = trajectory_from_json(j);
    const auto it = tasks.find(trace.task_id);
    ++total;
    if (it == tasks.end()) {
      std::cerr << "unknown task " << trace.task_id << "\n";
      continue;
    }
    const double r = worlds::rescore(it->second, trace);
    if (r == trace.reward) ++agree;
    else std::cerr << "mismatch on " << trace.task_id << ": stored " << trace.reward << ", recomputed " << r << "\n";
  }
  const double pct = total ? 100.0 * static_cast<double>(agree) / static_cast<double>(total) : 100.0;
  std::cout << agree << "/" << total << " rewards agree (" << std::fixed << std::setprecision(2) << pct << "%)\n";
  return agree == total ? 0 : 1;
}

int cmd_report(const std::string& metrics_path, std::size_t window, const std::string& accuracy_path,
               const std::string& out) {
  Sink sink(out);
  auto& os = sink.get();
  if (!accuracy_path.empty()) {
    const auto report = json::parse(read_file(accuracy_path));
    os << "budget,accuracy\n";
    std::vector<std::pair<std::size_t, double>> rows;
    for (const auto& [b, a] : report.at("accuracy_per_budget").items()) rows.emplace_back(std::stoul(b), a.get<double>());
    std::sort(rows.begin(), rows.end());
    for (const auto& [b, a] : rows) os << b << "," << a << "\n";
    return 0;
  }
  os << "step,version,mean_reward,reward_moving_avg,loss,loss_mode,temperature,stage,buffer_size,max_staleness\n";
  std::deque<double> recent;
  double sum = 0.0;
  for (const auto& m : read_jsonl(metrics_path)) {
    const double r = m.at("mean_reward").get<double>();
    recent.push_back(r);
    sum += r;
    if (recent.size() > window) {
      sum -= recent.front();
      recent.pop_front();
    }
    os << m.at("step").get<std::size_t>() << "," << m.at("version").get<std::uint64_t>() << "," << r << ","
       << sum / static_cast<double>(recent.size()) << "," << m.at("loss").get<double>() << ","
       << m.at("loss_mode").get<std::string>() << "," << m.at("temperature").get<double>() << ","
       << m.at("stage").get<std::string>() << "," << m.at("buffer_size").get<std::size_t>() << ","
       << m.at("max_staleness").get<std::uint64_t>() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"forge: agentic RL training toolkit on toy worlds"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Run a full experiment from a config file");
  run->add_option("config", run_args.config, "Experiment config (JSON)")->required();
  run->add_option("--seed", run_args.seed, "Override run.seed");
  run->add_option("--mode", run_args.mode, "colocated_sync or disaggregated_async");
  run->add_option("--loss-mode", run_args.loss_mode, "token_weighted or sequence_mean");
  run->add_option("--max-lag", run_args.max_lag, "Override run.max_lag");
  run->add_option("--out", run_args.out, "Output directory");

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-tasks", "Generate a task set as JSON lines");
  gen_cmd->add_option("--world", gen.world, "tool or search");
  gen_cmd->add_option("--n", gen.n, "Number of tasks");
  gen_cmd->add_option("--seed", gen.seed, "Generator seed");
  gen_cmd->add_option("--min-length", gen.min_length, "Shortest tool workflow");
  gen_cmd->add_option("--max-length", gen.max_length, "Longest tool workflow");
  gen_cmd->add_option("--unverified", gen.unverified, "Fraction of tasks without a verified answer");
  gen_cmd->add_option("--out", gen.out, "Output file (default stdout)");

  std::string codec_file;
  auto* codec_cmd = app.add_subcommand("codec", "Render or parse the function-call template");
  codec_cmd->require_subcommand(1);
  auto* render = codec_cmd->add_subcommand("render", "Render a conversation JSON file to template text");
  render->add_option("file", codec_file)->required();
  auto* parse = codec_cmd->add_subcommand("parse", "Parse template text into conversation JSON");
  parse->add_option("file", codec_file)->required();

  std::string eval_config, eval_policy;
  auto* eval = app.add_subcommand("eval-temp", "Score temperature candidates on validation tasks");
  eval->add_option("config", eval_config)->required();
  eval->add_option("--policy", eval_policy, "Policy file written by run (default: untrained)");

  std::string replay_file, replay_tasks;
  auto* replay = app.add_subcommand("replay", "Re-score stored trajectories and compare rewards");
  replay->add_option("trajectories", replay_file)->required();
  replay->add_option("--tasks", replay_tasks, "Task file (default: tasks.jsonl next to the trajectories)");

  std::string report_file, report_accuracy, report_out;
  std::size_t report_window = 20;
  auto* report = app.add_subcommand("report", "Emit CSV curves from a metrics stream");
  report->add_option("metrics", report_file);
  report->add_option("--window", report_window, "Moving-average window");
  report->add_option("--accuracy", report_accuracy, "Emit accuracy per budget from a report.json instead");
  report->add_option("--out", report_out, "Output file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_args);
    if (*gen_cmd) return cmd_gen_tasks(gen);
    if (*render) return cmd_codec_render(codec_file);
    if (*parse) return cmd_codec_parse(codec_file);
    if (*eval) return cmd_eval_temp(eval_config, eval_policy);
    if (*replay) return cmd_replay(replay_file, replay_tasks);
    if (*report) {
      if (report_file.empty() && report_accuracy.empty()) throw CLI::RequiredError("metrics");
      return cmd_report(report_file, std::max<std::size_t>(report_window, 1), report_accuracy, report_out);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const CLI::Error& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const FormatError& e) {
    std::cerr << "format error at byte " << e.offset() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
