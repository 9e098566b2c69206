#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Output {
  int code = 0;
  std::string text;
};

Output sh(const std::string& args) {
  const std::string cmd = std::string(FORGE_BIN) + " " + args + " 2>&1";
  Output out;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  while (const auto n = fread(buf, 1, sizeof buf, p)) out.text.append(buf, n);
  const int status = pclose(p);
  out.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("forge_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const std::string kConfigs = std::string(FORGE_SOURCE_DIR) + "/configs/";

}  // namespace

TEST_CASE("run, replay and report on the sync example") {
  const auto dir = scratch("sync");
  const auto run = sh("run " + kConfigs + "sync_example.json --out " + (dir / "a").string());
  INFO(run.text);
  REQUIRE(run.code == 0);
  for (const char* f : {"config.json", "tasks.jsonl", "metrics.jsonl", "trajectories.jsonl", "policy.json",
                        "report.json", "difficulty.jsonl"})
    CHECK(fs::exists(dir / "a" / f));

  const auto replay = sh("replay " + (dir / "a" / "trajectories.jsonl").string());
  INFO(replay.text);
  CHECK(replay.code == 0);
  CHECK(replay.text.find("(100.00%)") != std::string::npos);

  const auto report = nlohmann::json::parse(slurp(dir / "a" / "report.json"));
  CHECK(report["accuracy_per_budget"].size() == 4);
  CHECK(report["stage_switch_step"].is_number());

  // The echoed config reproduces the run.
  const auto again = sh("run " + (dir / "a" / "config.json").string() + " --out " + (dir / "b").string());
  REQUIRE(again.code == 0);
  CHECK(slurp(dir / "a" / "policy.json") == slurp(dir / "b" / "policy.json"));
  CHECK(slurp(dir / "a" / "metrics.jsonl") == slurp(dir / "b" / "metrics.jsonl"));

  const auto csv = sh("report " + (dir / "a" / "metrics.jsonl").string() + " --window 5");
  CHECK(csv.code == 0);
  CHECK(csv.text.rfind("step,", 0) == 0);
  fs::remove_all(dir);
}

TEST_CASE("unknown config key exits with code 2") {
  const auto dir = scratch("bad");
  std::ofstream(dir / "bad.json") << R"({"run": {"stepz": 3}})";
  const auto out = sh("run " + (dir / "bad.json").string());
  CHECK(out.code == 2);
  CHECK(out.text.find("run.stepz") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("codec subcommands round-trip") {
  const auto dir = scratch("codec");
  const auto text = sh("codec render " + std::string(FORGE_SOURCE_DIR) + "/tests/data/weather_conversation.json");
  REQUIRE(text.code == 0);
  CHECK(text.text == slurp(std::string(FORGE_SOURCE_DIR) + "/tests/data/weather_example.txt"));
  std::ofstream(dir / "conv.txt", std::ios::binary) << text.text;
  const auto parsed = sh("codec parse " + (dir / "conv.txt").string());
  REQUIRE(parsed.code == 0);
  std::ofstream(dir / "conv.json") << parsed.text;
  const auto again = sh("codec render " + (dir / "conv.json").string());
  CHECK(again.text == text.text);

  std::ofstream(dir / "broken.txt") << "<|user|>\nhi<|robot|>\n";
  const auto bad = sh("codec parse " + (dir / "broken.txt").string());
  CHECK(bad.code == 1);
  CHECK(bad.text.find("byte 11") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("gen-tasks is deterministic") {
  const auto a = sh("gen-tasks --world search --n 5 --seed 4");
  const auto b = sh("gen-tasks --world search --n 5 --seed 4");
  CHECK(a.code == 0);
  CHECK(a.text == b.text);
  std::size_t lines = 0;
  for (char c : a.text) lines += c == '\n';
  CHECK(lines == 5);
  CHECK(sh("gen-tasks --world maze").code != 0);
}
