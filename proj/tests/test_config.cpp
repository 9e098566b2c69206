#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "forge/config.hpp"
#include "forge/error.hpp"
#include "forge/experiment.hpp"

using namespace forge;
using nlohmann::json;

#ifndef FORGE_SOURCE_DIR
#define FORGE_SOURCE_DIR "."
#endif

namespace {

std::string error_of(const json& j) {
  try {
    config::from_json(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("defaults round-trip") {
  const config::ExperimentConfig c;
  const auto j = config::to_json(c);
  CHECK(config::to_json(config::from_json(j)) == j);
  CHECK(config::from_json(json::object()).run.learning_rate == 0.1);
}

TEST_CASE("shipped configs load and round-trip") {
  for (const char* name : {"sync_example.json", "async_example.json"}) {
    const auto c = config::load(std::string(FORGE_SOURCE_DIR) + "/configs/" + name);
    const auto j = config::to_json(c);
    CHECK(config::to_json(config::from_json(j)) == j);
    CHECK_NOTHROW(c.run.validate());
  }
}

TEST_CASE("unknown keys are named by path") {
  CHECK(error_of({{"bogus", 1}}).find("bogus") != std::string::npos);
  const auto e = error_of({{"run", {{"curriculum", {{"xyz", 1}}}}}});
  CHECK(e.find("run.curriculum.xyz") != std::string::npos);
  CHECK(error_of({{"world", {{"tool", {{"num_hint", 3}}}}}}).find("world.tool.num_hint") != std::string::npos);
}

TEST_CASE("bad values are rejected") {
  CHECK_FALSE(error_of({{"run", {{"mode", "fast"}}}}).empty());
  CHECK_FALSE(error_of({{"run", {{"steps", "ten"}}}}).empty());
  CHECK_FALSE(error_of({{"run", {{"mode", "colocated_sync"}, {"max_lag", 2}}}}).empty());
  CHECK_FALSE(error_of({{"world", {{"kind", "maze"}}}}).empty());
  CHECK_FALSE(error_of({{"run", {{"loss_mode", "mean"}}}}).empty());
}

TEST_CASE("overrides survive the round trip") {
  json j = {{"run", {{"mode", "disaggregated_async"}, {"max_lag", 3}, {"loss_mode", "sequence_mean"}, {"seed", 9}}},
            {"world", {{"kind", "search"}, {"search", {{"branching", 3}, {"depth", 3}}}}},
            {"eval", {{"budgets", {1, 3, 9}}}}};
  const auto c = config::from_json(j);
  CHECK(c.run.mode == orchestrator::Mode::disaggregated_async);
  CHECK(c.run.max_lag == 3);
  CHECK(c.run.loss_mode == grpo::LossMode::sequence_mean);
  CHECK(c.world.kind == worlds::WorldKind::search);
  CHECK(c.world.search.depth == 3);
  CHECK(c.eval.budgets == std::vector<std::size_t>{1, 3, 9});
  CHECK(config::to_json(config::from_json(config::to_json(c))) == config::to_json(c));
}

TEST_CASE("policy files round-trip") {
  TabularPolicy p(3, 2, std::vector<double>{0.1, -0.2, 0.3, 1e-17, 5.0, -7.25});
  const auto back = experiment::policy_from_json(json::parse(experiment::policy_to_json(p).dump()));
  CHECK(std::vector<double>(back.params().begin(), back.params().end()) ==
        std::vector<double>(p.params().begin(), p.params().end()));
}
