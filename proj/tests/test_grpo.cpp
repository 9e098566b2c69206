#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "forge/error.hpp"
#include "forge/grpo.hpp"
#include "grpo_support.hpp"

using namespace forge;
using grpo::LossMode;

TEST_CASE("advantages are zero-sum") {
  Rng rng(1);
  for (int g = 0; g < 1000; ++g) {
    std::vector<double> r(1 + rng.below(16));
    for (auto& x : r) x = rng.uniform() * 10.0 - 5.0;
    const auto a = grpo::group_advantages(r);
    CHECK(std::abs(std::accumulate(a.begin(), a.end(), 0.0)) < 1e-12);
  }
}

TEST_CASE("advantage edge cases and invariances") {
  CHECK(grpo::group_advantages(std::vector<double>{1, 1, 1}) == std::vector<double>{0, 0, 0});
  CHECK(grpo::group_advantages(std::vector<double>{1, 0}) == std::vector<double>{0.5, -0.5});
  CHECK_THROWS_AS(grpo::group_advantages(std::vector<double>{}), EmptyGroup);

  const std::vector<double> r{0.2, 0.9, 0.4, 0.0};
  const auto base = grpo::group_advantages(r);
  std::vector<double> shifted = r, scaled = r;
  for (auto& x : shifted) x += 3.0;
  for (auto& x : scaled) x *= 2.5;
  const auto a_shift = grpo::group_advantages(shifted);
  const auto a_scale = grpo::group_advantages(scaled);
  for (std::size_t i = 0; i < r.size(); ++i) {
    CHECK(a_shift[i] == doctest::Approx(base[i]).epsilon(1e-12));
    CHECK(a_scale[i] == doctest::Approx(2.5 * base[i]).epsilon(1e-12));
  }
}

TEST_CASE("gradient matches central differences") {
  for (const auto mode : {LossMode::token_weighted, LossMode::sequence_mean}) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      Rng rng(seed);
      const auto policy = test::random_policy(rng, 5, 4);
      const auto g = test::random_group(rng, 5, 4, false);
      INFO("mode " << grpo::to_string(mode) << " seed " << seed);
      CHECK(test::gradient_error(g, policy, mode, 1e-5) < 1e-4);
    }
  }
}

TEST_CASE("loss modes coincide for equal lengths") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed + 1000);
    auto policy = test::random_policy(rng, 5, 4);
    const auto g = test::random_group(rng, 5, 4, true);
    policy.set_temperature(g.temperature);
    const auto a = grpo::loss_and_gradient(g, policy, LossMode::token_weighted);
    const auto b = grpo::loss_and_gradient(g, policy, LossMode::sequence_mean);
    CHECK(std::abs(a.loss - b.loss) < 1e-12);
    for (std::size_t j = 0; j < a.gradient.size(); ++j) CHECK(std::abs(a.gradient[j] - b.gradient[j]) < 1e-12);
  }
}

TEST_CASE("equal rewards give zero loss and gradient") {
  Rng rng(3);
  const auto policy = test::random_policy(rng, 5, 4);
  auto g = test::random_group(rng, 5, 4, false);
  for (auto& r : g.rewards) r = 1.0;
  const auto out = grpo::loss_and_gradient(g, policy, LossMode::token_weighted);
  CHECK(out.loss == 0.0);
  for (double x : out.gradient) CHECK(x == 0.0);
}

TEST_CASE("environment tokens never contribute") {
  Rng rng(4);
  const auto policy = test::random_policy(rng, 5, 4);
  auto g = test::random_group(rng, 5, 4, false);
  const auto before = grpo::loss_and_gradient(g, policy, LossMode::sequence_mean);
  for (auto& t : g.trajectories)
    for (auto& tok : t.tokens)
      if (tok.origin == Origin::environment) tok.symbol = (tok.symbol + 1) % 4, tok.state = (tok.state + 2) % 5;
  const auto after = grpo::loss_and_gradient(g, policy, LossMode::sequence_mean);
  CHECK(before.loss == after.loss);
  CHECK(before.gradient == after.gradient);
}

TEST_CASE("hand-computed sequence mean loss") {
  // Two actions, uniform policy: log pi = log 0.5 per token.
  const TabularPolicy policy(1, 2);
  grpo::Group g;
  g.task = "h";
  Trajectory a, b;
  a.tokens = {{Origin::model, 0, 0, 0}};
  b.tokens = {{Origin::model, 0, 1, 0}, {Origin::model, 0, 1, 1}, {Origin::model, 0, 1, 2}};
  g.trajectories = {a, b};
  g.rewards = {1.0, 0.0};
  const double l = std::log(0.5);
  // A = {0.5, -0.5}
  const double seq = -(0.5 * l / 1.0 + -0.5 * 3.0 * l / 3.0) / 2.0;
  const double tok = -(0.5 * l + -0.5 * 3.0 * l) / 4.0;
  CHECK(grpo::loss_value(g, policy, LossMode::sequence_mean) == doctest::Approx(seq).epsilon(1e-12));
  CHECK(grpo::loss_value(g, policy, LossMode::token_weighted) == doctest::Approx(tok).epsilon(1e-12));
}

TEST_CASE("empty inputs are rejected") {
  const TabularPolicy policy(1, 2);
  grpo::Group g;
  CHECK_THROWS_AS(grpo::loss_and_gradient(g, policy, LossMode::token_weighted), EmptyGroup);
  Trajectory env_only;
  env_only.tokens = {{Origin::environment, 0, 0, 0}};
  g.trajectories = {env_only};
  g.rewards = {1.0};
  CHECK_THROWS_AS(grpo::loss_and_gradient(g, policy, LossMode::token_weighted), EmptyMask);
}

TEST_CASE("loss mode names") {
  CHECK(grpo::loss_mode_from_string("token_weighted") == LossMode::token_weighted);
  CHECK(grpo::loss_mode_from_string(grpo::to_string(LossMode::sequence_mean)) == LossMode::sequence_mean);
  CHECK_THROWS(grpo::loss_mode_from_string("mean"));
}
