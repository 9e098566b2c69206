#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "forge/grpo.hpp"
#include "forge/policy.hpp"
#include "forge/rng.hpp"

namespace forge::test {

// Random group over a small table. Traces interleave model and environment
// tokens; `equal_lengths` gives every trace the same number of model tokens.
inline grpo::Group random_group(Rng& rng, std::size_t num_states, std::size_t num_actions, bool equal_lengths) {
  grpo::Group g;
  g.task = "g";
  g.temperature = 0.5 + rng.uniform();
  const auto k = 2 + rng.below(7);
  const auto shared_len = 1 + rng.below(6);
  for (std::size_t i = 0; i < k; ++i) {
    Trajectory t;
    t.task_id = g.task;
    t.temperature = g.temperature;
    const auto len = equal_lengths ? shared_len : 1 + rng.below(6);
    std::uint32_t msg = 0;
    t.tokens.push_back({Origin::environment, 0, 0, msg++});
    for (std::size_t j = 0; j < len; ++j) {
      t.tokens.push_back({Origin::model, static_cast<std::uint32_t>(rng.below(num_states)),
                          static_cast<std::uint32_t>(rng.below(num_actions)), msg++});
      if (rng.bernoulli(0.5))
        t.tokens.push_back({Origin::environment, static_cast<std::uint32_t>(rng.below(num_states)),
                            static_cast<std::uint32_t>(rng.below(num_actions)), msg++});
    }
    g.rewards.push_back(rng.bernoulli(0.5) ? 1.0 : 0.0);
    g.trajectories.push_back(std::move(t));
  }
  return g;
}

inline TabularPolicy random_policy(Rng& rng, std::size_t num_states, std::size_t num_actions) {
  std::vector<double> params(num_states * num_actions);
  for (auto& p : params) p = 2.0 * rng.uniform() - 1.0;
  return TabularPolicy(num_states, num_actions, std::move(params));
}

// Relative L2 error of the analytic gradient against central differences.
inline double gradient_error(const grpo::Group& g, const TabularPolicy& policy, grpo::LossMode mode, double h) {
  auto probe = policy;
  probe.set_temperature(g.temperature);
  const auto analytic = grpo::loss_and_gradient(g, probe, mode).gradient;
  double diff2 = 0.0, norm2 = 0.0, fd_norm2 = 0.0;
  for (std::size_t j = 0; j < policy.size(); ++j) {
    const double orig = probe.params()[j];
    probe.mutable_params()[j] = orig + h;
    const double up = grpo::loss_value(g, probe, mode);
    probe.mutable_params()[j] = orig - h;
    const double down = grpo::loss_value(g, probe, mode);
    probe.mutable_params()[j] = orig;
    const double fd = (up - down) / (2.0 * h);
    diff2 += (fd - analytic[j]) * (fd - analytic[j]);
    norm2 += analytic[j] * analytic[j];
    fd_norm2 += fd * fd;
  }
  return std::sqrt(diff2) / std::max({std::sqrt(norm2), std::sqrt(fd_norm2), 1e-12});
}

}  // namespace forge::test
