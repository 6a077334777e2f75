#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <memory>

#include "markersim/errors.hpp"
#include "markersim/rl/ppo.hpp"
#include "rl_fixtures.hpp"

using namespace markersim;
using namespace markersim::rl;

namespace {

GaeResult gae(const std::vector<double>& r, const std::vector<double>& v, std::vector<int> dones_int,
              double gamma, double lambda, double bootstrap) {
  auto dones = std::make_unique<bool[]>(dones_int.size());
  for (std::size_t i = 0; i < dones_int.size(); ++i) dones[i] = dones_int[i] != 0;
  return compute_gae(r, v, std::span<const bool>(dones.get(), dones_int.size()), gamma, lambda, bootstrap);
}

// Direct expansion A_t = sum_k (gamma*lambda)^k delta_{t+k}, truncated at the first done.
std::vector<double> brute_force_gae(const std::vector<double>& r, const std::vector<double>& v,
                                    const std::vector<int>& d, double g, double l, double boot) {
  const std::size_t n = r.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    double weight = 1.0;
    for (std::size_t k = t; k < n; ++k) {
      const double next_v = k + 1 < n ? v[k + 1] : boot;
      const double delta = r[k] + g * next_v * (d[k] ? 0.0 : 1.0) - v[k];
      out[t] += weight * delta;
      if (d[k]) break;
      weight *= g * l;
    }
  }
  return out;
}

}  // namespace

TEST(Gae, AllZero) {
  const auto res = gae({0, 0, 0}, {0, 0, 0}, {0, 0, 1}, 0.99, 0.95, 0.0);
  for (const double a : res.advantages) EXPECT_EQ(a, 0.0);
}

TEST(Gae, SingleTerminalStep) {
  const auto res = gae({1.5}, {0.4}, {1}, 0.99, 0.95, 7.0);
  EXPECT_DOUBLE_EQ(res.advantages[0], 1.5 - 0.4);
  EXPECT_DOUBLE_EQ(res.returns[0], 1.5);
}

TEST(Gae, LengthThreeMatchesExpansion) {
  const std::vector<double> r{0.3, -0.2, 1.1};
  const std::vector<double> v{0.5, 0.1, -0.4};
  for (const std::vector<int>& d : {std::vector<int>{0, 0, 0}, {0, 1, 0}, {1, 0, 1}}) {
    const auto res = gae(r, v, d, 0.99, 0.95, 0.8);
    const auto expected = brute_force_gae(r, v, d, 0.99, 0.95, 0.8);
    for (int t = 0; t < 3; ++t) {
      EXPECT_NEAR(res.advantages[t], expected[t], 1e-14);
      EXPECT_NEAR(res.returns[t], expected[t] + v[t], 1e-14);
    }
  }
}

TEST(Gae, RandomSequencesMatchExpansion) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = uniform_int(rng, 1, 40);
    std::vector<double> r(n), v(n);
    std::vector<int> d(n);
    for (int i = 0; i < n; ++i) {
      r[i] = uniform(rng, -1, 1);
      v[i] = uniform(rng, -1, 1);
      d[i] = uniform(rng, 0, 1) < 0.1;
    }
    const double boot = uniform(rng, -1, 1);
    const auto res = gae(r, v, d, 0.97, 0.9, boot);
    const auto expected = brute_force_gae(r, v, d, 0.97, 0.9, boot);
    for (int i = 0; i < n; ++i) EXPECT_NEAR(res.advantages[i], expected[i], 1e-12);
  }
}

TEST(Gae, LengthMismatchIsContractViolation) {
  EXPECT_THROW(gae({1, 2}, {1}, {0, 0}, 0.99, 0.95, 0), ContractViolation);
}

TEST(PpoLoss, GradientMatchesFiniteDifferences) {
  const Policy p = test::toy_policy(11);
  ASSERT_EQ(p.params().size(), 182u);
  const auto batch = test::synthetic_batch(p, 24, 12);
  PPOConfig cfg;
  EXPECT_LT(test::ppo_gradient_max_rel_error(p, batch.samples, cfg), 1e-4);
  cfg.entropy_coef = 0.2;
  cfg.value_coef = 1.3;
  EXPECT_LT(test::ppo_gradient_max_rel_error(p, batch.samples, cfg), 1e-4);
}

TEST(PpoLoss, ClippedSamplesGiveNoPolicyGradient) {
  const Policy p = test::toy_policy(13);
  Rng rng(14);
  std::vector<PolicyInput> inputs{test::random_input(p.arch(), rng), test::random_input(p.arch(), rng)};
  PPOConfig cfg;
  cfg.value_coef = 0.0;
  cfg.entropy_coef = 0.0;
  std::vector<PPOSample> batch;
  const auto o0 = policy_forward(p, inputs[0]);
  const auto o1 = policy_forward(p, inputs[1]);
  // ratio 1.5 with positive advantage, ratio 0.6 with negative advantage
  batch.push_back({&inputs[0], 1, std::log(o0.probs[1]) - std::log(1.5), 2.0, 0.0});
  batch.push_back({&inputs[1], 2, std::log(o1.probs[2]) - std::log(0.6), -1.0, 0.0});
  std::vector<double> grad(p.params().size(), 1.0);
  const auto loss = ppo_loss(p, batch, cfg, grad);
  for (const double g : grad) EXPECT_EQ(g, 0.0);
  EXPECT_DOUBLE_EQ(loss.clip_fraction, 1.0);
}

TEST(PpoLoss, UnclippedSideStillCarriesGradient) {
  const Policy p = test::toy_policy(15);
  Rng rng(16);
  std::vector<PolicyInput> inputs{test::random_input(p.arch(), rng)};
  PPOConfig cfg;
  cfg.value_coef = 0.0;
  cfg.entropy_coef = 0.0;
  const auto o = policy_forward(p, inputs[0]);
  // ratio 1.5 but negative advantage: min picks the unclipped term
  std::vector<PPOSample> batch{{&inputs[0], 1, std::log(o.probs[1]) - std::log(1.5), -2.0, 0.0}};
  std::vector<double> grad(p.params().size(), 0.0);
  ppo_loss(p, batch, cfg, grad);
  double norm = 0.0;
  for (const double g : grad) norm += g * g;
  EXPECT_GT(norm, 0.0);
}

TEST(PpoLoss, ZeroAdvantageLeavesPolicyHeadUntouched) {
  const Policy p = test::toy_policy(17);
  auto batch = test::synthetic_batch(p, 16, 18);
  const std::vector<double> raw(batch.samples.size(), 0.5);
  const auto normalized = normalize_advantages(raw, 1e-8);
  for (std::size_t i = 0; i < batch.samples.size(); ++i) {
    EXPECT_EQ(normalized[i], 0.0);
    batch.samples[i].advantage = normalized[i];
  }
  PPOConfig cfg;
  cfg.entropy_coef = 0.0;
  std::vector<double> grad(p.params().size(), 0.0);
  ppo_loss(p, batch.samples, cfg, grad);
  const auto l = p.layout();
  for (std::size_t i = l.w_pi; i < l.w_v; ++i) EXPECT_EQ(grad[i], 0.0) << i;
  double value_norm = 0.0;
  for (std::size_t i = l.w_v; i < l.total; ++i) value_norm += grad[i] * grad[i];
  EXPECT_GT(value_norm, 0.0);
}

TEST(PpoLoss, RatioOneMakesClipIrrelevant) {
  const Policy p = test::toy_policy(19);
  auto batch = test::synthetic_batch(p, 20, 20);
  for (auto& s : batch.samples) {
    s.old_log_prob = std::log(policy_forward(p, *s.input).probs[static_cast<std::size_t>(s.action)]);
  }
  PPOConfig tight;
  tight.entropy_coef = 0.0;
  PPOConfig loose = tight;
  loose.clip = 1e9;
  std::vector<double> ga(p.params().size()), gb(p.params().size());
  const auto la = ppo_loss(p, batch.samples, tight, ga);
  const auto lb = ppo_loss(p, batch.samples, loose, gb);
  EXPECT_EQ(la.policy, lb.policy);
  EXPECT_EQ(ga, gb);
  double mean_adv = 0.0;
  for (const auto& s : batch.samples) mean_adv += s.advantage / batch.samples.size();
  EXPECT_NEAR(la.policy, -mean_adv, 1e-12);
}

TEST(PpoLoss, EmptyBatchIsContractViolation) {
  const Policy p = test::toy_policy(21);
  EXPECT_THROW(ppo_loss(p, {}, {}), ContractViolation);
}

TEST(Optim, NormalizeAdvantages) {
  const auto n = normalize_advantages(std::vector<double>{1, 2, 3, 4}, 1e-8);
  double mean = 0.0, var = 0.0;
  for (const double a : n) mean += a / 4;
  for (const double a : n) var += (a - mean) * (a - mean) / 4;
  EXPECT_NEAR(mean, 0.0, 1e-15);
  EXPECT_NEAR(var, 1.0, 1e-12);
}

TEST(Optim, ClipGradNorm) {
  std::vector<double> g{3, 4};
  EXPECT_DOUBLE_EQ(clip_grad_norm(g, 0.5), 5.0);
  EXPECT_NEAR(std::hypot(g[0], g[1]), 0.5, 1e-15);
  EXPECT_NEAR(g[0] / g[1], 0.75, 1e-15);
  std::vector<double> small{0.1, 0.1};
  clip_grad_norm(small, 0.5);
  EXPECT_EQ(small, (std::vector<double>{0.1, 0.1}));
}

TEST(Optim, AdamFirstStepMovesByLearningRate) {
  Adam adam(3);
  std::vector<double> x{1.0, -2.0, 0.5};
  const std::vector<double> g{0.3, -5.0, 0.0};
  adam.step(x, g, 0.01);
  EXPECT_NEAR(x[0], 0.99, 1e-6);
  EXPECT_NEAR(x[1], -1.99, 1e-6);
  EXPECT_DOUBLE_EQ(x[2], 0.5);
  EXPECT_EQ(adam.steps(), 1u);
}

TEST(PpoUpdate, ReducesLossOnFixedBatch) {
  Policy p = test::toy_policy(22);
  Rng rng(23);
  Rollout rollout;
  for (int k = 0; k < 64; ++k) {
    Transition t;
    t.input = test::random_input(p.arch(), rng);
    const auto out = policy_forward(p, t.input);
    t.action = sample_action(out, rng);
    t.log_prob = std::log(out.probs[static_cast<std::size_t>(t.action)]);
    t.value = out.value;
    t.reward = t.action == 1 ? 1.0 : 0.0;  // reward turning left
    t.done = k % 8 == 7;
    rollout.steps.push_back(std::move(t));
  }
  PPOConfig cfg;
  cfg.learning_rate = 3e-3;
  Adam adam(p.params().size());
  double before = 0.0;
  for (const auto& t : rollout.steps) before += policy_forward(p, t.input).probs[1];
  Rng shuffle(24);
  for (int it = 0; it < 10; ++it) ppo_update(p, adam, rollout, cfg, shuffle);
  double after = 0.0;
  for (const auto& t : rollout.steps) after += policy_forward(p, t.input).probs[1];
  EXPECT_GT(after, before);
}

TEST(PpoUpdate, DeterministicForSeed) {
  const auto run = [] {
    Policy p = test::toy_policy(25);
    Rng rng(26);
    Rollout rollout;
    for (int k = 0; k < 40; ++k) {
      Transition t;
      t.input = test::random_input(p.arch(), rng);
      const auto out = policy_forward(p, t.input);
      t.action = sample_action(out, rng);
      t.log_prob = std::log(out.probs[static_cast<std::size_t>(t.action)]);
      t.value = out.value;
      t.reward = uniform(rng, -1, 1);
      rollout.steps.push_back(std::move(t));
    }
    Adam adam(p.params().size());
    Rng shuffle(27);
    ppo_update(p, adam, rollout, {}, shuffle);
    return p.params();
  };
  EXPECT_EQ(run(), run());
}

TEST(PpoUpdate, NonFiniteRewardRestoresParameters) {
  Policy p = test::toy_policy(28);
  Rng rng(29);
  Rollout rollout;
  for (int k = 0; k < 8; ++k) {
    Transition t;
    t.input = test::random_input(p.arch(), rng);
    const auto out = policy_forward(p, t.input);
    t.action = 1;
    t.log_prob = std::log(out.probs[1]);
    t.value = out.value;
    t.reward = k == 3 ? std::numeric_limits<double>::infinity() : 0.0;
    rollout.steps.push_back(std::move(t));
  }
  const auto params = p.params();
  Adam adam(p.params().size());
  Rng shuffle(30);
  EXPECT_THROW(ppo_update(p, adam, rollout, {}, shuffle), NumericError);
  EXPECT_EQ(p.params(), params);
  EXPECT_EQ(adam.steps(), 0u);
}
