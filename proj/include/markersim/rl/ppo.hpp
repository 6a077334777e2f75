// Proximal policy optimization: generalized advantage estimation, the clipped
// surrogate loss with its analytic gradient, and an Adam-based update.
#pragma once

#include <span>
#include <vector>

#include "markersim/rl/policy.hpp"

namespace markersim::rl {

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

/// delta_t = r_t + gamma * V_{t+1} * (1 - done_t) - V_t, with V_T = bootstrap_value;
/// A_t = delta_t + gamma * lambda * (1 - done_t) * A_{t+1}; returns = A + V.
GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const bool> dones, double gamma = 0.99, double lambda = 0.95,
                      double bootstrap_value = 0.0);

struct PPOConfig {
  double clip = 0.2;
  int epochs = 4;
  int minibatches = 4;
  double learning_rate = 3e-4;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  double max_grad_norm = 0.5;
  double gamma = 0.99;
  double lambda = 0.95;
  bool normalize_advantages = true;
  double advantage_std_floor = 1e-8;

  void validate() const;
};

/// One logged decision.
struct Transition {
  PolicyInput input;
  int action = 0;
  double log_prob = 0.0;  // behavior policy
  double value = 0.0;
  double reward = 0.0;
  bool done = false;
};

struct Rollout {
  std::vector<Transition> steps;
  double bootstrap_value = 0.0;  // V(s_T) when the last transition is not terminal
};

/// Training sample after advantage estimation.
struct PPOSample {
  const PolicyInput* input = nullptr;
  int action = 0;
  double old_log_prob = 0.0;
  double advantage = 0.0;
  double target_return = 0.0;
};

struct LossBreakdown {
  double total = 0.0;
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
};

/// Mean over the batch of
///   -min(rho * A, clip(rho, 1 - eps, 1 + eps) * A) + value_coef * (V - R)^2 - entropy_coef * H.
/// When `grad` is nonempty the exact gradient is written to it (overwritten).
LossBreakdown ppo_loss(const Policy& policy, std::span<const PPOSample> batch,
                       const PPOConfig& config, std::span<double> grad = {});

/// Advantages centered and divided by max(std, floor).
std::vector<double> normalize_advantages(std::span<const double> advantages, double std_floor);

class Adam {
 public:
  Adam() = default;
  explicit Adam(std::size_t n, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  void step(std::vector<double>& params, std::span<const double> grad, double learning_rate);
  std::size_t steps() const { return t_; }

 private:
  std::vector<double> m_;
  std::vector<double> v_;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  std::size_t t_ = 0;
};

/// Scales `grad` in place so its L2 norm is at most max_norm; returns the pre-clip norm.
double clip_grad_norm(std::span<double> grad, double max_norm);

struct UpdateStats {
  LossBreakdown last;   // averaged over the final epoch's minibatches
  double grad_norm = 0.0;
  int minibatch_steps = 0;
};

/// Runs `epochs` passes of shuffled minibatch updates over the rollout. On a
/// non-finite loss or gradient the parameters and optimizer state are
/// restored and NumericError is thrown.
UpdateStats ppo_update(Policy& policy, Adam& optimizer, const Rollout& rollout,
                       const PPOConfig& config, Rng& rng);

}  // namespace markersim::rl
