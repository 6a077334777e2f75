#include "markersim/rl/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <sstream>

#include "markersim/errors.hpp"

namespace markersim::rl {

GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const bool> dones, double gamma, double lambda,
                      double bootstrap_value) {
  if (rewards.size() != values.size() || rewards.size() != dones.size()) {
    throw ContractViolation("compute_gae: sequences must have equal length");
  }
  const std::size_t n = rewards.size();
  GaeResult out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double next_value = bootstrap_value;
  double next_adv = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const double live = dones[k] ? 0.0 : 1.0;
    const double delta = rewards[k] + gamma * next_value * live - values[k];
    next_adv = delta + gamma * lambda * live * next_adv;
    out.advantages[k] = next_adv;
    out.returns[k] = next_adv + values[k];
    next_value = values[k];
  }
  return out;
}

void PPOConfig::validate() const {
  if (!(clip > 0.0) || epochs < 0 || minibatches < 1 || !(learning_rate > 0.0) || value_coef < 0.0 ||
      entropy_coef < 0.0 || !(max_grad_norm > 0.0) || gamma < 0.0 || gamma > 1.0 || lambda < 0.0 ||
      lambda > 1.0 || !(advantage_std_floor > 0.0)) {
    throw ConfigError("ppo config: invalid hyperparameter");
  }
}

LossBreakdown ppo_loss(const Policy& policy, std::span<const PPOSample> batch,
                       const PPOConfig& config, std::span<double> grad) {
  if (batch.empty()) throw ContractViolation("ppo_loss: empty batch");
  const bool want_grad = !grad.empty();
  if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  LossBreakdown loss;
  ForwardCache cache;
  int clipped = 0;
  for (const PPOSample& s : batch) {
    const PolicyOutput out = policy_forward_cached(policy, *s.input, cache);
    const auto a = static_cast<std::size_t>(s.action);
    if (!(out.probs[a] > 0.0)) throw NumericError("ppo_loss: logged action has zero probability");
    const double log_p = std::log(out.probs[a]);
    const double ratio = std::exp(log_p - s.old_log_prob);
    const double clamped = std::clamp(ratio, 1.0 - config.clip, 1.0 + config.clip);
    const double unclipped_obj = ratio * s.advantage;
    const double clipped_obj = clamped * s.advantage;
    const bool clip_active = clipped_obj < unclipped_obj;
    if (std::abs(ratio - 1.0) > config.clip) ++clipped;

    double entropy = 0.0;
    for (const double p : out.probs) {
      if (p > 0.0) entropy -= p * std::log(p);
    }
    const double err = out.value - s.target_return;
    loss.policy += -std::min(unclipped_obj, clipped_obj) * inv_n;
    loss.value += err * err * inv_n;
    loss.entropy += entropy * inv_n;
    loss.approx_kl += (s.old_log_prob - log_p) * inv_n;

    if (!want_grad) continue;
    std::array<double, kNumActions> d_logits{};
    for (std::size_t j = 0; j < static_cast<std::size_t>(kNumActions); ++j) {
      const double p = out.probs[j];
      if (p <= 0.0) continue;  // masked action: logit does not enter the distribution
      double d = 0.0;
      if (!clip_active) d += -s.advantage * ratio * ((j == a ? 1.0 : 0.0) - p);
      d += config.entropy_coef * p * (std::log(p) + entropy);
      d_logits[j] = d * inv_n;
    }
    const double d_value = 2.0 * config.value_coef * err * inv_n;
    policy_backward(policy, *s.input, cache, d_logits, d_value, grad);
  }
  loss.clip_fraction = clipped * inv_n;
  loss.total = loss.policy + config.value_coef * loss.value - config.entropy_coef * loss.entropy;
  return loss;
}

std::vector<double> normalize_advantages(std::span<const double> adv, double std_floor) {
  std::vector<double> out(adv.begin(), adv.end());
  if (out.empty()) return out;
  const double n = static_cast<double>(out.size());
  const double mean = std::accumulate(out.begin(), out.end(), 0.0) / n;
  double var = 0.0;
  for (const double a : out) var += (a - mean) * (a - mean);
  const double sd = std::max(std::sqrt(var / n), std_floor);
  for (double& a : out) a = (a - mean) / sd;
  return out;
}

Adam::Adam(std::size_t n, double beta1, double beta2, double eps)
    : m_(n, 0.0), v_(n, 0.0), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::step(std::vector<double>& params, std::span<const double> grad, double lr) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    throw ContractViolation("adam: size mismatch");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

double clip_grad_norm(std::span<double> grad, double max_norm) {
  double sq = 0.0;
  for (const double g : grad) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (double& g : grad) g *= s;
  }
  return norm;
}

UpdateStats ppo_update(Policy& policy, Adam& optimizer, const Rollout& rollout,
                       const PPOConfig& config, Rng& rng) {
  config.validate();
  const std::size_t n = rollout.steps.size();
  if (n == 0) throw ContractViolation("ppo_update: empty rollout");

  std::vector<double> rewards(n), values(n);
  std::unique_ptr<bool[]> dones(new bool[n]);
  for (std::size_t i = 0; i < n; ++i) {
    rewards[i] = rollout.steps[i].reward;
    values[i] = rollout.steps[i].value;
    dones[i] = rollout.steps[i].done;
  }
  const GaeResult gae = compute_gae(rewards, values, std::span<const bool>(dones.get(), n),
                                    config.gamma, config.lambda, rollout.bootstrap_value);
  const std::vector<double> adv = config.normalize_advantages
                                      ? normalize_advantages(gae.advantages, config.advantage_std_floor)
                                      : gae.advantages;

  std::vector<PPOSample> samples(n);
  for (std::size_t i = 0; i < n; ++i) {
    samples[i] = {&rollout.steps[i].input, rollout.steps[i].action, rollout.steps[i].log_prob, adv[i],
                  gae.returns[i]};
  }

  const std::vector<double> backup_params = policy.params();
  const Adam backup_opt = optimizer;
  UpdateStats stats;
  std::vector<double> grad(policy.params().size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const std::size_t mb = std::max<std::size_t>(1, n / static_cast<std::size_t>(config.minibatches));
  std::vector<PPOSample> batch;
  try {
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      LossBreakdown sum;
      int count = 0;
      for (std::size_t start = 0; start < n; start += mb) {
        const std::size_t end = (n - start < 2 * mb) ? n : start + mb;  // fold a short tail in
        batch.clear();
        for (std::size_t k = start; k < end; ++k) batch.push_back(samples[order[k]]);
        const LossBreakdown l = ppo_loss(policy, batch, config, grad);
        const double gn = clip_grad_norm(grad, config.max_grad_norm);
        if (!std::isfinite(l.total) || !std::isfinite(gn)) {
          std::ostringstream msg;
          msg << "ppo_update: non-finite loss (total " << l.total << ", policy " << l.policy
              << ", value " << l.value << ", entropy " << l.entropy << ", grad norm " << gn << ")";
          throw NumericError(msg.str());
        }
        optimizer.step(policy.params(), grad, config.learning_rate);
        stats.grad_norm = gn;
        ++stats.minibatch_steps;
        sum.total += l.total;
        sum.policy += l.policy;
        sum.value += l.value;
        sum.entropy += l.entropy;
        sum.clip_fraction += l.clip_fraction;
        sum.approx_kl += l.approx_kl;
        ++count;
        if (end == n) break;
      }
      const double inv = 1.0 / count;
      stats.last = {sum.total * inv, sum.policy * inv,        sum.value * inv,
                    sum.entropy * inv, sum.clip_fraction * inv, sum.approx_kl * inv};
    }
    if (!std::all_of(policy.params().begin(), policy.params().end(),
                     [](double x) { return std::isfinite(x); })) {
      throw NumericError("ppo_update: parameters became non-finite");
    }
  } catch (const NumericError&) {
    policy.params() = backup_params;
    optimizer = backup_opt;
    throw;
  }
  return stats;
}

}  // namespace markersim::rl
