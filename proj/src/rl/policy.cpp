#include "markersim/rl/policy.hpp"

#include <algorithm>
#include <cmath>

#include "markersim/errors.hpp"

namespace markersim::rl {

namespace {

// out[i] = b[i] + sum_j w[i * n_in + j] * x[j]
void dense(const double* w, const double* b, const double* x, int n_in, int n_out, double* out) {
  for (int i = 0; i < n_out; ++i) {
    const double* row = w + static_cast<std::ptrdiff_t>(i) * n_in;
    double acc = b[i];
    for (int j = 0; j < n_in; ++j) acc += row[j] * x[j];
    out[i] = acc;
  }
}

// Accumulates weight/bias grads for out = W x + b and adds W^T dout into dx (if given).
void dense_backward(const double* w, const double* x, const double* dout, int n_in, int n_out,
                    double* dw, double* db, double* dx) {
  for (int i = 0; i < n_out; ++i) {
    const double g = dout[i];
    if (g == 0.0) continue;
    const auto off = static_cast<std::ptrdiff_t>(i) * n_in;
    db[i] += g;
    for (int j = 0; j < n_in; ++j) dw[off + j] += g * x[j];
    if (dx != nullptr) {
      for (int j = 0; j < n_in; ++j) dx[j] += g * w[off + j];
    }
  }
}

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

std::string_view to_string(RLAction a) {
  switch (a) {
    case RLAction::Forward: return "Forward";
    case RLAction::TurnLeft: return "TurnLeft";
    case RLAction::TurnRight: return "TurnRight";
  }
  return "?";
}

std::size_t PolicyArch::param_count() const {
  const auto p = static_cast<std::size_t>(pooled_size());
  const auto e = static_cast<std::size_t>(embed);
  const auto h1 = static_cast<std::size_t>(hidden1);
  const auto h2 = static_cast<std::size_t>(hidden2);
  return e * p + e + h1 * (e + kScalarFeatures) + h1 + h2 * h1 + h2 + kNumActions * h2 +
         kNumActions + h2 + 1;
}

void PolicyArch::validate() const {
  if (depth_width <= 0 || depth_height <= 0 || pool_grid <= 0 || embed <= 0 || hidden1 <= 0 ||
      hidden2 <= 0) {
    throw ConfigError("policy arch: all sizes must be positive");
  }
  if (pool_grid > depth_width || pool_grid > depth_height) {
    throw ConfigError("policy arch: pool_grid exceeds depth resolution");
  }
  if (param_count() >= 100000) throw ConfigError("policy arch: parameter count must stay below 1e5");
}

PolicyInput encode(const RLObservation& obs, const PolicyArch& arch) {
  if (obs.depth_width != arch.depth_width || obs.depth_height != arch.depth_height ||
      obs.depth.size() != static_cast<std::size_t>(obs.depth_width) * obs.depth_height) {
    throw ContractViolation("encode: depth size does not match the policy architecture");
  }
  PolicyInput in;
  const int g = arch.pool_grid;
  in.pooled.assign(static_cast<std::size_t>(g) * g, 0.0);
  for (int gy = 0; gy < g; ++gy) {
    const int v0 = gy * obs.depth_height / g;
    const int v1 = (gy + 1) * obs.depth_height / g;
    for (int gx = 0; gx < g; ++gx) {
      const int u0 = gx * obs.depth_width / g;
      const int u1 = (gx + 1) * obs.depth_width / g;
      double sum = 0.0;
      for (int v = v0; v < v1; ++v) {
        for (int u = u0; u < u1; ++u) sum += obs.depth[static_cast<std::size_t>(v) * obs.depth_width + u];
      }
      // Centered to [-1, 1].
      in.pooled[static_cast<std::size_t>(gy) * g + gx] = 2.0 * sum / ((v1 - v0) * (u1 - u0)) - 1.0;
    }
  }
  in.scalars = {obs.rel_pos[0], obs.rel_pos[1], obs.boundary_frac, obs.heading[0], obs.heading[1]};
  in.forward_allowed = !arch.mask_unsafe_forward || obs.forward_clear;
  return in;
}

Policy::Policy(PolicyArch arch) : arch_(arch) {
  arch_.validate();
  params_.assign(arch_.param_count(), 0.0);
}

Policy::Layout Policy::layout() const {
  const auto p = static_cast<std::size_t>(arch_.pooled_size());
  const auto e = static_cast<std::size_t>(arch_.embed);
  const auto h1 = static_cast<std::size_t>(arch_.hidden1);
  const auto h2 = static_cast<std::size_t>(arch_.hidden2);
  Layout l{};
  std::size_t off = 0;
  auto take = [&](std::size_t n) {
    const std::size_t at = off;
    off += n;
    return at;
  };
  l.w_embed = take(e * p);
  l.b_embed = take(e);
  l.w1 = take(h1 * (e + kScalarFeatures));
  l.b1 = take(h1);
  l.w2 = take(h2 * h1);
  l.b2 = take(h2);
  l.w_pi = take(kNumActions * h2);
  l.b_pi = take(kNumActions);
  l.w_v = take(h2);
  l.b_v = take(1);
  l.total = off;
  return l;
}

Policy Policy::initialized(const PolicyArch& arch, std::uint64_t seed) {
  Policy p(arch);
  Rng rng(derive_seed(seed, "policy-init"));
  const Layout l = p.layout();
  auto fill = [&](std::size_t at, int fan_in, int fan_out, double gain) {
    const double limit = gain * std::sqrt(6.0 / (fan_in + fan_out));
    for (std::size_t i = 0; i < static_cast<std::size_t>(fan_in) * fan_out; ++i) {
      p.params_[at + i] = uniform(rng, -limit, limit);
    }
  };
  fill(l.w_embed, arch.pooled_size(), arch.embed, 1.0);
  fill(l.w1, arch.embed + kScalarFeatures, arch.hidden1, 1.0);
  fill(l.w2, arch.hidden1, arch.hidden2, 1.0);
  fill(l.w_pi, arch.hidden2, kNumActions, 0.01);
  fill(l.w_v, arch.hidden2, 1, 1.0);
  return p;
}

void Policy::zero_action_head() {
  const Layout l = layout();
  std::fill(params_.begin() + static_cast<std::ptrdiff_t>(l.w_pi),
            params_.begin() + static_cast<std::ptrdiff_t>(l.w_v), 0.0);
}

PolicyOutput policy_forward_cached(const Policy& policy, const PolicyInput& input,
                                   ForwardCache& cache) {
  const PolicyArch& a = policy.arch();
  if (input.pooled.size() != static_cast<std::size_t>(a.pooled_size())) {
    throw ContractViolation("policy_forward: input size does not match the architecture");
  }
  const auto& w = policy.params();
  const auto l = policy.layout();
  if (w.size() != l.total) throw ContractViolation("policy_forward: parameter vector has wrong size");

  cache.embed.resize(static_cast<std::size_t>(a.embed));
  dense(&w[l.w_embed], &w[l.b_embed], input.pooled.data(), a.pooled_size(), a.embed,
        cache.embed.data());
  for (auto& x : cache.embed) x = std::tanh(x);

  std::vector<double> joint(cache.embed);
  joint.insert(joint.end(), input.scalars.begin(), input.scalars.end());
  cache.h1.resize(static_cast<std::size_t>(a.hidden1));
  dense(&w[l.w1], &w[l.b1], joint.data(), a.embed + kScalarFeatures, a.hidden1, cache.h1.data());
  for (auto& x : cache.h1) x = std::tanh(x);

  cache.h2.resize(static_cast<std::size_t>(a.hidden2));
  dense(&w[l.w2], &w[l.b2], cache.h1.data(), a.hidden1, a.hidden2, cache.h2.data());
  for (auto& x : cache.h2) x = std::tanh(x);

  PolicyOutput& out = cache.out;
  dense(&w[l.w_pi], &w[l.b_pi], cache.h2.data(), a.hidden2, kNumActions, out.logits.data());
  dense(&w[l.w_v], &w[l.b_v], cache.h2.data(), a.hidden2, 1, &out.value);

  if (!all_finite(cache.h2) || !std::isfinite(out.value) ||
      !std::all_of(out.logits.begin(), out.logits.end(), [](double x) { return std::isfinite(x); })) {
    throw NumericError("policy_forward: non-finite activation");
  }

  // Softmax over the allowed actions.
  const int first = input.forward_allowed ? 0 : 1;
  double mx = out.logits[static_cast<std::size_t>(first)];
  for (int i = first; i < kNumActions; ++i) mx = std::max(mx, out.logits[static_cast<std::size_t>(i)]);
  double z = 0.0;
  out.probs.fill(0.0);
  for (int i = first; i < kNumActions; ++i) {
    out.probs[static_cast<std::size_t>(i)] = std::exp(out.logits[static_cast<std::size_t>(i)] - mx);
    z += out.probs[static_cast<std::size_t>(i)];
  }
  for (auto& p : out.probs) p /= z;
  return out;
}

PolicyOutput policy_forward(const Policy& policy, const PolicyInput& input) {
  ForwardCache cache;
  return policy_forward_cached(policy, input, cache);
}

PolicyOutput policy_forward(const Policy& policy, const RLObservation& obs) {
  return policy_forward(policy, encode(obs, policy.arch()));
}

int argmax_action(const PolicyOutput& out) {
  int best = 0;
  for (int i = 1; i < kNumActions; ++i) {
    if (out.probs[static_cast<std::size_t>(i)] > out.probs[static_cast<std::size_t>(best)]) best = i;
  }
  return best;
}

int sample_action(const PolicyOutput& out, Rng& rng) {
  const double u = uniform(rng, 0.0, 1.0);
  double acc = 0.0;
  int last_allowed = 0;
  for (int i = 0; i < kNumActions; ++i) {
    const double p = out.probs[static_cast<std::size_t>(i)];
    if (p <= 0.0) continue;
    last_allowed = i;
    acc += p;
    if (u < acc) return i;
  }
  return last_allowed;
}

void policy_backward(const Policy& policy, const PolicyInput& input, const ForwardCache& cache,
                     const std::array<double, kNumActions>& d_logits, double d_value,
                     std::span<double> grad) {
  const PolicyArch& a = policy.arch();
  const auto& w = policy.params();
  const auto l = policy.layout();
  if (grad.size() != l.total) throw ContractViolation("policy_backward: gradient has wrong size");
  double* g = grad.data();

  std::vector<double> dh2(static_cast<std::size_t>(a.hidden2), 0.0);
  dense_backward(&w[l.w_pi], cache.h2.data(), d_logits.data(), a.hidden2, kNumActions, g + l.w_pi,
                 g + l.b_pi, dh2.data());
  dense_backward(&w[l.w_v], cache.h2.data(), &d_value, a.hidden2, 1, g + l.w_v, g + l.b_v,
                 dh2.data());
  for (std::size_t i = 0; i < dh2.size(); ++i) dh2[i] *= 1.0 - cache.h2[i] * cache.h2[i];

  std::vector<double> dh1(static_cast<std::size_t>(a.hidden1), 0.0);
  dense_backward(&w[l.w2], cache.h1.data(), dh2.data(), a.hidden1, a.hidden2, g + l.w2, g + l.b2,
                 dh1.data());
  for (std::size_t i = 0; i < dh1.size(); ++i) dh1[i] *= 1.0 - cache.h1[i] * cache.h1[i];

  std::vector<double> joint(cache.embed);
  joint.insert(joint.end(), input.scalars.begin(), input.scalars.end());
  std::vector<double> djoint(joint.size(), 0.0);
  dense_backward(&w[l.w1], joint.data(), dh1.data(), a.embed + kScalarFeatures, a.hidden1, g + l.w1,
                 g + l.b1, djoint.data());

  std::vector<double> de(static_cast<std::size_t>(a.embed));
  for (std::size_t i = 0; i < de.size(); ++i) de[i] = djoint[i] * (1.0 - cache.embed[i] * cache.embed[i]);
  dense_backward(&w[l.w_embed], input.pooled.data(), de.data(), a.pooled_size(), a.embed,
                 g + l.w_embed, g + l.b_embed, nullptr);
}

}  // namespace markersim::rl
