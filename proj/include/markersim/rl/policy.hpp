// Compact actor-critic for the exploration agent.
//
//   depth (H x W, normalized) --avg-pool--> pool_grid^2 --dense+tanh--> embed
//   [embed, 5 scalar features] --dense+tanh--> hidden1 --dense+tanh--> hidden2
//   hidden2 --> 3 action logits,  hidden2 --> 1 value
//
// Parameters live in one flat vector so checkpoints, optimizers and
// finite-difference checks can treat them uniformly.
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "markersim/rng.hpp"

namespace markersim::rl {

inline constexpr int kNumActions = 3;
inline constexpr int kScalarFeatures = 5;

enum class RLAction { Forward = 0, TurnLeft = 1, TurnRight = 2 };

std::string_view to_string(RLAction a);

/// Agent observation. Depth values are ranges divided by max_range.
struct RLObservation {
  int depth_width = 0;
  int depth_height = 0;
  std::vector<double> depth;
  std::array<double, 2> rel_pos{0.0, 0.0};  // (dx, dy) from start over search radius
  double boundary_frac = 1.0;               // remaining distance to boundary over radius
  std::array<double, 2> heading{0.0, 1.0};  // (sin yaw, cos yaw)
  bool forward_clear = true;                // depth shows no obstacle in the next forward sweep
};

struct PolicyArch {
  int depth_width = 64;
  int depth_height = 64;
  int pool_grid = 8;
  int embed = 64;
  int hidden1 = 64;
  int hidden2 = 64;
  bool mask_unsafe_forward = true;

  int pooled_size() const { return pool_grid * pool_grid; }
  std::size_t param_count() const;
  void validate() const;
  bool operator==(const PolicyArch&) const = default;
};

/// Network input after the fixed (parameter-free) pooling stage.
struct PolicyInput {
  std::vector<double> pooled;
  std::array<double, kScalarFeatures> scalars{};
  bool forward_allowed = true;
};

PolicyInput encode(const RLObservation& obs, const PolicyArch& arch);

struct PolicyOutput {
  std::array<double, kNumActions> logits{};
  std::array<double, kNumActions> probs{};
  double value = 0.0;
};

class Policy {
 public:
  Policy() = default;
  explicit Policy(PolicyArch arch);  // zero parameters

  /// Scaled-uniform init; the action head starts near zero (near-uniform policy).
  static Policy initialized(const PolicyArch& arch, std::uint64_t seed);

  const PolicyArch& arch() const { return arch_; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  /// Offsets of each parameter block in the flat vector.
  struct Layout {
    std::size_t w_embed, b_embed, w1, b1, w2, b2, w_pi, b_pi, w_v, b_v, total;
  };
  Layout layout() const;

  /// Zeroes the action-logit layer (weights and bias).
  void zero_action_head();

 private:
  PolicyArch arch_;
  std::vector<double> params_;
};

/// Throws NumericError on non-finite activations. Masked actions get probability 0.
PolicyOutput policy_forward(const Policy& policy, const PolicyInput& input);
PolicyOutput policy_forward(const Policy& policy, const RLObservation& obs);

/// Highest-probability allowed action; ties go to the lowest index.
int argmax_action(const PolicyOutput& out);
int sample_action(const PolicyOutput& out, Rng& rng);

/// Intermediate activations kept for the backward pass.
struct ForwardCache {
  std::vector<double> embed;
  std::vector<double> h1;
  std::vector<double> h2;
  PolicyOutput out;
};

PolicyOutput policy_forward_cached(const Policy& policy, const PolicyInput& input,
                                   ForwardCache& cache);

/// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(logits) and
/// d(loss)/d(value) for one sample.
void policy_backward(const Policy& policy, const PolicyInput& input, const ForwardCache& cache,
                     const std::array<double, kNumActions>& d_logits, double d_value,
                     std::span<double> grad);

}  // namespace markersim::rl
