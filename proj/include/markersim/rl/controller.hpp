// Wraps a trained policy as an episode controller.
#pragma once

#include <memory>
#include <optional>

#include "markersim/agent.hpp"
#include "markersim/rl/env.hpp"
#include "markersim/rl/policy.hpp"

namespace markersim::rl {

/// Emits only Forward / TurnLeft90 / TurnRight90. Keeps its own coverage grid
/// and stops with NonProgressive after env.non_progress_window steps without
/// newly covered cells.
class RLController : public Controller {
 public:
  RLController(Policy policy, bool deterministic, EnvConfig env = {}, std::uint64_t seed = 0);

  Decision next_action(const SensorView& sensors, const DroneState& state) override;

 private:
  Policy policy_;
  bool deterministic_;
  EnvConfig env_;
  Rng rng_;
  std::optional<CoverageGrid> grid_;
  int idle_steps_ = 0;
};

std::unique_ptr<Controller> rl_controller(const Policy& policy, bool deterministic = true,
                                          const EnvConfig& env = {}, std::uint64_t seed = 0);

}  // namespace markersim::rl
