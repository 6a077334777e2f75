#include "markersim/rl/controller.hpp"

namespace markersim::rl {

RLController::RLController(Policy policy, bool deterministic, EnvConfig env, std::uint64_t seed)
    : policy_(std::move(policy)), deterministic_(deterministic), env_(std::move(env)),
      rng_(derive_seed(seed, "rl-controller")) {
  env_.validate();
  env_.camera.width = policy_.arch().depth_width;
  env_.camera.height = policy_.arch().depth_height;
}

Decision RLController::next_action(const SensorView& sensors, const DroneState& state) {
  const Disc& search = sensors.search_disc();
  const Footprint fp = sensors.footprint(env_.detection);
  if (!grid_) {
    grid_.emplace(search.center, search.radius, env_.cell_size);
    grid_->stamp(fp);
  } else {
    idle_steps_ = grid_->stamp(fp) > 0 ? 0 : idle_steps_ + 1;
  }
  if (idle_steps_ >= env_.non_progress_window) return Decision::halt(Termination::NonProgressive);

  const DepthImage depth = sensors.forward_depth(env_.camera);
  const RLObservation obs = make_observation(depth, state.pose, search, env_);
  const PolicyOutput out = policy_forward(policy_, obs);
  const int a = deterministic_ ? argmax_action(out) : sample_action(out, rng_);
  return Decision::act(to_agent_action(static_cast<RLAction>(a), env_.forward_step));
}

std::unique_ptr<Controller> rl_controller(const Policy& policy, bool deterministic,
                                          const EnvConfig& env, std::uint64_t seed) {
  return std::make_unique<RLController>(policy, deterministic, env, seed);
}

}  // namespace markersim::rl
