#include <gtest/gtest.h>

#include <filesystem>
#include <variant>

#include "markersim/errors.hpp"
#include "markersim/rl/controller.hpp"
#include "markersim/rl/train.hpp"
#include "markersim/scenario.hpp"

using namespace markersim;
using namespace markersim::rl;

namespace {

TrainConfig small_config() {
  TrainConfig c;
  c.total_updates = 3;
  c.horizon = 256;
  c.seed = 5;
  return c;
}

}  // namespace

TEST(Train, ZeroUpdatesReturnsInitialParameters) {
  TrainConfig c = small_config();
  c.total_updates = 0;
  const TrainResult r = train(c);
  EXPECT_EQ(r.policy.params(), Policy::initialized(c.arch, derive_seed(c.seed, "init")).params());
  EXPECT_TRUE(r.log.empty());
  EXPECT_FALSE(r.diverged);
}

TEST(Train, SameSeedSameLogAndParameters) {
  const TrainResult a = train(small_config());
  const TrainResult b = train(small_config());
  EXPECT_EQ(training_log_csv(a.log), training_log_csv(b.log));
  EXPECT_EQ(a.policy.params(), b.policy.params());
  ASSERT_EQ(a.log.size(), 3u);
  EXPECT_NE(a.policy.params(), Policy::initialized(small_config().arch, derive_seed(5, "init")).params());
  TrainConfig other = small_config();
  other.seed = 6;
  EXPECT_NE(training_log_csv(train(other).log), training_log_csv(a.log));
}

TEST(Train, AdvancesStageOnThreshold) {
  TrainConfig c = small_config();
  c.curriculum[0].advance_threshold = 0.0;
  c.curriculum[0].episodes_per_eval = 1;
  const TrainResult r = train(c);
  EXPECT_GE(r.final_stage, 1);
  EXPECT_EQ(r.log.front().stage, 0);
}

TEST(Train, DivergenceKeepsLastGoodParameters) {
  TrainConfig c = small_config();
  c.ppo.learning_rate = 1e300;
  c.ppo.max_grad_norm = 1e300;
  const TrainResult r = train(c);
  EXPECT_TRUE(r.diverged);
  EXPECT_FALSE(r.message.empty());
  for (const double w : r.policy.params()) ASSERT_TRUE(std::isfinite(w));
}

TEST(Train, LogCsvHeader) {
  const std::string csv = training_log_csv({TrainLogRow{}});
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "update,stage,episodes,mean_return,covered_fraction,policy_loss,value_loss,entropy,approx_kl,"
            "clip_fraction");
}

TEST(Train, ConfigParsingAndDigest) {
  const TrainConfig c = parse_train_config(
      R"({"total_updates": 12, "horizon": 64, "seed": 3, "ppo": {"clip": 0.1},
          "reward": {"w_rot": 0.2}, "curriculum": [{"obstacles": "sparse", "search_radius": 12}]})");
  EXPECT_EQ(c.total_updates, 12);
  EXPECT_EQ(c.horizon, 64);
  EXPECT_EQ(c.seed, 3u);
  EXPECT_DOUBLE_EQ(c.ppo.clip, 0.1);
  EXPECT_DOUBLE_EQ(c.env.reward.w_rot, 0.2);
  ASSERT_EQ(c.curriculum.size(), 1u);
  EXPECT_EQ(c.curriculum[0].obstacles, ObstacleMode::Sparse);
  EXPECT_NE(c.digest(), TrainConfig{}.digest());
  EXPECT_EQ(TrainConfig{}.digest(), TrainConfig{}.digest());
  EXPECT_THROW(parse_train_config("[1]"), ConfigError);
  EXPECT_THROW(parse_train_config(R"({"horizon": "long"})"), ConfigError);
}

TEST(Checkpoint, RoundTripIsExact) {
  const Policy p = Policy::initialized({}, 8);
  const std::string text = serialize_checkpoint(p, "abc123");
  const Checkpoint c = parse_checkpoint(text);
  EXPECT_EQ(c.policy.arch(), p.arch());
  EXPECT_EQ(c.policy.params(), p.params());
  EXPECT_EQ(c.config_digest, "abc123");
  EXPECT_EQ(serialize_checkpoint(c.policy, c.config_digest), text);
}

TEST(Checkpoint, RejectsWrongSchemaOrLength) {
  EXPECT_THROW(parse_checkpoint(R"({"schema": "other/1"})"), DataError);
  std::string text = serialize_checkpoint(Policy::initialized({}, 8), "d");
  text.replace(text.find("\"params\""), 8, "\"paramz\"");
  EXPECT_THROW(parse_checkpoint(text), DataError);
}

TEST(Evaluate, DeterministicPerSeed) {
  const Policy p = Policy::initialized({}, 1);
  const auto st = default_curriculum()[0];
  for (const auto mode : {EvalMode::Greedy, EvalMode::Sampled, EvalMode::UniformRandom, EvalMode::MaskedRandom}) {
    const auto a = evaluate_coverage(p, st, {}, 3, 17, mode);
    const auto b = evaluate_coverage(p, st, {}, 3, 17, mode);
    EXPECT_EQ(a.mean_covered_fraction, b.mean_covered_fraction);
    EXPECT_GT(a.mean_covered_fraction, 0.0);
    EXPECT_LE(a.mean_covered_fraction, 1.0);
  }
}

TEST(RLController, EmitsOnlyPlanarActionsAndIsDeterministic) {
  const Scene scene = generate_scene(MapProfile::post_soviet(), 4);
  const Pose6DoF start = sample_drone_start(scene, 30.0, 4);
  const Scenario sc{"rl", scene, "", start, 0.5, {}, 4, 30.0};
  const Policy p = Policy::initialized({}, 2);
  const auto run = [&] {
    auto c = rl_controller(p, true);
    Rng rng(3);
    return run_episode(sc, *c, {}, {}, rng, "E2ERL");
  };
  const EpisodeRecord a = run();
  const EpisodeRecord b = run();
  EXPECT_EQ(a.trajectory, b.trajectory);
  EXPECT_EQ(a.actions, b.actions);
  for (const auto& act : a.actions) {
    EXPECT_TRUE(std::holds_alternative<Forward>(act) || std::holds_alternative<TurnLeft90>(act) ||
                std::holds_alternative<TurnRight90>(act))
        << describe(act);
  }
  for (const auto& pt : a.trajectory) EXPECT_DOUBLE_EQ(pt.z, start.position.z);
  EXPECT_NE(a.termination, Termination::Collision);
  EXPECT_NE(a.termination, Termination::Boundary);
}

TEST(RLController, StopsWhenCoverageStalls) {
  // a policy that always turns never uncovers anything new
  Policy p = Policy::initialized({}, 2);
  p.zero_action_head();
  p.params()[p.layout().b_pi + 1] = 5.0;
  const Scene scene({}, {25, 25, 0}, {-60, -60, 60, 60}, MapProfileId::ModernCity);
  const Scenario sc{"spin", scene, "", {{0, 0, 20}, 0, 0, 0}, 0.5, {}, 1, 30.0};
  auto c = rl_controller(p, true);
  DetectionModelParams quiet;
  quiet.fp_base = 0.0;
  Rng rng(1);
  const EpisodeRecord r = run_episode(sc, *c, quiet, {}, rng);
  EXPECT_EQ(r.termination, Termination::NonProgressive);
  EXPECT_EQ(r.actions.size(), 60u);
}
