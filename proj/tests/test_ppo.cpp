// Copyright 2026 The Harvest Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "harvest/ppo.hpp"

namespace harvest {
namespace {

constexpr double kPi = std::numbers::pi;

// Actor whose mean is a constant: zero weights, bias (rho, alpha) per agent.
Actor ConstantActor(int obs_dim, int agents, double rho_bias, double alpha_bias, double std_dev) {
  Actor a = {nn::Mlp({obs_dim, 8, 2 * agents}), nn::GaussianHead(2 * agents, std_dev)};
  for (int j = 0; j < agents; ++j) {
    a.mean_net.bias(1)[2 * j] = rho_bias;
    a.mean_net.bias(1)[2 * j + 1] = alpha_bias;
  }
  return a;
}

TEST(Squash, Examples) {
  const auto c = builtin_config_1();
  Eigen::VectorXd raw = Eigen::VectorXd::Zero(6);
  raw << 0.0, 0.0, 100.0, -kPi / 2, -100.0, 7 * kPi;
  const auto a = squash(raw, c);
  EXPECT_DOUBLE_EQ(a[0].speed, 0.5);
  EXPECT_DOUBLE_EQ(a[0].heading, 0.0);
  EXPECT_DOUBLE_EQ(a[1].speed, 1.0);
  EXPECT_NEAR(a[1].heading, 1.5 * kPi, 1e-15);
  EXPECT_DOUBLE_EQ(a[2].speed, 0.0);
  EXPECT_NEAR(a[2].heading, kPi, 1e-12);
  EXPECT_THROW(squash(Eigen::VectorXd::Zero(4), c), ContractViolation);
}

TEST(Squash, AlwaysAdmissible) {
  const auto c = builtin_config_1();
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0.0, 30.0);
  for (int trial = 0; trial < 2000; ++trial) {
    Eigen::VectorXd raw(6);
    for (int k = 0; k < 6; ++k) raw[k] = n(rng);
    for (const auto& p : squash(raw, c)) {
      EXPECT_TRUE(admissible(p, 1.0));
      EXPECT_GE(p.heading, 0.0);
      EXPECT_LT(p.heading, 2 * kPi);
    }
  }
}

// Data left after hovering at the start for the whole budget, computed from
// the rate formula directly (every sub-interval has the same rate).
double HoverDataLeft(const ScenarioConfig& c, double data_tol) {
  double left = 0;
  for (const auto& t : c.targets) {
    double rate = 0;
    for (const auto& a : c.agents) {
      const double d2 = (a.start - t.position).squaredNorm() + a.height * a.height;
      rate += t.bandwidth * std::log2(1 + t.gain / d2);
    }
    const double rem = std::max(0.0, t.initial_volume - rate * c.n_max * c.dt);
    if (rem > data_tol) left += rem;
  }
  return left;
}

TEST(Penalty, HoveringPolicyPaysLagrangianOracle) {
  const auto c = builtin_config_1();
  PpoConfig cfg;
  const ObservationScaler scaler(c);
  const Actor actor = ConstantActor(scaler.dim(), 3, -50.0, 0.0, 1e-9);
  const Critic critic{nn::Mlp({scaler.dim(), 1})};
  GoalSpec goal = GoalSpec::from(c);
  goal.position_tolerance = cfg.position_tolerance;
  Environment env(c, goal);
  std::mt19937_64 rng(1);
  const Trajectory t = collect_episode(env, actor, critic, cfg, rng);
  ASSERT_EQ(t.steps(), c.n_max);
  EXPECT_FALSE(t.success);
  double travel = 0;
  for (const auto& a : c.agents) travel = std::max(travel, (a.final - a.start).norm());
  EXPECT_NEAR(travel, std::sqrt(113.0), 1e-12);
  const double want = 2 * travel + 2 * HoverDataLeft(c, cfg.data_tolerance);
  EXPECT_NEAR(t.terminal_penalty, want, 1e-9);
  EXPECT_NEAR(t.records.back().reward, -1.0 - want, 1e-9);
  EXPECT_NEAR(t.undiscounted_return(), -c.n_max - want, 1e-9);
}

TEST(Penalty, SchemesFoldDifferently) {
  const auto c = builtin_config_1();
  const ObservationScaler scaler(c);
  const Actor actor = ConstantActor(scaler.dim(), 3, -50.0, 0.0, 1e-9);
  const Critic critic{nn::Mlp({scaler.dim(), 1})};
  for (auto scheme : {PenaltyScheme::kNone, PenaltyScheme::kLargeTerminal}) {
    PpoConfig cfg;
    cfg.scheme = scheme;
    Environment env(c, GoalSpec::from(c));
    std::mt19937_64 rng(1);
    const Trajectory t = collect_episode(env, actor, critic, cfg, rng);
    EXPECT_FALSE(t.success);
    const double want = scheme == PenaltyScheme::kNone ? -1.0 : -1.0 - cfg.large_penalty;
    EXPECT_EQ(t.records.back().reward, want) << to_string(scheme);
    for (int k = 0; k + 1 < t.steps(); ++k) EXPECT_EQ(t.records[k].reward, -1.0);
  }
}

TEST(Penalty, ParseScheme) {
  for (auto s : {PenaltyScheme::kLagrangian, PenaltyScheme::kLargeTerminal, PenaltyScheme::kNone})
    EXPECT_EQ(parse_scheme(to_string(s)), s);
  EXPECT_THROW(parse_scheme("huge"), std::invalid_argument);
}

Trajectory RandomTrajectory(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Trajectory t;
  for (int k = 0; k < n; ++k) {
    StepRecord r;
    r.reward = g(rng);
    r.value = g(rng);
    t.records.push_back(r);
  }
  return t;
}

// A_t = sum_l (gamma lambda)^l delta_{t+l}, evaluated term by term.
Eigen::VectorXd GaeOracle(const Trajectory& t, double gamma, double lambda, double scale) {
  const int n = t.steps();
  Eigen::VectorXd out(n);
  for (int s = 0; s < n; ++s) {
    double sum = 0;
    for (int u = s; u < n; ++u) {
      const double next = u + 1 < n ? t.records[u + 1].value : 0.0;
      const double delta = scale * t.records[u].reward + gamma * next - t.records[u].value;
      sum += std::pow(gamma * lambda, u - s) * delta;
    }
    out[s] = sum;
  }
  return out;
}

TEST(Gae, MatchesDirectSum) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> len(1, 40);
  for (int trial = 0; trial < 200; ++trial) {
    const Trajectory t = RandomTrajectory(len(rng), rng);
    const double scale = trial % 2 ? 0.05 : 1.0;
    const auto est = gae(t, 0.99, 0.95, scale);
    const auto want = GaeOracle(t, 0.99, 0.95, scale);
    EXPECT_LE((est.advantages - want).cwiseAbs().maxCoeff(), 1e-10);
    for (int k = 0; k < t.steps(); ++k) EXPECT_NEAR(est.targets[k], want[k] + t.records[k].value, 1e-10);
  }
}

TEST(Gae, SingleStepIsTdError) {
  Trajectory t;
  t.records.push_back({{}, {}, 0.0, -3.0, 0.4});
  EXPECT_DOUBLE_EQ(gae(t, 0.9, 0.5).advantages[0], -3.4);
}

TEST(Gae, LambdaOneIsMonteCarlo) {
  std::mt19937_64 rng(4);
  const Trajectory t = RandomTrajectory(25, rng);
  const auto est = gae(t, 0.97, 1.0);
  for (int s = 0; s < t.steps(); ++s) {
    double ret = 0;
    for (int u = t.steps() - 1; u >= s; --u) ret = t.records[u].reward + 0.97 * ret;
    EXPECT_NEAR(est.targets[s], ret, 1e-10);
  }
}

struct Fixture {
  Actor actor;
  Critic critic;
  PpoBatch batch;
  std::vector<int> idx;
};

// Random batch whose old log-probs sit near the current ones so ratios stay
// in a band around 1.
Fixture MakeFixture(std::uint64_t seed, double ratio_spread) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Fixture f;
  f.actor = make_actor(5, 4, {8, 8}, 0.6, rng);
  f.actor.mean_net.init(rng, 1.0);
  f.critic = make_critic(5, {8, 8}, rng);
  const int n = 12;
  f.batch.observations = Eigen::MatrixXd::NullaryExpr(5, n, [&] { return g(rng); });
  f.batch.raw_actions = Eigen::MatrixXd::NullaryExpr(4, n, [&] { return g(rng); });
  f.batch.old_log_probs.resize(n);
  for (int k = 0; k < n; ++k)
    f.batch.old_log_probs[k] =
        nn::gaussian_log_prob(f.actor.mean(f.batch.observations.col(k)), f.actor.head.log_std,
                              f.batch.raw_actions.col(k)) +
        ratio_spread * g(rng);
  f.batch.advantages = Eigen::VectorXd::NullaryExpr(n, [&] { return g(rng); });
  f.batch.targets = Eigen::VectorXd::NullaryExpr(n, [&] { return g(rng); });
  for (int k = 0; k < n; ++k) f.idx.push_back(k);
  return f;
}

double Loss(const Fixture& f, const PpoConfig& cfg) {
  return ppo_loss_and_grad(f.actor, f.critic, f.batch, f.idx, cfg).loss.total();
}

double RelErr(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double s = std::max(a.norm(), b.norm());
  return s == 0 ? 0 : (a - b).norm() / s;
}

TEST(PpoLoss, GradientMatchesFiniteDifferences) {
  PpoConfig cfg;
  cfg.clip_ratio = 50.0;  // no clipping: the loss is smooth everywhere
  Fixture f = MakeFixture(5, 0.3);
  const auto g = ppo_loss_and_grad(f.actor, f.critic, f.batch, f.idx, cfg);
  const double h = 1e-6;
  auto fd = [&](Eigen::VectorXd& params) {
    Eigen::VectorXd out(params.size());
    for (Eigen::Index p = 0; p < params.size(); ++p) {
      const double keep = params[p];
      params[p] = keep + h;
      const double up = Loss(f, cfg);
      params[p] = keep - h;
      const double down = Loss(f, cfg);
      params[p] = keep;
      out[p] = (up - down) / (2 * h);
    }
    return out;
  };
  EXPECT_LE(RelErr(g.mean_net, fd(f.actor.mean_net.params())), 1e-5);
  EXPECT_LE(RelErr(g.log_std, fd(f.actor.head.log_std)), 1e-5);
  EXPECT_LE(RelErr(g.critic, fd(f.critic.net.params())), 1e-5);
}

TEST(PpoLoss, ClippedSamplesCarryNoPolicyGradient) {
  PpoConfig cfg;
  cfg.entropy_coef = 0.0;
  Fixture f = MakeFixture(6, 0.0);
  // Old log-probs far below current: ratio >> 1 + clip. Positive advantages
  // then sit on the flat clipped branch.
  f.batch.old_log_probs.array() -= 5.0;
  f.batch.advantages.setConstant(1.0);
  const auto g = ppo_loss_and_grad(f.actor, f.critic, f.batch, f.idx, cfg);
  EXPECT_EQ(g.mean_net.norm(), 0.0);
  EXPECT_EQ(g.log_std.norm(), 0.0);
  EXPECT_DOUBLE_EQ(g.clip_fraction, 1.0);
  EXPECT_NEAR(g.loss.policy, -(1.0 + cfg.clip_ratio), 1e-12);
  // Negative advantages take the unclipped (smaller) branch and keep a gradient.
  f.batch.advantages.setConstant(-1.0);
  EXPECT_GT(ppo_loss_and_grad(f.actor, f.critic, f.batch, f.idx, cfg).mean_net.norm(), 0.0);
}

TEST(PpoLoss, RatioOneGivesMinusMeanAdvantage) {
  PpoConfig cfg;
  cfg.entropy_coef = 0.0;
  Fixture f = MakeFixture(7, 0.0);
  const auto g = ppo_loss_and_grad(f.actor, f.critic, f.batch, f.idx, cfg);
  EXPECT_NEAR(g.loss.policy, -f.batch.advantages.mean(), 1e-12);
  EXPECT_NEAR(g.approx_kl, 0.0, 1e-12);
  EXPECT_EQ(g.clip_fraction, 0.0);
}

TEST(PpoUpdate, LowersSurrogateOnFixedBatch) {
  PpoConfig cfg;
  cfg.minibatch_size = 12;
  cfg.epochs = 20;
  Fixture f = MakeFixture(8, 0.0);
  const double before = Loss(f, cfg);
  PpoOptimizers opt(cfg);
  std::mt19937_64 rng(1);
  ppo_update(f.batch, f.actor, f.critic, opt, cfg, rng);
  EXPECT_LT(Loss(f, cfg), before);
}

TEST(PpoUpdate, RegularizerHookSeesMinibatches) {
  PpoConfig cfg;
  cfg.minibatch_size = 4;
  cfg.epochs = 2;
  Fixture f = MakeFixture(9, 0.0);
  PpoOptimizers opt(cfg);
  std::mt19937_64 rng(1);
  int calls = 0;
  const auto stats = ppo_update(f.batch, f.actor, f.critic, opt, cfg, rng,
                                [&](const Eigen::MatrixXd& obs, Eigen::VectorXd&, Eigen::VectorXd&) {
                                  EXPECT_EQ(obs.cols(), 4);
                                  ++calls;
                                  return 0.25;
                                });
  EXPECT_EQ(calls, 6);
  EXPECT_EQ(stats.minibatches, 6);
  EXPECT_DOUBLE_EQ(stats.regularizer, 0.25);
}

PpoConfig SmallConfig() {
  PpoConfig cfg;
  cfg.rollout_steps = 128;
  cfg.epochs = 2;
  cfg.hidden = {16, 16};
  return cfg;
}

TEST(Trainer, SameSeedIsBitIdentical) {
  PpoTrainer a(builtin_config_1(), SmallConfig(), 11), b(builtin_config_1(), SmallConfig(), 11);
  for (int k = 0; k < 3; ++k) {
    a.iterate();
    b.iterate();
  }
  EXPECT_EQ(a.actor().mean_net.params(), b.actor().mean_net.params());
  EXPECT_EQ(a.actor().head.log_std, b.actor().head.log_std);
  EXPECT_EQ(a.curve().back().mean_steps, b.curve().back().mean_steps);
}

TEST(Trainer, CurveStaysInBounds) {
  const auto c = builtin_config_1();
  const auto r = train(c, [] {
    auto cfg = SmallConfig();
    cfg.learning_steps = 4;
    return cfg;
  }(), 2);
  ASSERT_EQ(r.curve.size(), 4u);
  for (const auto& p : r.curve) {
    EXPECT_GE(p.mean_steps, 1.0);
    EXPECT_LE(p.mean_steps, c.n_max);
    EXPECT_GE(p.success_rate, 0.0);
    EXPECT_LE(p.success_rate, 1.0);
    EXPECT_GE(p.std_steps, 0.0);
  }
}

TEST(Trainer, DeterministicEvaluationIsRepeatable) {
  const auto c = builtin_config_1();
  PpoTrainer t(c, SmallConfig(), 3);
  t.iterate();
  const auto a = evaluate_deterministic(t.actor(), c, t.goal());
  const auto b = evaluate_deterministic(t.actor(), c, t.goal());
  EXPECT_EQ(a.steps, b.steps);
  EXPECT_EQ(a.completion.time, b.completion.time);
  EXPECT_GE(a.completion.time, a.steps);
}

TEST(Checkpoint, ActorCriticRoundTrip) {
  std::mt19937_64 rng(1);
  const Actor a = make_actor(11, 6, {16}, 0.5, rng);
  const Critic c = make_critic(11, {16}, rng);
  nn::Checkpoint ckpt;
  store(ckpt, a, c);
  const auto path = (std::filesystem::temp_directory_path() / "harvest_ppo.ckpt").string();
  nn::write_checkpoint(path, ckpt);
  const auto back = nn::read_checkpoint(path);
  EXPECT_EQ(restore_actor(back).mean_net.params(), a.mean_net.params());
  EXPECT_EQ(restore_actor(back).head.log_std, a.head.log_std);
  EXPECT_EQ(restore_critic(back).net.params(), c.net.params());
  std::remove(path.c_str());
}

TEST(MixSeed, DistinctStreams) {
  EXPECT_NE(mix_seed(1, 0), mix_seed(1, 1));
  EXPECT_NE(mix_seed(1, 0), mix_seed(2, 0));
  EXPECT_EQ(mix_seed(5, 7, 9), mix_seed(5, 7, 9));
}

}  // namespace
}  // namespace harvest
