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
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "harvest/env.hpp"

namespace harvest {
namespace {

constexpr double kPi = std::numbers::pi;

ScenarioConfig OneTarget(double volume = 100.0) {
  ScenarioConfig c;
  c.targets.push_back({{0, 0}, 1.0, 0.7, volume});
  c.agents.push_back({{1, 0}, {1, 0}, 0.5, 1.0});
  c.n_max = 10;
  return c;
}

JointAction RandomAction(const ScenarioConfig& c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  JointAction a;
  for (const auto& ag : c.agents) a.push_back({ag.max_speed * u(rng), 2 * kPi * u(rng) * (1 - 1e-12)});
  return a;
}

TEST(Move, Examples) {
  auto c = OneTarget();
  c.agents[0].max_speed = 2.0;
  auto p = move(c, {Vec2(0, 0)}, {{1.0, 0.0}});
  EXPECT_NEAR((p[0] - Vec2(1, 0)).norm(), 0, 1e-15);
  p = move(c, {Vec2(0, 0)}, {{0.0, 4.0}});
  EXPECT_EQ(p[0], Vec2(0, 0));
  p = move(c, {Vec2(1, 1)}, {{std::sqrt(2.0), kPi / 4}});
  EXPECT_NEAR((p[0] - Vec2(2, 2)).norm(), 0, 1e-15);
}

TEST(Move, RejectsInadmissible) {
  const auto c = OneTarget();
  EXPECT_THROW(move(c, {Vec2(0, 0)}, {{1.5, 0.0}}), ContractViolation);
  EXPECT_THROW(move(c, {Vec2(0, 0)}, {{-0.1, 0.0}}), ContractViolation);
  EXPECT_THROW(move(c, {Vec2(0, 0)}, {{0.5, 2 * kPi}}), ContractViolation);
  EXPECT_THROW(move(c, {Vec2(0, 0)}, {{0.5, 0}, {0.5, 0}}), ContractViolation);
}

TEST(Accumulate, StationaryAgentCollectsRateTimesDt) {
  auto c = OneTarget();
  c.dt = 0.5;
  const State s = initial_state(c);
  const double r = transmission_rate(Vec2(1, 0), 0.5, c.targets[0]);
  EXPECT_NEAR(accumulate(c, s, JointAction{{0.0, 0.0}})[0], r * 0.5, 1e-14);
}

TEST(Accumulate, ClampsAtVolume) {
  auto c = OneTarget(0.01);
  State s = initial_state(c);
  EXPECT_NEAR(accumulate(c, s, JointAction{{0.0, 0.0}})[0], 0.01, 0);
  s.harvested[0] = 0.01;
  EXPECT_EQ(accumulate(c, s, JointAction{{0.0, 0.0}})[0], 0.0);
}

TEST(Accumulate, AgentsSumOnOneTarget) {
  auto c = OneTarget();
  c.agents.push_back(c.agents[0]);
  const State s = initial_state(c);
  auto one = OneTarget();
  EXPECT_NEAR(accumulate(c, s, JointAction{{0, 0}, {0, 0}})[0], 2 * accumulate(one, initial_state(one), JointAction{{0, 0}})[0], 1e-14);
}

TEST(Accumulate, TenSubstepsCloseToFine) {
  const auto c = builtin_config_1();
  const State s = initial_state(c);
  const JointAction a{{1.0, 0.0}, {1.0, kPi / 2}, {1.0, kPi / 4}};
  const auto coarse = accumulate(c, s, a, 10);
  const auto fine = accumulate(c, s, a, 10000);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(coarse[i], fine[i], 1e-3 * fine[i]) << i;
}

TEST(Accumulate, TrapezoidRefinementIsSecondOrder) {
  // Fly past a target so the integrand is curved and far from the clamp.
  ScenarioConfig c = OneTarget();
  c.agents[0].start = {-0.5, 0.3};
  const State s = initial_state(c);
  const JointAction a{{1.0, 0.1}};
  const double exact = accumulate(c, s, a, 200000)[0];
  for (int sub : {5, 50}) {
    const double e1 = std::abs(accumulate(c, s, a, sub)[0] - exact);
    const double e10 = std::abs(accumulate(c, s, a, 10 * sub)[0] - exact);
    EXPECT_GE(e1 / e10, 3.5) << "substeps " << sub;
  }
}

TEST(Accumulate, BoundedAndMonotoneOnRandomRollouts) {
  std::mt19937_64 rng(11);
  for (const auto& c : {builtin_config_1(), builtin_config_2()}) {
    const GoalSpec goal = GoalSpec::from(c);
    for (int ep = 0; ep < 500; ++ep) {
      State s = initial_state(c);
      while (s.step_index < c.n_max && !is_terminal(s, goal)) {
        const auto out = step(c, s, RandomAction(c, rng), goal);
        for (int i = 0; i < c.num_targets(); ++i) {
          ASSERT_GE(out.next_state.harvested[i], s.harvested[i]);
          ASSERT_GE(out.next_state.harvested[i], 0.0);
          ASSERT_LE(out.next_state.harvested[i], c.targets[i].initial_volume);
        }
        s = out.next_state;
      }
    }
  }
}

State GoalState(const ScenarioConfig& c) {
  State s;
  for (const auto& a : c.agents) s.positions.push_back(a.final);
  s.harvested.resize(c.num_targets());
  for (int i = 0; i < c.num_targets(); ++i) s.harvested[i] = c.targets[i].initial_volume;
  return s;
}

TEST(Terminal, ToleranceSemantics) {
  const auto c = builtin_config_1();
  const auto g = GoalSpec::from(c);
  State s = GoalState(c);
  EXPECT_TRUE(is_terminal(s, g));
  EXPECT_EQ(terminal_penalty(c, s, g), 0.0);
  s.positions[1] += Vec2(2 * g.position_tolerance, 0);
  EXPECT_FALSE(is_terminal(s, g));
  s = GoalState(c);
  s.harvested[0] -= g.data_tolerance / 2;
  s.harvested[3] -= g.data_tolerance / 2;
  EXPECT_TRUE(is_terminal(s, g));
}

TEST(Terminal, PenaltyExamples) {
  const auto c = builtin_config_1();
  auto g = GoalSpec::from(c);
  g.multipliers = {1.0, 1.0};
  State s = GoalState(c);
  s.positions[0] = c.agents[0].final + Vec2(0, -3);
  EXPECT_NEAR(terminal_penalty(c, s, g), 3.0, 1e-12);
  s = GoalState(c);
  s.harvested[0] -= 1;
  s.harvested[2] -= 2;
  EXPECT_NEAR(terminal_penalty(c, s, g), 3.0, 1e-12);
}

TEST(Step, RewardAndTermination) {
  const auto c = builtin_config_1();
  const auto g = GoalSpec::from(c);
  State s = initial_state(c);
  const auto out = step(c, s, {{1, 0.3}, {1, 0.3}, {1, 0.3}}, g);
  EXPECT_EQ(out.reward, -1.0);
  EXPECT_FALSE(out.terminal);
  EXPECT_EQ(out.next_state.step_index, 1);

  s.step_index = c.n_max - 1;
  const auto last = step(c, s, {{0, 0}, {0, 0}, {0, 0}}, g);
  EXPECT_TRUE(last.terminal);
  EXPECT_FALSE(last.success);
  EXPECT_GT(last.terminal_penalty, 0.0);
  EXPECT_THROW(step(c, last.next_state, {{0, 0}, {0, 0}, {0, 0}}, g), ContractViolation);
}

TEST(Step, ReachingGoalHasNoPenalty) {
  const auto c = builtin_config_1();
  const auto g = GoalSpec::from(c);
  State s = GoalState(c);
  s.positions[0] -= Vec2(0.5, 0);
  const auto out = step(c, s, {{0.5, 0}, {0, 0}, {0, 0}}, g);
  EXPECT_TRUE(out.terminal);
  EXPECT_TRUE(out.success);
  EXPECT_EQ(out.terminal_penalty, 0.0);
}

TEST(Step, Deterministic) {
  const auto c = builtin_config_2();
  const auto g = GoalSpec::from(c);
  std::mt19937_64 rng(5);
  const State s = initial_state(c);
  for (int k = 0; k < 50; ++k) {
    const auto a = RandomAction(c, rng);
    const auto x = step(c, s, a, g);
    const auto y = step(c, s, a, g);
    EXPECT_TRUE(x.next_state == y.next_state);
    EXPECT_EQ(x.reward, y.reward);
  }
}

TEST(Completion, Examples) {
  const auto c = builtin_config_1();
  const auto g = GoalSpec::from(c);
  const auto done = expected_completion_time(c, GoalState(c), g, 18);
  EXPECT_EQ(done.time, 18.0);
  EXPECT_TRUE(done.success);
  State s = GoalState(c);
  s.positions[2] = c.agents[2].final + Vec2(-2, 0);
  const auto short2 = expected_completion_time(c, s, g, 20);
  EXPECT_NEAR(short2.time, 22.0, 1e-12);
  EXPECT_FALSE(short2.success);
}

TEST(Completion, ResidualDataTimeUsesFinalRates) {
  const auto c = builtin_config_1();
  const auto g = GoalSpec::from(c);
  State s = GoalState(c);
  s.harvested[3] -= 1.0;  // target (7,7), two units below the finals
  double rate = 0;
  for (const auto& p : s.positions) rate += transmission_rate(p, 0.5, c.targets[3]);
  EXPECT_NEAR(expected_completion_time(c, s, g, 10).time, 10 + 1.0 / rate, 1e-12);
}

TEST(Completion, UnreachableDataIsCapped) {
  const auto c = builtin_config_1();
  const auto g = GoalSpec::from(c);
  State s = GoalState(c);
  for (auto& p : s.positions) p = Vec2(1e6, 1e6);
  s.harvested[0] = 0;
  const auto est = expected_completion_time(c, s, g, 32);
  EXPECT_TRUE(est.capped);
  EXPECT_GE(est.time, 32 + 10.0 * c.n_max);
}

TEST(Reward, SuccessfulReturnIsMinusLength) {
  auto c2 = OneTarget(0.0);
  c2.agents[0].final = {3, 0};
  Environment e2(c2);
  double ret = 0;
  for (int k = 0; k < 2; ++k) ret += e2.step({{1.0, 0.0}}).reward;
  EXPECT_TRUE(e2.done());
  EXPECT_EQ(ret, -2.0);
}

TEST(Reward, PenaltyDecreasesWithRemainingData) {
  const auto c = builtin_config_1();
  const auto g = GoalSpec::from(c);
  State s = GoalState(c);
  s.positions[0] += Vec2(1, 0);
  double prev = -1;
  for (double left = 0.0; left <= 4.0; left += 0.5) {
    State t = s;
    t.harvested[1] -= left;
    const double pen = terminal_penalty(c, t, g);
    EXPECT_GT(pen, prev);
    prev = pen;
  }
}

TEST(Reward, FailedReturnBelowAnySuccessOnBuiltins) {
  // A failed episode always runs N_max steps and pays a positive penalty; a
  // successful one never runs longer.
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0, 1);
  for (const auto& c : {builtin_config_1(), builtin_config_2()}) {
    const auto g = GoalSpec::from(c);
    for (int trial = 0; trial < 2000; ++trial) {
      State s = GoalState(c);
      const int which = trial % 3;
      if (which != 1) s.positions[trial % c.num_agents()] += Vec2(g.position_tolerance * (1 + 1e-6 + u(rng)), 0);
      if (which != 0) s.harvested[trial % c.num_targets()] -= g.data_tolerance * (1 + 1e-6 + u(rng));
      ASSERT_FALSE(is_terminal(s, g));
      const double failed = -c.n_max - terminal_penalty(c, s, g);
      const double worst_success = -static_cast<double>(c.n_max);
      ASSERT_LT(failed, worst_success);
    }
  }
}

TEST(Observation, ScaledIntoUnitBox) {
  const auto c = builtin_config_1();
  const ObservationScaler scaler(c);
  EXPECT_EQ(scaler.state_dim(), 2 * 3 + 4);
  EXPECT_EQ(scaler.dim(), 2 * 3 + 4 + 1);
  EXPECT_EQ(ObservationScaler(c, false).dim(), scaler.state_dim());
  const auto x = scaler(GoalState(c));
  EXPECT_GE(x.minCoeff(), 0.0);
  EXPECT_LE(x.maxCoeff(), 1.0);
  EXPECT_EQ(x.segment(6, 4), Eigen::VectorXd::Ones(4));
  State s = initial_state(c);
  s.step_index = 16;
  EXPECT_DOUBLE_EQ(scaler(s)[10], 0.5);
}

TEST(Environment, StepAfterDoneThrows) {
  auto c = OneTarget(0.0);
  c.agents[0].final = {2, 0};
  Environment env(c);
  env.step({{1.0, 0.0}});
  EXPECT_TRUE(env.done());
  EXPECT_THROW(env.step({{1.0, 0.0}}), ContractViolation);
  env.reset();
  EXPECT_FALSE(env.done());
}

TEST(TrajectoryCsv, RoundTripTracks) {
  const auto c = builtin_config_1();
  Environment env(c);
  std::mt19937_64 rng(3);
  const Rollout r = run_episode(env, [&](const Environment& e) { return RandomAction(e.config(), rng); });
  std::stringstream ss;
  write_trajectory_csv(ss, r);
  const auto tracks = read_trajectory_tracks(ss);
  ASSERT_EQ(tracks.size(), 3u);
  ASSERT_EQ(tracks[0].size(), r.states.size());
  for (std::size_t n = 0; n < r.states.size(); ++n)
    for (int j = 0; j < 3; ++j) EXPECT_EQ(tracks[j][n], r.states[n].positions[j]);
}

TEST(TrajectoryCsv, MalformedLineNamed) {
  std::stringstream ss("step,agent_id,x,y,rho,alpha\n0,0,1,2,0,0\n1,0,abc,2,0,0\n");
  try {
    read_trajectory_tracks(ss);
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
  std::stringstream empty("");
  EXPECT_THROW(read_trajectory_tracks(empty), std::runtime_error);
}

}  // namespace
}  // namespace harvest
