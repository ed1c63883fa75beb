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

// The data-harvesting MDP. Agents move in the plane with polar commands,
// harvest data along their path, and the episode ends when every agent is at
// its final position with every target drained, or when the step budget runs
// out. Unfinished episodes are charged a terminal penalty.

#ifndef HARVEST_ENV_HPP_
#define HARVEST_ENV_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "harvest/channel.hpp"
#include "harvest/scenario.hpp"

namespace harvest {

/// A caller broke an operation's precondition (e.g. stepping a finished
/// episode or feeding an inadmissible action).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct State {
  std::vector<Vec2> positions;
  Eigen::VectorXd harvested;
  int step_index = 0;

  bool operator==(const State& o) const {
    return positions == o.positions && harvested == o.harvested && step_index == o.step_index;
  }
};

struct PolarAction {
  double speed = 0.0;
  double heading = 0.0;
};

using JointAction = std::vector<PolarAction>;

struct GoalSpec {
  std::vector<Vec2> final_positions;
  Eigen::VectorXd full_volumes;
  double position_tolerance = 0.05;
  double data_tolerance = 0.01;
  // [0] weighs the travel-time residual, [1] the remaining-data 1-norm.
  std::array<double, 2> multipliers{2.0, 2.0};

  static GoalSpec from(const ScenarioConfig& config) {
    GoalSpec g;
    for (const auto& a : config.agents) g.final_positions.push_back(a.final);
    g.full_volumes.resize(config.num_targets());
    for (int i = 0; i < config.num_targets(); ++i) g.full_volumes[i] = config.targets[i].initial_volume;
    return g;
  }
};

struct StepOutcome {
  State next_state;
  double reward = -1.0;
  Eigen::VectorXd harvested_delta;
  bool terminal = false;
  // Goal reached within tolerance (as opposed to running out of budget).
  bool success = false;
  double terminal_penalty = 0.0;
};

inline State initial_state(const ScenarioConfig& config) {
  State s;
  for (const auto& a : config.agents) s.positions.push_back(a.start);
  s.harvested = Eigen::VectorXd::Zero(config.num_targets());
  return s;
}

inline double transmission_rate(const Vec2& agent_pos, double height, const TargetSpec& target) {
  return transmission_rate(agent_pos, height, target.position, target.bandwidth, target.gain);
}

inline bool admissible(const PolarAction& a, double max_speed) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  return std::isfinite(a.speed) && std::isfinite(a.heading) && a.speed >= 0.0 &&
         a.speed <= max_speed * (1.0 + 1e-12) && a.heading >= 0.0 && a.heading < kTwoPi;
}

/// Applies one polar displacement per agent. Throws ContractViolation on an
/// inadmissible command.
inline std::vector<Vec2> move(const ScenarioConfig& config, const std::vector<Vec2>& positions,
                              const JointAction& action) {
  if (action.size() != positions.size() || positions.size() != config.agents.size())
    throw ContractViolation("joint action has " + std::to_string(action.size()) +
                            " entries for " + std::to_string(positions.size()) + " agents");
  std::vector<Vec2> next(positions.size());
  for (std::size_t j = 0; j < positions.size(); ++j) {
    const auto& a = action[j];
    if (!admissible(a, config.agents[j].max_speed))
      throw ContractViolation("inadmissible action for agent " + std::to_string(j) +
                              ": speed=" + std::to_string(a.speed) +
                              " heading=" + std::to_string(a.heading));
    next[j] = positions[j] + a.speed * config.dt * Vec2(std::cos(a.heading), std::sin(a.heading));
  }
  return next;
}

/// Data harvested during one step: trapezoidal quadrature of the summed
/// per-target rate along every agent's straight segment, clamped so no target
/// gives more than it holds.
inline Eigen::VectorXd accumulate(const ScenarioConfig& config, const State& state,
                                  const std::vector<Vec2>& next_positions, int substeps = 10) {
  if (substeps < 1) throw ContractViolation("substeps must be >= 1");
  const int ms = config.num_targets();
  Eigen::VectorXd integral = Eigen::VectorXd::Zero(ms);
  for (int k = 0; k <= substeps; ++k) {
    const double t = static_cast<double>(k) / substeps;
    const double w = (k == 0 || k == substeps) ? 0.5 : 1.0;
    for (std::size_t j = 0; j < state.positions.size(); ++j) {
      const Vec2 p = (1.0 - t) * state.positions[j] + t * next_positions[j];
      const double h = config.agents[j].height;
      for (int i = 0; i < ms; ++i) integral[i] += w * transmission_rate(p, h, config.targets[i]);
    }
  }
  Eigen::VectorXd delta(ms);
  for (int i = 0; i < ms; ++i) {
    const double room = std::max(0.0, config.targets[i].initial_volume - state.harvested[i]);
    delta[i] = std::clamp(integral[i] * config.dt / substeps, 0.0, room);
  }
  return delta;
}

inline Eigen::VectorXd accumulate(const ScenarioConfig& config, const State& state,
                                  const JointAction& action, int substeps = 10) {
  return accumulate(config, state, move(config, state.positions, action), substeps);
}

/// Goal reached: every agent within tolerance of its final position and every
/// target drained to within the data tolerance.
inline bool is_terminal(const State& state, const GoalSpec& goal) {
  for (std::size_t j = 0; j < state.positions.size(); ++j) {
    if ((state.positions[j] - goal.final_positions[j]).norm() > goal.position_tolerance) return false;
  }
  for (Eigen::Index i = 0; i < state.harvested.size(); ++i) {
    if (goal.full_volumes[i] - state.harvested[i] > goal.data_tolerance) return false;
  }
  return true;
}

/// Terminal-constraint residuals: slowest agent's straight-line travel time to
/// its final position, and the 1-norm of data left at the targets. Components
/// already met within tolerance count as zero.
inline std::array<double, 2> constraint_residuals(const ScenarioConfig& config, const State& state,
                                                  const GoalSpec& goal) {
  double travel = 0.0;
  for (std::size_t j = 0; j < state.positions.size(); ++j) {
    const double dist = (state.positions[j] - goal.final_positions[j]).norm();
    if (dist > goal.position_tolerance)
      travel = std::max(travel, dist / config.agents[j].max_speed * config.dt);
  }
  double data = 0.0;
  for (Eigen::Index i = 0; i < state.harvested.size(); ++i) {
    const double left = std::max(0.0, goal.full_volumes[i] - state.harvested[i]);
    if (left > goal.data_tolerance) data += left;
  }
  return {travel, data};
}

inline double terminal_penalty(const ScenarioConfig& config, const State& state, const GoalSpec& goal) {
  const auto f = constraint_residuals(config, state, goal);
  return goal.multipliers[0] * f[0] + goal.multipliers[1] * f[1];
}

/// One MDP transition with reward -1. The episode ends on reaching the goal
/// or on the last budgeted step, in which case the terminal penalty is set.
inline StepOutcome step(const ScenarioConfig& config, const State& state, const JointAction& action,
                        const GoalSpec& goal, int substeps = 10) {
  if (state.step_index >= config.n_max)
    throw ContractViolation("step budget already exhausted");
  if (is_terminal(state, goal)) throw ContractViolation("stepping a terminal state");
  StepOutcome out;
  const auto next_positions = move(config, state.positions, action);
  out.harvested_delta = accumulate(config, state, next_positions, substeps);
  out.next_state.positions = next_positions;
  out.next_state.harvested = state.harvested + out.harvested_delta;
  out.next_state.step_index = state.step_index + 1;
  out.reward = -1.0;
  out.success = is_terminal(out.next_state, goal);
  out.terminal = out.success || out.next_state.step_index >= config.n_max;
  if (out.terminal) out.terminal_penalty = terminal_penalty(config, out.next_state, goal);
  return out;
}

struct CompletionEstimate {
  double time = 0.0;
  bool success = false;
  // Some target still had data but no agent could reach it from where it
  // stopped; `time` then carries the residual cap.
  bool capped = false;
};

/// Executed time plus the time spent hovering at the final positions to finish
/// the data, plus the straight-line max-speed travel to the finals.
inline CompletionEstimate expected_completion_time(const ScenarioConfig& config, const State& final_state,
                                                   const GoalSpec& goal, int steps_executed) {
  CompletionEstimate est;
  est.time = steps_executed * config.dt;
  if (is_terminal(final_state, goal)) {
    est.success = true;
    return est;
  }
  const double cap = 10.0 * config.n_max * config.dt;
  double residual = 0.0;
  for (int i = 0; i < config.num_targets(); ++i) {
    const double left = goal.full_volumes[i] - final_state.harvested[i];
    if (left <= goal.data_tolerance) continue;
    double rate = 0.0;
    for (std::size_t j = 0; j < final_state.positions.size(); ++j)
      rate += transmission_rate(final_state.positions[j], config.agents[j].height, config.targets[i]);
    if (!(rate > 0.0) || left / rate > cap) {
      residual = cap;
      est.capped = true;
      break;
    }
    residual = std::max(residual, left / rate);
  }
  est.time += residual + constraint_residuals(config, final_state, goal)[0];
  return est;
}

/// Maps raw states into roughly [0, 1]: positions by the scenario's bounding
/// box (one common scale for both axes), harvested data by each target's
/// volume, and optionally the elapsed fraction of the step budget.
class ObservationScaler {
 public:
  explicit ObservationScaler(const ScenarioConfig& config, bool include_time = true)
      : include_time_(include_time), n_max_(config.n_max) {
    Vec2 lo = config.targets.front().position;
    Vec2 hi = lo;
    auto grow = [&](const Vec2& p) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    };
    for (const auto& t : config.targets) grow(t.position);
    for (const auto& a : config.agents) {
      grow(a.start);
      grow(a.final);
    }
    origin_ = lo;
    extent_ = std::max((hi - lo).maxCoeff(), 1e-9);
    volumes_.resize(config.num_targets());
    for (int i = 0; i < config.num_targets(); ++i) {
      const double d = config.targets[i].initial_volume;
      volumes_[i] = d > 0.0 ? d : 1.0;
    }
    num_agents_ = config.num_agents();
  }

  /// Entries that describe the physical state (positions, harvested data).
  int state_dim() const { return 2 * num_agents_ + static_cast<int>(volumes_.size()); }
  /// state_dim() plus the elapsed-budget fraction when time is included.
  int dim() const { return state_dim() + (include_time_ ? 1 : 0); }

  Eigen::VectorXd operator()(const State& s) const {
    Eigen::VectorXd x(dim());
    for (int j = 0; j < num_agents_; ++j) x.segment<2>(2 * j) = (s.positions[j] - origin_) / extent_;
    x.segment(2 * num_agents_, volumes_.size()) = s.harvested.cwiseQuotient(volumes_);
    if (include_time_) x[dim() - 1] = static_cast<double>(s.step_index) / n_max_;
    return x;
  }

 private:
  bool include_time_ = true;
  int n_max_ = 1;
  Vec2 origin_;
  double extent_ = 1.0;
  Eigen::VectorXd volumes_;
  int num_agents_ = 0;
};

/// Single-episode environment; one instance per execution context.
class Environment {
 public:
  explicit Environment(ScenarioConfig config, int substeps = 10)
      : config_(std::move(config)), goal_(GoalSpec::from(config_)), scaler_(config_), substeps_(substeps) {
    reset();
  }
  Environment(ScenarioConfig config, GoalSpec goal, int substeps = 10)
      : config_(std::move(config)), goal_(std::move(goal)), scaler_(config_), substeps_(substeps) {
    reset();
  }

  const State& reset() {
    state_ = initial_state(config_);
    done_ = false;
    return state_;
  }

  StepOutcome step(const JointAction& action) {
    if (done_) throw ContractViolation("episode already finished");
    StepOutcome out = harvest::step(config_, state_, action, goal_, substeps_);
    state_ = out.next_state;
    done_ = out.terminal;
    return out;
  }

  Eigen::VectorXd observe() const { return scaler_(state_); }
  Eigen::VectorXd observe(const State& s) const { return scaler_(s); }

  const State& state() const { return state_; }
  bool done() const { return done_; }
  const ScenarioConfig& config() const { return config_; }
  const GoalSpec& goal() const { return goal_; }
  const ObservationScaler& scaler() const { return scaler_; }
  int substeps() const { return substeps_; }

 private:
  ScenarioConfig config_;
  GoalSpec goal_;
  ObservationScaler scaler_;
  int substeps_;
  State state_;
  bool done_ = false;
};

/// States visited and commands issued during one episode. `actions[n]` moves
/// `states[n]` to `states[n + 1]`.
struct Rollout {
  std::vector<State> states;
  std::vector<JointAction> actions;
};

/// Runs one episode from the start state with `policy(env) -> JointAction`
/// until the goal or the budget. Returns the visited states and commands.
template <typename Policy>
Rollout run_episode(Environment& env, Policy&& policy) {
  Rollout r;
  r.states.push_back(env.reset());
  while (!env.done()) {
    JointAction a = policy(env);
    env.step(a);
    r.actions.push_back(std::move(a));
    r.states.push_back(env.state());
  }
  return r;
}

inline void write_trajectory_csv(std::ostream& out, const Rollout& rollout) {
  const int ms = rollout.states.empty() ? 0 : static_cast<int>(rollout.states.front().harvested.size());
  out << "step,agent_id,x,y,rho,alpha";
  for (int i = 0; i < ms; ++i) out << ",harvested_" << i;
  out << '\n';
  std::ostringstream row;
  row.precision(17);
  for (std::size_t n = 0; n < rollout.states.size(); ++n) {
    const auto& s = rollout.states[n];
    for (std::size_t j = 0; j < s.positions.size(); ++j) {
      PolarAction a;
      if (n < rollout.actions.size()) a = rollout.actions[n][j];
      row.str("");
      row << n << ',' << j << ',' << s.positions[j].x() << ',' << s.positions[j].y() << ',' << a.speed
          << ',' << a.heading;
      for (int i = 0; i < ms; ++i) row << ',' << s.harvested[i];
      out << row.str() << '\n';
    }
  }
}

inline void write_trajectory_csv(const std::string& path, const Rollout& rollout) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_trajectory_csv(out, rollout);
}

/// Parses a trajectory CSV back into per-agent position tracks. Throws
/// std::runtime_error with the offending line number on malformed input.
inline std::vector<std::vector<Vec2>> read_trajectory_tracks(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("step,agent_id,x,y", 0) != 0)
    throw std::runtime_error("line 1: missing trajectory header");
  std::vector<std::vector<Vec2>> tracks;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> cells;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        cells.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw std::runtime_error("line " + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
    }
    if (cells.size() < 6) throw std::runtime_error("line " + std::to_string(lineno) + ": too few columns");
    const auto agent = static_cast<std::size_t>(cells[1]);
    if (cells[1] < 0 || agent > 1024)
      throw std::runtime_error("line " + std::to_string(lineno) + ": bad agent id");
    if (tracks.size() <= agent) tracks.resize(agent + 1);
    tracks[agent].emplace_back(cells[2], cells[3]);
  }
  return tracks;
}

}  // namespace harvest

#endif  // HARVEST_ENV_HPP_
