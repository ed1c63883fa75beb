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

// Discrete-action comparators: best-first search over the lattice of
// compass moves, and a double deep Q-network over the joint move set.

#ifndef HARVEST_BASELINES_HPP_
#define HARVEST_BASELINES_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "harvest/env.hpp"
#include "harvest/nn.hpp"
#include "harvest/ppo.hpp"
#include "harvest/scenario.hpp"

namespace harvest {

/// Per-agent compass moves of a fixed length plus hover; joint ids are the
/// base-5 number whose digit j is agent j's move.
class DiscreteActionSet {
 public:
  enum Move : int { kNorth = 0, kEast = 1, kSouth = 2, kWest = 3, kHover = 4 };
  static constexpr int kPerAgent = 5;

  DiscreteActionSet(int num_agents, double step_length) : num_agents_(num_agents), step_length_(step_length) {
    if (num_agents < 1) throw std::invalid_argument("need at least one agent");
    if (!(step_length > 0.0)) throw std::invalid_argument("step length must be > 0");
    size_ = 1;
    for (int j = 0; j < num_agents; ++j) size_ *= kPerAgent;
  }

  int size() const { return size_; }
  int num_agents() const { return num_agents_; }
  double step_length() const { return step_length_; }

  std::vector<int> decode(int id) const {
    if (id < 0 || id >= size_) throw std::out_of_range("joint action id " + std::to_string(id));
    std::vector<int> moves(num_agents_);
    for (int j = 0; j < num_agents_; ++j) {
      moves[j] = id % kPerAgent;
      id /= kPerAgent;
    }
    return moves;
  }

  int encode(const std::vector<int>& moves) const {
    if (static_cast<int>(moves.size()) != num_agents_) throw std::invalid_argument("wrong number of moves");
    int id = 0;
    for (int j = num_agents_ - 1; j >= 0; --j) {
      if (moves[j] < 0 || moves[j] >= kPerAgent) throw std::out_of_range("move " + std::to_string(moves[j]));
      id = id * kPerAgent + moves[j];
    }
    return id;
  }

  static Eigen::Vector2i lattice_offset(int move) {
    switch (move) {
      case kNorth: return {0, 1};
      case kEast: return {1, 0};
      case kSouth: return {0, -1};
      case kWest: return {-1, 0};
      default: return {0, 0};
    }
  }

  JointAction to_polar(int id, double dt) const {
    JointAction a;
    for (int m : decode(id)) {
      if (m == kHover) {
        a.push_back({0.0, 0.0});
        continue;
      }
      static constexpr double kHeading[4] = {std::numbers::pi / 2, 0.0, 3 * std::numbers::pi / 2, std::numbers::pi};
      a.push_back({step_length_ / dt, kHeading[m]});
    }
    return a;
  }

  /// Throws if some agent cannot cover one step length in one time step.
  void check_feasible(const ScenarioConfig& config) const {
    if (config.num_agents() != num_agents_) throw std::invalid_argument("agent count mismatch");
    for (const auto& a : config.agents)
      if (step_length_ > a.max_speed * config.dt * (1.0 + 1e-12))
        throw std::invalid_argument("step length exceeds max_speed * dt");
  }

 private:
  int num_agents_;
  double step_length_;
  int size_ = 1;
};

/// Lower bound on the remaining completion time: the larger of the slowest
/// agent's straight-line travel (less the position tolerance) and a data
/// bound. The data bound takes the worse of each target drained by every
/// agent at that target's peak rate, and the total remaining data drained at
/// the summed peak rate of all agent and target pairs.
inline double heuristic(const State& state, const GoalSpec& goal, const ScenarioConfig& config) {
  double travel = 0.0;
  for (std::size_t j = 0; j < state.positions.size(); ++j) {
    const double dist = (state.positions[j] - goal.final_positions[j]).norm();
    if (dist > goal.position_tolerance)
      travel = std::max(travel, (dist - goal.position_tolerance) / config.agents[j].max_speed * config.dt);
  }
  double per_target = 0.0;
  double total_left = 0.0;
  double total_rate = 0.0;
  for (int i = 0; i < config.num_targets(); ++i) {
    const auto& t = config.targets[i];
    double rate = 0.0;
    for (const auto& a : config.agents) rate += peak_rate(a.height, t.bandwidth, t.gain);
    total_rate += rate;
    const double left = goal.full_volumes[i] - state.harvested[i];
    if (left <= goal.data_tolerance) continue;
    const double need = left - goal.data_tolerance;
    total_left += need;
    per_target = std::max(per_target, need / rate);
  }
  const double aggregate = total_left > 0.0 ? total_left / total_rate : 0.0;
  return std::max(travel, std::max(per_target, aggregate));
}

/// One node on a returned plan.
struct SearchNode {
  State state;
  // Accumulated cost and heuristic, in time units.
  double g = 0.0;
  double h = 0.0;
  // Action id that led here from the previous node; -1 at the root.
  int parent_action = -1;
};

struct AStarOptions {
  double step_length = 1.0;
  long budget = 50000;
  double data_quantum = 1e-2;
  int substeps = 10;
};

struct AStarDiagnostics {
  long expansions = 0;
  long generated = 0;
  long duplicates = 0;
  std::size_t max_open = 0;
  // Pops whose f fell below the running maximum (heuristic inconsistency).
  long f_decreases = 0;
  // (expansion count, incumbent expected completion time) whenever it improves.
  std::vector<std::pair<long, double>> incumbent_curve;
};

struct AStarResult {
  std::vector<int> plan;
  std::vector<SearchNode> path;
  Rollout rollout;
  CompletionEstimate completion;
  // True when a goal state was popped; false means the incumbent was returned.
  bool complete = false;
  AStarDiagnostics diagnostics;
};

/// Best-first search on f = g + h over lattice moves, with duplicate detection
/// on (lattice cell, data quantized to `data_quantum`). Never searches past
/// the scenario's step budget. On budget exhaustion the expanded node with the
/// lowest expected completion time is returned and flagged incomplete.
inline AStarResult astar_plan(const ScenarioConfig& config, const AStarOptions& options = {},
                              GoalSpec goal = {}) {
  if (options.budget < 1) throw std::invalid_argument("search budget must be >= 1");
  if (goal.final_positions.empty()) goal = GoalSpec::from(config);
  const DiscreteActionSet actions(config.num_agents(), options.step_length);
  actions.check_feasible(config);

  const int ma = config.num_agents();
  const int ms = config.num_targets();
  // Nodes live in flat pools: lattice cells relative to each agent's start
  // (which keeps positions exact), harvested data, and bookkeeping.
  std::vector<std::int32_t> cell_pool;
  std::vector<double> data_pool;
  struct Meta {
    std::int32_t parent;
    std::int32_t action;
    std::int32_t steps;
    float h;
  };
  std::vector<Meta> meta;
  auto load_state = [&](int id) {
    State s;
    for (int j = 0; j < ma; ++j) {
      const Eigen::Vector2d cell(cell_pool[2 * (std::size_t(id) * ma + j)],
                                 cell_pool[2 * (std::size_t(id) * ma + j) + 1]);
      s.positions.push_back(config.agents[j].start + options.step_length * cell);
    }
    s.harvested = Eigen::Map<const Eigen::VectorXd>(data_pool.data() + std::size_t(id) * ms, ms);
    s.step_index = meta[id].steps;
    return s;
  };
  auto quantize = [&](double d) { return static_cast<std::int64_t>(std::llround(d / options.data_quantum)); };
  auto hash_of = [&](const std::int32_t* cells, const double* data) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&](std::uint64_t v) {
      h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
      h *= 1099511628211ULL;
    };
    for (int k = 0; k < 2 * ma; ++k) mix(static_cast<std::uint64_t>(cells[k]));
    for (int i = 0; i < ms; ++i) mix(static_cast<std::uint64_t>(quantize(data[i])));
    return h;
  };
  auto same_key = [&](int id, const std::int32_t* cells, const double* data) {
    for (int k = 0; k < 2 * ma; ++k)
      if (cell_pool[std::size_t(id) * 2 * ma + k] != cells[k]) return false;
    for (int i = 0; i < ms; ++i)
      if (quantize(data_pool[std::size_t(id) * ms + i]) != quantize(data[i])) return false;
    return true;
  };
  // Hash of the quantized key -> node id. A hash shared by two distinct keys
  // only costs a missed merge, never a wrong one.
  std::unordered_map<std::uint64_t, std::int32_t> seen;

  struct Entry {
    double f;
    std::int32_t steps;
    std::int32_t id;
  };
  auto worse = [](const Entry& a, const Entry& b) {
    if (a.f != b.f) return a.f > b.f;
    if (a.steps != b.steps) return a.steps < b.steps;  // deeper first on ties
    return a.id > b.id;
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> open(worse);

  AStarResult result;
  auto& diag = result.diagnostics;
  const State root = initial_state(config);
  cell_pool.assign(2 * ma, 0);
  data_pool.assign(root.harvested.data(), root.harvested.data() + ms);
  const double h0 = heuristic(root, goal, config);
  meta.push_back({-1, -1, 0, static_cast<float>(h0)});
  seen.emplace(hash_of(cell_pool.data(), data_pool.data()), 0);
  open.push({h0, 0, 0});

  int goal_id = -1;
  int incumbent = 0;
  double incumbent_time = std::numeric_limits<double>::infinity();
  double max_f = -std::numeric_limits<double>::infinity();
  std::vector<std::int32_t> child_cells(2 * ma);
  std::vector<Vec2> next(ma);

  while (!open.empty() && diag.expansions < options.budget) {
    const Entry e = open.top();
    open.pop();
    if (e.steps > meta[e.id].steps) continue;  // superseded by a cheaper path
    if (e.f < max_f - 1e-9) ++diag.f_decreases;
    max_f = std::max(max_f, e.f);
    const State state = load_state(e.id);
    if (is_terminal(state, goal)) {
      goal_id = e.id;
      break;
    }
    ++diag.expansions;
    const double t = expected_completion_time(config, state, goal, state.step_index).time;
    if (t < incumbent_time) {
      incumbent_time = t;
      incumbent = e.id;
      diag.incumbent_curve.emplace_back(diag.expansions, t);
    }
    if (state.step_index >= config.n_max) continue;
    const std::vector<std::int32_t> parent_cells(cell_pool.begin() + std::size_t(e.id) * 2 * ma,
                                                 cell_pool.begin() + std::size_t(e.id + 1) * 2 * ma);
    State child;
    child.step_index = state.step_index + 1;
    for (int a = 0; a < actions.size(); ++a) {
      const auto moves = actions.decode(a);
      for (int j = 0; j < ma; ++j) {
        const Eigen::Vector2i off = DiscreteActionSet::lattice_offset(moves[j]);
        child_cells[2 * j] = parent_cells[2 * j] + off.x();
        child_cells[2 * j + 1] = parent_cells[2 * j + 1] + off.y();
        next[j] = config.agents[j].start +
                  options.step_length * Vec2(child_cells[2 * j], child_cells[2 * j + 1]);
      }
      child.harvested = state.harvested + accumulate(config, state, next, options.substeps);
      ++diag.generated;
      const std::uint64_t key = hash_of(child_cells.data(), child.harvested.data());
      auto it = seen.find(key);
      const bool match = it != seen.end() && same_key(it->second, child_cells.data(), child.harvested.data());
      if (match && meta[it->second].steps <= child.step_index) {
        ++diag.duplicates;
        continue;
      }
      child.positions = next;
      const double h = heuristic(child, goal, config);
      const auto id = static_cast<std::int32_t>(meta.size());
      meta.push_back({e.id, a, child.step_index, static_cast<float>(h)});
      cell_pool.insert(cell_pool.end(), child_cells.begin(), child_cells.end());
      data_pool.insert(data_pool.end(), child.harvested.data(), child.harvested.data() + ms);
      if (match || it == seen.end()) seen[key] = id;
      open.push({child.step_index * config.dt + h, child.step_index, id});
    }
    diag.max_open = std::max(diag.max_open, open.size());
  }

  const int last = goal_id >= 0 ? goal_id : incumbent;
  result.complete = goal_id >= 0;
  std::vector<int> chain;
  for (int id = last; id >= 0; id = meta[id].parent) chain.push_back(id);
  std::reverse(chain.begin(), chain.end());
  for (int id : chain) {
    SearchNode n{load_state(id), meta[id].steps * config.dt, meta[id].h, meta[id].action};
    if (n.parent_action >= 0) result.plan.push_back(n.parent_action);
    result.path.push_back(std::move(n));
  }

  // Replay through the environment so exported trajectories share its code path.
  Environment env(config, goal, options.substeps);
  result.rollout.states.push_back(env.reset());
  for (int id : result.plan) {
    auto a = actions.to_polar(id, config.dt);
    env.step(a);
    result.rollout.actions.push_back(std::move(a));
    result.rollout.states.push_back(env.state());
  }
  result.completion =
      expected_completion_time(config, env.state(), goal, static_cast<int>(result.plan.size()));
  return result;
}

// ---------------------------------------------------------------------------
// Double DQN.

struct DqnConfig {
  int replay_capacity = 100000;
  int sync_interval = 1000;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  int epsilon_decay_steps = 200000;
  double gamma = 0.99;
  double learning_rate = 5e-4;
  int batch_size = 64;
  double step_length = 1.0;
  int total_steps = 300000;
  int learning_starts = 1000;
  int train_every = 4;
  double reward_scale = 0.05;
  double max_grad_norm = 10.0;
  std::vector<int> hidden{64, 64};
  double position_tolerance = 0.2;
  double data_tolerance = 0.01;
  std::array<double, 2> multipliers{2.0, 2.0};
  int substeps = 10;

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0)) throw std::invalid_argument(std::string(name) + " must be > 0");
    };
    positive(replay_capacity, "replay_capacity");
    positive(sync_interval, "sync_interval");
    positive(epsilon_decay_steps, "epsilon_decay_steps");
    positive(learning_rate, "learning_rate");
    positive(batch_size, "batch_size");
    positive(step_length, "step_length");
    positive(total_steps, "total_steps");
    positive(train_every, "train_every");
    positive(reward_scale, "reward_scale");
    if (!(gamma > 0 && gamma <= 1)) throw std::invalid_argument("gamma must be in (0, 1]");
    if (!(epsilon_end >= 0 && epsilon_end <= epsilon_start && epsilon_start <= 1))
      throw std::invalid_argument("need 0 <= epsilon_end <= epsilon_start <= 1");
    if (learning_starts < batch_size) throw std::invalid_argument("learning_starts must be >= batch_size");
  }

  double epsilon(long step) const {
    const double frac = std::min(1.0, static_cast<double>(step) / epsilon_decay_steps);
    return epsilon_start + frac * (epsilon_end - epsilon_start);
  }
};

/// Fixed-capacity ring buffer of transitions.
class ReplayBuffer {
 public:
  ReplayBuffer(int capacity, int obs_dim)
      : obs_(obs_dim, capacity), next_obs_(obs_dim, capacity), actions_(capacity), rewards_(capacity),
        dones_(capacity) {}

  void add(const Eigen::VectorXd& obs, int action, double reward, const Eigen::VectorXd& next_obs, bool done) {
    obs_.col(head_) = obs;
    next_obs_.col(head_) = next_obs;
    actions_[head_] = action;
    rewards_[head_] = reward;
    dones_[head_] = done ? 1.0 : 0.0;
    head_ = (head_ + 1) % capacity();
    size_ = std::min(size_ + 1, capacity());
  }

  int size() const { return size_; }
  int capacity() const { return static_cast<int>(actions_.size()); }

  struct Sample {
    Eigen::MatrixXd obs, next_obs;
    std::vector<int> actions;
    Eigen::VectorXd rewards, dones;
  };

  Sample sample(int n, std::mt19937_64& rng) const {
    std::uniform_int_distribution<int> pick(0, size_ - 1);
    Sample s{Eigen::MatrixXd(obs_.rows(), n), Eigen::MatrixXd(obs_.rows(), n), std::vector<int>(n),
             Eigen::VectorXd(n), Eigen::VectorXd(n)};
    for (int k = 0; k < n; ++k) {
      const int i = pick(rng);
      s.obs.col(k) = obs_.col(i);
      s.next_obs.col(k) = next_obs_.col(i);
      s.actions[k] = actions_[i];
      s.rewards[k] = rewards_[i];
      s.dones[k] = dones_[i];
    }
    return s;
  }

 private:
  Eigen::MatrixXd obs_, next_obs_;
  std::vector<int> actions_;
  Eigen::VectorXd rewards_, dones_;
  int head_ = 0;
  int size_ = 0;
};

inline int greedy_action(const nn::Mlp& q_net, const Eigen::VectorXd& obs) {
  Eigen::Index best = 0;
  q_net.forward(obs).maxCoeff(&best);
  return static_cast<int>(best);
}

/// r + gamma * (1 - done) * Q_target(s', argmax_a Q_online(s', a)).
inline Eigen::VectorXd double_q_targets(const nn::Mlp& online, const nn::Mlp& target, const Eigen::MatrixXd& next_obs,
                                        const Eigen::VectorXd& rewards, const Eigen::VectorXd& dones, double gamma) {
  const Eigen::MatrixXd q_online = online.forward_batch(next_obs);
  const Eigen::MatrixXd q_target = target.forward_batch(next_obs);
  Eigen::VectorXd y(rewards.size());
  for (Eigen::Index k = 0; k < rewards.size(); ++k) {
    Eigen::Index a = 0;
    q_online.col(k).maxCoeff(&a);
    y[k] = rewards[k] + gamma * (1.0 - dones[k]) * q_target(a, k);
  }
  return y;
}

/// r + gamma * (1 - done) * max_a Q_target(s', a).
inline Eigen::VectorXd max_q_targets(const nn::Mlp& target, const Eigen::MatrixXd& next_obs,
                                     const Eigen::VectorXd& rewards, const Eigen::VectorXd& dones, double gamma) {
  const Eigen::MatrixXd q = target.forward_batch(next_obs);
  return rewards.array() + gamma * (1.0 - dones.array()) * q.colwise().maxCoeff().transpose().array();
}

struct DqnCurvePoint {
  long env_steps = 0;
  int episodes = 0;
  double mean_steps = 0.0;
  double success_rate = 0.0;
};

struct DqnResult {
  nn::Mlp q_net;
  std::vector<DqnCurvePoint> curve;
  Rollout greedy_rollout;
  CompletionEstimate completion;
};

/// Greedy rollout of a Q-network from the start state.
inline std::pair<Rollout, CompletionEstimate> run_greedy(const nn::Mlp& q_net, const ScenarioConfig& config,
                                                         const GoalSpec& goal, double step_length, int substeps) {
  const DiscreteActionSet actions(config.num_agents(), step_length);
  Environment env(config, goal, substeps);
  Rollout r = run_episode(env, [&](const Environment& e) { return actions.to_polar(greedy_action(q_net, e.observe()), config.dt); });
  const auto est = expected_completion_time(config, env.state(), goal, static_cast<int>(r.actions.size()));
  return {std::move(r), est};
}

/// Epsilon-greedy double DQN with the same per-step reward and terminal
/// penalty as the policy-gradient learner. Deterministic given `seed`.
inline DqnResult dqn_train(const ScenarioConfig& config, const DqnConfig& dqn, std::uint64_t seed,
                           const std::function<void(const DqnCurvePoint&)>& progress = {}) {
  dqn.validate();
  auto report = validate(config);
  if (!report.ok()) throw ValidationError(report);
  const DiscreteActionSet actions(config.num_agents(), dqn.step_length);
  actions.check_feasible(config);
  GoalSpec goal = GoalSpec::from(config);
  goal.position_tolerance = dqn.position_tolerance;
  goal.data_tolerance = dqn.data_tolerance;
  goal.multipliers = dqn.multipliers;

  std::mt19937_64 rng(mix_seed(seed, 0xD0));
  Environment env(config, goal, dqn.substeps);
  const int obs_dim = env.scaler().dim();
  std::vector<int> widths{obs_dim};
  widths.insert(widths.end(), dqn.hidden.begin(), dqn.hidden.end());
  widths.push_back(actions.size());
  nn::Mlp online(widths);
  online.init(rng, 1.0);
  nn::Mlp target = online;
  nn::Adam opt(dqn.learning_rate);
  ReplayBuffer replay(dqn.replay_capacity, obs_dim);

  DqnResult result{online, {}, {}, {}};
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> any_action(0, actions.size() - 1);
  long updates = 0;
  int episodes = 0;
  std::vector<int> window_steps;
  std::vector<bool> window_success;
  env.reset();
  Eigen::VectorXd obs = env.observe();
  for (long t = 0; t < dqn.total_steps; ++t) {
    const int a = unit(rng) < dqn.epsilon(t) ? any_action(rng) : greedy_action(online, obs);
    const StepOutcome out = env.step(actions.to_polar(a, config.dt));
    double reward = out.reward;
    if (out.terminal) reward -= out.terminal_penalty;
    const Eigen::VectorXd next_obs = env.observe();
    replay.add(obs, a, dqn.reward_scale * reward, next_obs, out.terminal);
    obs = next_obs;
    if (out.terminal) {
      ++episodes;
      window_steps.push_back(out.success ? out.next_state.step_index : config.n_max);
      window_success.push_back(out.success);
      if (window_steps.size() == 20) {
        DqnCurvePoint p;
        p.env_steps = t + 1;
        p.episodes = episodes;
        for (std::size_t k = 0; k < window_steps.size(); ++k) {
          p.mean_steps += window_steps[k];
          p.success_rate += window_success[k] ? 1.0 : 0.0;
        }
        p.mean_steps /= window_steps.size();
        p.success_rate /= window_steps.size();
        result.curve.push_back(p);
        if (progress) progress(p);
        window_steps.clear();
        window_success.clear();
      }
      env.reset();
      obs = env.observe();
    }
    if (replay.size() < dqn.learning_starts || t % dqn.train_every != 0) continue;

    const auto batch = replay.sample(dqn.batch_size, rng);
    const Eigen::VectorXd y = double_q_targets(online, target, batch.next_obs, batch.rewards, batch.dones, dqn.gamma);
    nn::Mlp::Cache cache;
    const Eigen::MatrixXd q = online.forward_batch(batch.obs, &cache);
    Eigen::MatrixXd dq = Eigen::MatrixXd::Zero(q.rows(), q.cols());
    for (int k = 0; k < dqn.batch_size; ++k) {
      // Huber loss with unit threshold.
      const double err = q(batch.actions[k], k) - y[k];
      dq(batch.actions[k], k) = std::clamp(err, -1.0, 1.0) / dqn.batch_size;
    }
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(online.param_count());
    online.backward(cache, dq, grad);
    nn::clip_grad_norm(grad, dqn.max_grad_norm);
    opt.step(online.params(), grad);
    if (++updates % dqn.sync_interval == 0) target = online;
  }

  result.q_net = online;
  std::tie(result.greedy_rollout, result.completion) = run_greedy(online, config, goal, dqn.step_length, dqn.substeps);
  return result;
}

inline void store(nn::Checkpoint& ckpt, const nn::Mlp& q_net, double step_length) {
  nn::store(ckpt, "q", q_net);
  nn::store(ckpt, "q/step_length", Eigen::VectorXd::Constant(1, step_length));
}

}  // namespace harvest

#endif  // HARVEST_BASELINES_HPP_
