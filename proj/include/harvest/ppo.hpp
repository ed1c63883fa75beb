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

// Clipped-surrogate PPO over the joint polar action of all agents. The actor
// emits the mean of a diagonal Gaussian over raw (unbounded) commands, which
// `squash` maps into the admissible speed/heading set.

#ifndef HARVEST_PPO_HPP_
#define HARVEST_PPO_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "harvest/env.hpp"
#include "harvest/nn.hpp"
#include "harvest/scenario.hpp"

namespace harvest {

enum class PenaltyScheme { kLagrangian, kLargeTerminal, kNone };

inline std::string to_string(PenaltyScheme s) {
  switch (s) {
    case PenaltyScheme::kLagrangian: return "lagrangian";
    case PenaltyScheme::kLargeTerminal: return "large-terminal";
    case PenaltyScheme::kNone: return "none";
  }
  return "?";
}

inline PenaltyScheme parse_scheme(const std::string& s) {
  if (s == "lagrangian") return PenaltyScheme::kLagrangian;
  if (s == "large-terminal" || s == "large") return PenaltyScheme::kLargeTerminal;
  if (s == "none") return PenaltyScheme::kNone;
  throw std::invalid_argument("unknown reward scheme \"" + s + "\" (lagrangian | large-terminal | none)");
}

struct PpoConfig {
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_ratio = 0.2;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  int epochs = 10;
  int minibatch_size = 64;
  // Environment steps gathered per learning step (whole episodes, so the
  // batch may run slightly over).
  int rollout_steps = 2048;
  double actor_lr = 3e-4;
  double critic_lr = 3e-4;
  int learning_steps = 600;
  PenaltyScheme scheme = PenaltyScheme::kLagrangian;
  // Charged to every unsuccessful episode under kLargeTerminal.
  double large_penalty = 200.0;
  // Fold the terminal penalty as lambda^T f / gamma^(N-1) instead of the
  // plain undiscounted add at the final step.
  bool discount_corrected_penalty = false;
  std::array<double, 2> multipliers{2.0, 2.0};
  // Looser than the environment default; see the README.
  double position_tolerance = 0.2;
  double data_tolerance = 0.01;
  // Rewards are multiplied by this before the critic sees them; advantages
  // are normalized per batch so the policy gradient is unaffected.
  double reward_scale = 0.05;
  double max_grad_norm = 0.5;
  double init_std = 0.5;
  std::vector<int> hidden{64, 64};
  int substeps = 10;
  // Stop the epoch loop once the approximate KL exceeds this (0 disables).
  double target_kl = 0.0;

  void validate() const {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in (0, 1]");
    if (!(clip_ratio > 0.0 && clip_ratio < 1.0)) throw std::invalid_argument("clip_ratio must lie in (0, 1)");
    if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw std::invalid_argument("gae_lambda must lie in [0, 1]");
    if (epochs < 1 || minibatch_size < 1 || rollout_steps < 1 || learning_steps < 0)
      throw std::invalid_argument("epochs, minibatch_size and rollout_steps must be positive");
    if (substeps < 1) throw std::invalid_argument("substeps must be >= 1");
  }
};

/// Wraps an angle into [0, 2 pi).
inline double wrap_angle(double a) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double w = std::fmod(a, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w = 0.0;
  return w;
}

/// Raw (u_rho, u_alpha) per agent -> admissible polar command:
/// rho = rho_max (1 + tanh u_rho) / 2, alpha = u_alpha wrapped to [0, 2 pi).
inline JointAction squash(const Eigen::VectorXd& raw, const ScenarioConfig& config) {
  if (raw.size() != 2 * config.num_agents()) throw ContractViolation("raw action has the wrong length");
  JointAction a(config.num_agents());
  for (int j = 0; j < config.num_agents(); ++j) {
    const double rho_max = config.agents[j].max_speed;
    a[j].speed = std::clamp(rho_max * 0.5 * (1.0 + std::tanh(raw[2 * j])), 0.0, rho_max);
    a[j].heading = wrap_angle(raw[2 * j + 1]);
  }
  return a;
}

struct Actor {
  nn::Mlp mean_net;
  nn::GaussianHead head;

  Eigen::VectorXd mean(const Eigen::VectorXd& obs) const { return mean_net.forward(obs); }
};

struct Critic {
  nn::Mlp net;

  double value(const Eigen::VectorXd& obs) const { return net.forward(obs)[0]; }
};

inline Actor make_actor(int obs_dim, int act_dim, const std::vector<int>& hidden, double init_std,
                        std::mt19937_64& rng) {
  std::vector<int> widths{obs_dim};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(act_dim);
  Actor a{nn::Mlp(widths), nn::GaussianHead(act_dim, init_std)};
  a.mean_net.init(rng, 0.01);
  return a;
}

inline Critic make_critic(int obs_dim, const std::vector<int>& hidden, std::mt19937_64& rng) {
  std::vector<int> widths{obs_dim};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(1);
  Critic c{nn::Mlp(widths)};
  c.net.init(rng, 1.0);
  return c;
}

struct StepRecord {
  Eigen::VectorXd observation;
  Eigen::VectorXd raw_action;
  double log_prob = 0.0;
  double reward = 0.0;
  double value = 0.0;
};

struct Trajectory {
  std::vector<StepRecord> records;
  Rollout rollout;
  double terminal_penalty = 0.0;
  bool success = false;

  int steps() const { return static_cast<int>(records.size()); }
  double undiscounted_return() const {
    double r = 0.0;
    for (const auto& s : records) r += s.reward;
    return r;
  }
};

/// Adds the scheme's terminal charge to the last recorded reward.
inline void fold_terminal_penalty(Trajectory& traj, const PpoConfig& config) {
  if (traj.records.empty()) return;
  double& last = traj.records.back().reward;
  switch (config.scheme) {
    case PenaltyScheme::kLagrangian: {
      double p = traj.terminal_penalty;
      if (config.discount_corrected_penalty)
        p /= std::pow(config.gamma, static_cast<double>(traj.steps() - 1));
      last -= p;
      break;
    }
    case PenaltyScheme::kLargeTerminal:
      if (!traj.success) last -= config.large_penalty;
      break;
    case PenaltyScheme::kNone:
      break;
  }
}

/// Derives an independent stream for (seed, a, b) so results do not depend on
/// how episodes are scheduled.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

/// Runs one stochastic episode. Rewards are raw (-1 per step) with the
/// scheme's terminal charge folded into the final step.
inline Trajectory collect_episode(Environment& env, const Actor& actor, const Critic& critic,
                                  const PpoConfig& config, std::mt19937_64& rng) {
  Trajectory traj;
  env.reset();
  traj.rollout.states.push_back(env.state());
  StepOutcome last;
  while (!env.done()) {
    StepRecord rec;
    rec.observation = env.observe();
    const Eigen::VectorXd mean = actor.mean(rec.observation);
    auto sample = nn::sample_and_logprob(actor.head, mean, rng);
    rec.raw_action = std::move(sample.action);
    rec.log_prob = sample.log_prob;
    rec.value = critic.value(rec.observation);
    JointAction a = squash(rec.raw_action, env.config());
    last = env.step(a);
    rec.reward = last.reward;
    traj.records.push_back(std::move(rec));
    traj.rollout.actions.push_back(std::move(a));
    traj.rollout.states.push_back(env.state());
  }
  traj.success = last.success;
  traj.terminal_penalty = last.terminal_penalty;
  fold_terminal_penalty(traj, config);
  return traj;
}

/// Collects whole episodes until at least `min_steps` transitions exist.
/// Episode k draws its noise from mix_seed(seed, k).
inline std::vector<Trajectory> collect_rollouts(const ScenarioConfig& scenario, const GoalSpec& goal,
                                                const Actor& actor, const Critic& critic,
                                                const PpoConfig& config, int min_steps, std::uint64_t seed) {
  Environment env(scenario, goal, config.substeps);
  std::vector<Trajectory> out;
  int steps = 0;
  for (std::uint64_t k = 0; steps < min_steps; ++k) {
    std::mt19937_64 rng(mix_seed(seed, k));
    out.push_back(collect_episode(env, actor, critic, config, rng));
    steps += out.back().steps();
  }
  return out;
}

struct AdvantageEstimate {
  Eigen::VectorXd advantages;
  Eigen::VectorXd targets;
};

/// Generalized advantage estimation with a zero bootstrap after the last
/// step. `reward_scale` multiplies every reward first.
inline AdvantageEstimate gae(const Trajectory& traj, double gamma, double lambda, double reward_scale = 1.0) {
  const int n = traj.steps();
  AdvantageEstimate est{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
  double running = 0.0;
  for (int t = n - 1; t >= 0; --t) {
    const double next_value = (t + 1 < n) ? traj.records[t + 1].value : 0.0;
    const double delta = reward_scale * traj.records[t].reward + gamma * next_value - traj.records[t].value;
    running = delta + gamma * lambda * running;
    est.advantages[t] = running;
  }
  for (int t = 0; t < n; ++t) est.targets[t] = est.advantages[t] + traj.records[t].value;
  return est;
}

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  double regularizer = 0.0;
  int minibatches = 0;
};

/// Optional extra actor loss evaluated per minibatch of observations. Adds
/// its gradient into (mean_net_grad, log_std_grad) and returns its value.
using ActorRegularizer =
    std::function<double(const Eigen::MatrixXd& observations, Eigen::VectorXd& mean_net_grad,
                         Eigen::VectorXd& log_std_grad)>;

/// Flattened training batch.
struct PpoBatch {
  Eigen::MatrixXd observations;
  Eigen::MatrixXd raw_actions;
  Eigen::VectorXd old_log_probs;
  Eigen::VectorXd advantages;
  Eigen::VectorXd targets;

  int size() const { return static_cast<int>(old_log_probs.size()); }
};

inline PpoBatch make_batch(const std::vector<Trajectory>& trajectories, const PpoConfig& config,
                           bool normalize_advantages = true) {
  if (trajectories.empty()) throw std::invalid_argument("empty PPO batch");
  int total = 0;
  for (const auto& t : trajectories) total += t.steps();
  if (total == 0) throw std::invalid_argument("empty PPO batch");
  const auto& first = trajectories.front().records.front();
  PpoBatch b;
  b.observations.resize(first.observation.size(), total);
  b.raw_actions.resize(first.raw_action.size(), total);
  b.old_log_probs.resize(total);
  b.advantages.resize(total);
  b.targets.resize(total);
  int col = 0;
  for (const auto& t : trajectories) {
    const auto est = gae(t, config.gamma, config.gae_lambda, config.reward_scale);
    for (int k = 0; k < t.steps(); ++k, ++col) {
      b.observations.col(col) = t.records[k].observation;
      b.raw_actions.col(col) = t.records[k].raw_action;
      b.old_log_probs[col] = t.records[k].log_prob;
      b.advantages[col] = est.advantages[k];
      b.targets[col] = est.targets[k];
    }
  }
  if (normalize_advantages && total > 1) {
    const double mean = b.advantages.mean();
    const double sd = std::sqrt((b.advantages.array() - mean).square().sum() / (total - 1));
    b.advantages = (b.advantages.array() - mean) / (sd + 1e-8);
  }
  return b;
}

struct LossBreakdown {
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;
  double total() const { return policy + value; }
};

/// Actor/critic losses and their gradients on the columns `idx` of a batch.
/// Gradients are written (not added) into the given buffers.
struct PpoGradients {
  Eigen::VectorXd mean_net;
  Eigen::VectorXd log_std;
  Eigen::VectorXd critic;
  LossBreakdown loss;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
};

inline PpoGradients ppo_loss_and_grad(const Actor& actor, const Critic& critic, const PpoBatch& batch,
                                      const std::vector<int>& idx, const PpoConfig& config) {
  const int m = static_cast<int>(idx.size());
  const int obs_dim = static_cast<int>(batch.observations.rows());
  const int act_dim = static_cast<int>(batch.raw_actions.rows());
  Eigen::MatrixXd obs(obs_dim, m);
  Eigen::MatrixXd act(act_dim, m);
  for (int c = 0; c < m; ++c) {
    obs.col(c) = batch.observations.col(idx[c]);
    act.col(c) = batch.raw_actions.col(idx[c]);
  }

  PpoGradients g;
  g.mean_net = Eigen::VectorXd::Zero(actor.mean_net.param_count());
  g.log_std = Eigen::VectorXd::Zero(act_dim);
  g.critic = Eigen::VectorXd::Zero(critic.net.param_count());

  nn::Mlp::Cache cache;
  const Eigen::MatrixXd mean = actor.mean_net.forward_batch(obs, &cache);
  const Eigen::ArrayXd log_std = actor.head.log_std.array();
  const Eigen::ArrayXd inv_var = (-2.0 * log_std).exp();
  Eigen::MatrixXd d_mean(act_dim, m);
  const double lo = 1.0 - config.clip_ratio;
  const double hi = 1.0 + config.clip_ratio;
  for (int c = 0; c < m; ++c) {
    const int k = idx[c];
    const Eigen::ArrayXd diff = (act.col(c) - mean.col(c)).array();
    const double logp = (-0.5 * diff.square() * inv_var - log_std - nn::kLogSqrt2Pi).sum();
    const double log_ratio = logp - batch.old_log_probs[k];
    const double ratio = std::exp(log_ratio);
    const double adv = batch.advantages[k];
    const double unclipped = ratio * adv;
    const double clipped = std::clamp(ratio, lo, hi) * adv;
    g.loss.policy -= std::min(unclipped, clipped) / m;
    g.approx_kl += ((ratio - 1.0) - log_ratio) / m;
    if (ratio < lo || ratio > hi) g.clip_fraction += 1.0 / m;
    // The min picks the unclipped branch exactly when it is the smaller one;
    // only then does the sample carry a gradient.
    const double coeff = (unclipped <= clipped) ? -adv * ratio / m : 0.0;
    d_mean.col(c) = (coeff * diff * inv_var).matrix();
    g.log_std += (coeff * (diff.square() * inv_var - 1.0)).matrix();
  }
  g.loss.entropy = nn::gaussian_entropy(actor.head.log_std);
  g.loss.policy -= config.entropy_coef * g.loss.entropy;
  g.log_std.array() -= config.entropy_coef;
  actor.mean_net.backward(cache, d_mean, g.mean_net);

  nn::Mlp::Cache vcache;
  const Eigen::MatrixXd values = critic.net.forward_batch(obs, &vcache);
  Eigen::MatrixXd d_value(1, m);
  for (int c = 0; c < m; ++c) {
    const double err = values(0, c) - batch.targets[idx[c]];
    g.loss.value += config.value_coef * err * err / m;
    d_value(0, c) = config.value_coef * 2.0 * err / m;
  }
  critic.net.backward(vcache, d_value, g.critic);
  return g;
}

/// Adam state for one actor-critic pair.
struct PpoOptimizers {
  nn::Adam mean_net;
  nn::Adam log_std;
  nn::Adam critic;

  explicit PpoOptimizers(const PpoConfig& c) : mean_net(c.actor_lr), log_std(c.actor_lr), critic(c.critic_lr) {}
};

/// Clipped-surrogate update over `epochs` shuffled passes. Throws
/// nn::NumericalError (with diagnostics) if a loss goes non-finite.
inline UpdateStats ppo_update(const PpoBatch& batch, Actor& actor, Critic& critic, PpoOptimizers& opt,
                              const PpoConfig& config, std::mt19937_64& rng,
                              const ActorRegularizer& regularizer = {}) {
  if (batch.size() == 0) throw std::invalid_argument("empty PPO batch");
  UpdateStats stats;
  std::vector<int> order(batch.size());
  std::iota(order.begin(), order.end(), 0);
  const int mb = std::min(config.minibatch_size, batch.size());
  bool stop = false;
  for (int epoch = 0; epoch < config.epochs && !stop; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_kl = 0.0;
    int epoch_batches = 0;
    for (int start = 0; start + mb <= batch.size(); start += mb) {
      std::vector<int> idx(order.begin() + start, order.begin() + start + mb);
      PpoGradients g = ppo_loss_and_grad(actor, critic, batch, idx, config);
      double reg = 0.0;
      if (regularizer) {
        Eigen::MatrixXd obs(batch.observations.rows(), mb);
        for (int c = 0; c < mb; ++c) obs.col(c) = batch.observations.col(idx[c]);
        reg = regularizer(obs, g.mean_net, g.log_std);
      }
      if (!std::isfinite(g.loss.policy) || !std::isfinite(g.loss.value) || !std::isfinite(reg))
        throw nn::NumericalError(-1, "PPO loss: policy=" + std::to_string(g.loss.policy) +
                                         " value=" + std::to_string(g.loss.value) +
                                         " regularizer=" + std::to_string(reg));
      // One global norm over all actor parameters.
      const double actor_norm = std::sqrt(g.mean_net.squaredNorm() + g.log_std.squaredNorm());
      if (config.max_grad_norm > 0.0 && actor_norm > config.max_grad_norm) {
        const double s = config.max_grad_norm / actor_norm;
        g.mean_net *= s;
        g.log_std *= s;
      }
      nn::clip_grad_norm(g.critic, config.max_grad_norm);
      opt.mean_net.step(actor.mean_net.params(), g.mean_net);
      opt.log_std.step(actor.head.log_std, g.log_std);
      opt.critic.step(critic.net.params(), g.critic);

      stats.policy_loss += g.loss.policy;
      stats.value_loss += g.loss.value;
      stats.entropy += g.loss.entropy;
      stats.approx_kl += g.approx_kl;
      stats.clip_fraction += g.clip_fraction;
      stats.regularizer += reg;
      ++stats.minibatches;
      epoch_kl += g.approx_kl;
      ++epoch_batches;
    }
    if (config.target_kl > 0.0 && epoch_batches > 0 && epoch_kl / epoch_batches > 1.5 * config.target_kl)
      stop = true;
  }
  if (stats.minibatches > 0) {
    const double n = stats.minibatches;
    stats.policy_loss /= n;
    stats.value_loss /= n;
    stats.entropy /= n;
    stats.approx_kl /= n;
    stats.clip_fraction /= n;
    stats.regularizer /= n;
  }
  return stats;
}

/// Mean action with no sampling, squashed into the admissible set.
inline JointAction deterministic_action(const Actor& actor, const Eigen::VectorXd& observation,
                                        const ScenarioConfig& config) {
  return squash(actor.mean(observation), config);
}

/// Test-time policy: State -> JointAction through the mean of the actor.
inline std::function<JointAction(const State&)> deterministic_policy(Actor actor, const ScenarioConfig& config) {
  ObservationScaler scaler(config);
  return [actor = std::move(actor), scaler, config](const State& s) {
    return deterministic_action(actor, scaler(s), config);
  };
}

struct CurvePoint {
  int learning_step = 0;
  double mean_steps = 0.0;
  double std_steps = 0.0;
  double success_rate = 0.0;
};

struct PolicyEvaluation {
  Rollout rollout;
  int steps = 0;
  bool success = false;
  CompletionEstimate completion;
};

/// Runs the deterministic policy once from the start state.
inline PolicyEvaluation evaluate_deterministic(const Actor& actor, const ScenarioConfig& scenario,
                                               const GoalSpec& goal, int substeps = 10) {
  Environment env(scenario, goal, substeps);
  PolicyEvaluation ev;
  ev.rollout = run_episode(env, [&](const Environment& e) { return deterministic_action(actor, e.observe(), scenario); });
  ev.steps = static_cast<int>(ev.rollout.actions.size());
  ev.success = is_terminal(env.state(), goal);
  ev.completion = expected_completion_time(scenario, env.state(), goal, ev.steps);
  return ev;
}

struct TrainResult {
  Actor actor;
  Critic critic;
  std::vector<CurvePoint> curve;
  UpdateStats last_update;
};

/// Incremental trainer: one `iterate()` = collect a batch, then update.
class PpoTrainer {
 public:
  PpoTrainer(ScenarioConfig scenario, PpoConfig config, std::uint64_t seed)
      : scenario_(std::move(scenario)),
        config_(std::move(config)),
        goal_(GoalSpec::from(scenario_)),
        seed_(seed),
        rng_(mix_seed(seed, 0xC0FFEE)),
        opt_(config_) {
    config_.validate();
    auto report = harvest::validate(scenario_);
    if (!report.ok()) throw ValidationError(report);
    goal_.multipliers = config_.multipliers;
    goal_.position_tolerance = config_.position_tolerance;
    goal_.data_tolerance = config_.data_tolerance;
    const int obs_dim = ObservationScaler(scenario_).dim();
    const int act_dim = 2 * scenario_.num_agents();
    std::mt19937_64 init_rng(mix_seed(seed, 0x1417));
    actor_ = make_actor(obs_dim, act_dim, config_.hidden, config_.init_std, init_rng);
    critic_ = make_critic(obs_dim, config_.hidden, init_rng);
  }

  std::vector<Trajectory> collect() {
    return collect_rollouts(scenario_, goal_, actor_, critic_, config_, config_.rollout_steps,
                            mix_seed(seed_, 0xB47C4, static_cast<std::uint64_t>(step_)));
  }

  /// Records the curve point for `batch` and runs one PPO update on it.
  UpdateStats update(const std::vector<Trajectory>& batch, const ActorRegularizer& regularizer = {}) {
    record(batch);
    last_ = ppo_update(make_batch(batch, config_), actor_, critic_, opt_, config_, rng_, regularizer);
    ++step_;
    return last_;
  }

  UpdateStats iterate() { return update(collect()); }

  TrainResult result() const { return {actor_, critic_, curve_, last_}; }

  Actor& actor() { return actor_; }
  const Actor& actor() const { return actor_; }
  Critic& critic() { return critic_; }
  const ScenarioConfig& scenario() const { return scenario_; }
  const GoalSpec& goal() const { return goal_; }
  const PpoConfig& config() const { return config_; }
  const std::vector<CurvePoint>& curve() const { return curve_; }
  int learning_step() const { return step_; }

 private:
  void record(const std::vector<Trajectory>& batch) {
    CurvePoint p;
    p.learning_step = step_;
    std::vector<double> steps;
    int ok = 0;
    for (const auto& t : batch) {
      steps.push_back(t.success ? t.steps() : scenario_.n_max);
      ok += t.success ? 1 : 0;
    }
    const double n = static_cast<double>(steps.size());
    p.mean_steps = std::accumulate(steps.begin(), steps.end(), 0.0) / n;
    double ss = 0.0;
    for (double s : steps) ss += (s - p.mean_steps) * (s - p.mean_steps);
    p.std_steps = steps.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    p.success_rate = ok / n;
    curve_.push_back(p);
  }

  ScenarioConfig scenario_;
  PpoConfig config_;
  GoalSpec goal_;
  std::uint64_t seed_;
  std::mt19937_64 rng_;
  Actor actor_;
  Critic critic_;
  PpoOptimizers opt_;
  std::vector<CurvePoint> curve_;
  UpdateStats last_;
  int step_ = 0;
};

/// Full PPO run: `config.learning_steps` collect/update cycles.
inline TrainResult train(const ScenarioConfig& scenario, const PpoConfig& config, std::uint64_t seed,
                         const std::function<void(int, const CurvePoint&)>& progress = {}) {
  PpoTrainer trainer(scenario, config, seed);
  for (int k = 0; k < config.learning_steps; ++k) {
    trainer.iterate();
    if (progress) progress(k, trainer.curve().back());
  }
  return trainer.result();
}

// Checkpoint keys: "actor/mean", "actor/log_std", "critic".
inline void store(nn::Checkpoint& ckpt, const Actor& actor, const Critic& critic) {
  nn::store(ckpt, "actor/mean", actor.mean_net);
  nn::store(ckpt, "actor/log_std", actor.head.log_std);
  nn::store(ckpt, "critic", critic.net);
}

inline Actor restore_actor(const nn::Checkpoint& ckpt) {
  Actor a;
  a.mean_net = nn::restore_mlp(ckpt, "actor/mean");
  a.head.log_std = nn::restore_vector(ckpt, "actor/log_std");
  return a;
}

inline Critic restore_critic(const nn::Checkpoint& ckpt) { return Critic{nn::restore_mlp(ckpt, "critic")}; }

}  // namespace harvest

#endif  // HARVEST_PPO_HPP_
