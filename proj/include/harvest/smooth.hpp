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

// Adversarial policy smoothing. An adversary network proposes an observation
// inside an l-infinity ball that moves the actor's output as far as possible;
// the actor is then penalized for that divergence as an auxiliary loss.
//
// Perturbations touch only the physical part of the observation (positions
// and harvested data), never the elapsed-time entry.

#ifndef HARVEST_SMOOTH_HPP_
#define HARVEST_SMOOTH_HPP_

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "harvest/nn.hpp"
#include "harvest/ppo.hpp"

namespace harvest {

enum class Divergence { kMeanSquaredAction, kGaussianKl };

inline Divergence parse_divergence(const std::string& s) {
  if (s == "mean-squared-action" || s == "mse") return Divergence::kMeanSquaredAction;
  if (s == "gaussian-kl" || s == "kl") return Divergence::kGaussianKl;
  throw std::invalid_argument("unknown divergence \"" + s + "\"");
}

/// l-infinity ball of the given radius in normalized observation units.
struct PerturbationSet {
  double radius = 0.05;

  bool contains(const Eigen::VectorXd& x, const Eigen::VectorXd& x_hat) const {
    return (x - x_hat).cwiseAbs().maxCoeff() <= radius * (1.0 + 1e-12);
  }
};

struct SmoothConfig {
  double weight = 0.5;
  int adversary_steps = 5;
  double adversary_lr = 1e-3;
  Divergence divergence = Divergence::kMeanSquaredAction;
  double epsilon = 0.05;
  std::vector<int> hidden{64, 64};

  void validate() const {
    if (!(weight >= 0.0)) throw std::invalid_argument("smoothing weight must be >= 0");
    if (adversary_steps < 1) throw std::invalid_argument("adversary_steps must be >= 1");
    if (!(epsilon > 0.0)) throw std::invalid_argument("perturbation radius must be > 0");
  }
};

/// Maps an observation to a raw perturbation of its first `state_dim` entries.
struct Adversary {
  nn::Mlp net;

  int state_dim() const { return net.output_dim(); }
};

inline Adversary make_adversary(int obs_dim, int state_dim, const std::vector<int>& hidden,
                                std::mt19937_64& rng) {
  std::vector<int> widths{obs_dim};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(state_dim);
  Adversary a{nn::Mlp(widths)};
  a.net.init(rng, 1.0);
  return a;
}

/// x_hat = x + eps * tanh(raw) on the state entries; the rest pass through.
/// Optionally returns the adversary's forward cache and tanh(raw).
inline Eigen::MatrixXd perturb(const Adversary& adv, const Eigen::MatrixXd& x, double eps,
                               nn::Mlp::Cache* cache = nullptr, Eigen::MatrixXd* squashed = nullptr) {
  const Eigen::MatrixXd t = adv.net.forward_batch(x, cache).array().tanh().matrix();
  Eigen::MatrixXd x_hat = x;
  x_hat.topRows(adv.state_dim()) += eps * t;
  if (squashed) *squashed = t;
  return x_hat;
}

inline Eigen::VectorXd perturb(const Adversary& adv, const Eigen::VectorXd& x, double eps) {
  return perturb(adv, Eigen::MatrixXd(x), eps).col(0);
}

/// Per-sample divergence between the actor's distributions at two inputs,
/// given the two mean outputs. Also returns d/d(mean_a) (d/d(mean_b) is its
/// negation) and d/d(log_std), each scaled by `scale`.
struct DivergenceTerms {
  double value = 0.0;
  Eigen::MatrixXd d_mean_a;
  Eigen::VectorXd d_log_std;
};

inline DivergenceTerms divergence_terms(Divergence kind, const Eigen::MatrixXd& mean_a,
                                        const Eigen::MatrixXd& mean_b, const Eigen::VectorXd& log_std,
                                        double scale) {
  DivergenceTerms out;
  const Eigen::MatrixXd diff = mean_a - mean_b;
  if (kind == Divergence::kMeanSquaredAction) {
    out.value = diff.squaredNorm();
    out.d_mean_a = 2.0 * scale * diff;
    out.d_log_std = Eigen::VectorXd::Zero(log_std.size());
  } else {
    // Shared state-independent std: KL = sum (mu_a - mu_b)^2 / (2 sigma^2).
    const Eigen::ArrayXd inv_var = (-2.0 * log_std.array()).exp();
    out.value = 0.5 * (diff.array().square().colwise() * inv_var).sum();
    out.d_mean_a = scale * (diff.array().colwise() * inv_var).matrix();
    out.d_log_std = -scale * (diff.array().square().rowwise().sum() * inv_var).matrix();
  }
  out.value *= scale;
  return out;
}

/// Mean divergence over the batch between pi(.|x) and pi(.|x_hat).
inline double mean_divergence(const Actor& actor, const Eigen::MatrixXd& x, const Eigen::MatrixXd& x_hat,
                              Divergence kind) {
  const auto a = actor.mean_net.forward_batch(x);
  const auto b = actor.mean_net.forward_batch(x_hat);
  return divergence_terms(kind, a, b, actor.head.log_std, 1.0 / x.cols()).value;
}

struct AdversaryStats {
  double divergence_before = 0.0;
  double divergence_after = 0.0;
};

/// Gradient ascent on the batch-mean divergence with respect to the adversary
/// only. The actor is read-only here.
inline AdversaryStats adversary_update(Adversary& adv, nn::Adam& opt, const Actor& actor,
                                       const Eigen::MatrixXd& states, const SmoothConfig& config) {
  if (states.cols() == 0) throw std::invalid_argument("adversary_update needs a non-empty batch");
  const double scale = 1.0 / states.cols();
  const Eigen::MatrixXd clean = actor.mean_net.forward_batch(states);
  Eigen::VectorXd actor_scratch(actor.mean_net.param_count());
  AdversaryStats stats;
  for (int s = 0; s <= config.adversary_steps; ++s) {
    nn::Mlp::Cache adv_cache;
    Eigen::MatrixXd t;
    const Eigen::MatrixXd x_hat = perturb(adv, states, config.epsilon, &adv_cache, &t);
    nn::Mlp::Cache actor_cache;
    const Eigen::MatrixXd noisy = actor.mean_net.forward_batch(x_hat, &actor_cache);
    auto terms = divergence_terms(config.divergence, clean, noisy, actor.head.log_std, scale);
    if (!std::isfinite(terms.value)) throw nn::NumericalError(-1, "adversary divergence");
    if (s == 0) stats.divergence_before = terms.value;
    stats.divergence_after = terms.value;
    if (s == config.adversary_steps) break;
    // d D / d noisy = -d_mean_a; ascend, so descend on -D.
    actor_scratch.setZero();
    const Eigen::MatrixXd d_x_hat = actor.mean_net.backward(actor_cache, terms.d_mean_a, actor_scratch);
    const Eigen::MatrixXd d_raw =
        (d_x_hat.topRows(adv.state_dim()).array() * config.epsilon * (1.0 - t.array().square())).matrix();
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(adv.net.param_count());
    // -(dD/dnoisy) = d_mean_a, so this backward already yields d(-D)/d(phi).
    adv.net.backward(adv_cache, d_raw, grad);
    opt.step(adv.net.params(), grad);
  }
  return stats;
}

/// Batch-mean divergence between the actor at x and at the adversary's x_hat,
/// weighted by `weight`. Adds d/d(theta) into the two gradient buffers; the
/// adversary is read-only.
inline double regularizer(const Actor& actor, const Adversary& adv, const Eigen::MatrixXd& states, Divergence kind,
                          double eps, double weight, Eigen::VectorXd* mean_net_grad = nullptr,
                          Eigen::VectorXd* log_std_grad = nullptr) {
  const Eigen::MatrixXd x_hat = perturb(adv, states, eps);
  nn::Mlp::Cache clean_cache;
  nn::Mlp::Cache noisy_cache;
  const Eigen::MatrixXd clean = actor.mean_net.forward_batch(states, &clean_cache);
  const Eigen::MatrixXd noisy = actor.mean_net.forward_batch(x_hat, &noisy_cache);
  const auto terms = divergence_terms(kind, clean, noisy, actor.head.log_std, weight / states.cols());
  if (mean_net_grad) {
    actor.mean_net.backward(clean_cache, terms.d_mean_a, *mean_net_grad);
    actor.mean_net.backward(noisy_cache, -terms.d_mean_a, *mean_net_grad);
  }
  if (log_std_grad) *log_std_grad += terms.d_log_std;
  return terms.value;
}

/// Mean divergence under uniform noise in the same ball, for comparison
/// against a trained adversary.
inline double random_perturbation_divergence(const Actor& actor, const Eigen::MatrixXd& states, int state_dim,
                                             double eps, Divergence kind, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-eps, eps);
  Eigen::MatrixXd x_hat = states;
  for (Eigen::Index c = 0; c < states.cols(); ++c)
    for (int r = 0; r < state_dim; ++r) x_hat(r, c) += u(rng);
  return mean_divergence(actor, states, x_hat, kind);
}

inline Eigen::MatrixXd batch_observations(const std::vector<Trajectory>& batch) {
  int total = 0;
  for (const auto& t : batch) total += t.steps();
  Eigen::MatrixXd obs(batch.front().records.front().observation.size(), total);
  int col = 0;
  for (const auto& t : batch)
    for (const auto& r : t.records) obs.col(col++) = r.observation;
  return obs;
}

struct SmoothResult {
  TrainResult policy;
  Adversary adversary;
};

/// PPO with the smoothing regularizer. Each learning step collects a batch,
/// trains the adversary on it against the current actor, then runs the PPO
/// update with the regularizer added to the actor loss.
inline SmoothResult train_smooth(const ScenarioConfig& scenario, const PpoConfig& ppo_config,
                                 const SmoothConfig& smooth_config, std::uint64_t seed,
                                 const std::function<void(int, const CurvePoint&)>& progress = {}) {
  smooth_config.validate();
  PpoTrainer trainer(scenario, ppo_config, seed);
  const ObservationScaler scaler(scenario);
  std::mt19937_64 rng(mix_seed(seed, 0xAD5E));
  Adversary adv = make_adversary(scaler.dim(), scaler.state_dim(), smooth_config.hidden, rng);
  nn::Adam adv_opt(smooth_config.adversary_lr);
  for (int k = 0; k < ppo_config.learning_steps; ++k) {
    const auto batch = trainer.collect();
    adversary_update(adv, adv_opt, trainer.actor(), batch_observations(batch), smooth_config);
    trainer.update(batch, [&](const Eigen::MatrixXd& obs, Eigen::VectorXd& g_mean, Eigen::VectorXd& g_log_std) {
      return regularizer(trainer.actor(), adv, obs, smooth_config.divergence, smooth_config.epsilon,
                         smooth_config.weight, &g_mean, &g_log_std);
    });
    if (progress) progress(k, trainer.curve().back());
  }
  return {trainer.result(), adv};
}

/// Fits an adversary against a frozen actor on states from its own
/// stochastic rollouts. Used to attack policies that were trained without
/// one.
inline Adversary train_attack(const Actor& actor, const ScenarioConfig& scenario, const PpoConfig& ppo_config,
                              const SmoothConfig& smooth_config, std::uint64_t seed, int rounds = 40) {
  const ObservationScaler scaler(scenario);
  std::mt19937_64 rng(mix_seed(seed, 0xA77AC));
  Adversary adv = make_adversary(scaler.dim(), scaler.state_dim(), smooth_config.hidden, rng);
  nn::Adam opt(smooth_config.adversary_lr);
  GoalSpec goal = GoalSpec::from(scenario);
  goal.position_tolerance = ppo_config.position_tolerance;
  goal.data_tolerance = ppo_config.data_tolerance;
  Critic dummy{nn::Mlp({scaler.dim(), 1})};
  for (int r = 0; r < rounds; ++r) {
    const auto batch = collect_rollouts(scenario, goal, actor, dummy, ppo_config, 512,
                                        mix_seed(seed, 0xA77AC, static_cast<std::uint64_t>(r)));
    adversary_update(adv, opt, actor, batch_observations(batch), smooth_config);
  }
  return adv;
}

inline void store(nn::Checkpoint& ckpt, const Adversary& adv) { nn::store(ckpt, "adversary", adv.net); }

inline Adversary restore_adversary(const nn::Checkpoint& ckpt) { return {nn::restore_mlp(ckpt, "adversary")}; }

}  // namespace harvest

#endif  // HARVEST_SMOOTH_HPP_
