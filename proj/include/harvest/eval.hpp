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

// Evaluation under observation noise. The environment always advances from
// the true state; only what the policy sees is perturbed.

#ifndef HARVEST_EVAL_HPP_
#define HARVEST_EVAL_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "harvest/env.hpp"
#include "harvest/ppo.hpp"
#include "harvest/smooth.hpp"

namespace harvest {

enum class NoiseKind { kNone, kRandom, kAdversarial };

inline std::string to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::kNone: return "none";
    case NoiseKind::kRandom: return "random";
    case NoiseKind::kAdversarial: return "adversarial";
  }
  return "?";
}

inline NoiseKind parse_noise_kind(const std::string& s) {
  if (s == "none") return NoiseKind::kNone;
  if (s == "random") return NoiseKind::kRandom;
  if (s == "adversarial" || s == "adv") return NoiseKind::kAdversarial;
  throw std::invalid_argument("unknown noise kind \"" + s + "\"");
}

struct NoiseSpec {
  NoiseKind kind = NoiseKind::kNone;
  // Radius in normalized observation units.
  double epsilon = 0.0;
  std::optional<Adversary> adversary;

  void validate() const {
    if (!(epsilon >= 0.0)) throw std::invalid_argument("noise epsilon must be >= 0");
    if (kind == NoiseKind::kAdversarial && !adversary)
      throw std::invalid_argument("adversarial noise needs an adversary checkpoint");
  }
};

/// Perturbs the first `state_dim` entries of a normalized observation.
inline Eigen::VectorXd perturb_observation(const Eigen::VectorXd& obs, int state_dim, const NoiseSpec& noise,
                                           std::mt19937_64& rng) {
  switch (noise.kind) {
    case NoiseKind::kNone:
      return obs;
    case NoiseKind::kRandom: {
      Eigen::VectorXd out = obs;
      if (noise.epsilon == 0.0) return out;
      std::uniform_real_distribution<double> u(-noise.epsilon, noise.epsilon);
      for (int r = 0; r < state_dim; ++r) out[r] += u(rng);
      return out;
    }
    case NoiseKind::kAdversarial:
      if (!noise.adversary) throw std::invalid_argument("adversarial noise needs an adversary checkpoint");
      if (noise.adversary->state_dim() != state_dim) throw nn::ShapeError("adversary does not match scenario");
      return perturb(*noise.adversary, obs, noise.epsilon);
  }
  return obs;
}

/// Deterministic policy acting on a (possibly perturbed) normalized observation.
using ObservationPolicy = std::function<JointAction(const Eigen::VectorXd&)>;

inline ObservationPolicy actor_policy(Actor actor, const ScenarioConfig& scenario) {
  return [actor = std::move(actor), scenario](const Eigen::VectorXd& obs) {
    return deterministic_action(actor, obs, scenario);
  };
}

struct EvalReport {
  std::vector<double> times;
  std::vector<bool> successes;
  double mean = 0.0;
  // Sample standard deviation (n - 1); zero for a single trial.
  double std_dev = 0.0;

  int trials() const { return static_cast<int>(times.size()); }
  double success_rate() const {
    return trials() == 0 ? 0.0 : static_cast<double>(std::count(successes.begin(), successes.end(), true)) / trials();
  }
};

inline void summarize(EvalReport& r) {
  const double n = static_cast<double>(r.times.size());
  r.mean = n > 0 ? std::accumulate(r.times.begin(), r.times.end(), 0.0) / n : 0.0;
  double ss = 0.0;
  for (double t : r.times) ss += (t - r.mean) * (t - r.mean);
  r.std_dev = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
}

/// Runs `trials` episodes of the policy under the noise; each trial draws its
/// noise from its own seed derived from `seed`. Records the expected
/// completion time per trial, failures included.
inline EvalReport evaluate(const ObservationPolicy& policy, const ScenarioConfig& scenario, const GoalSpec& goal,
                           const NoiseSpec& noise, int trials, std::uint64_t seed, int substeps = 10,
                           std::vector<Rollout>* rollouts = nullptr) {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  noise.validate();
  EvalReport report;
  Environment env(scenario, goal, substeps);
  const int state_dim = env.scaler().state_dim();
  for (int k = 0; k < trials; ++k) {
    std::mt19937_64 rng(mix_seed(seed, 0xE7A1, static_cast<std::uint64_t>(k)));
    Rollout r = run_episode(env, [&](const Environment& e) {
      return policy(perturb_observation(e.observe(), state_dim, noise, rng));
    });
    const int steps = static_cast<int>(r.actions.size());
    const auto est = expected_completion_time(scenario, env.state(), goal, steps);
    report.times.push_back(est.time);
    report.successes.push_back(est.success);
    if (rollouts) rollouts->push_back(std::move(r));
  }
  summarize(report);
  return report;
}

inline void write_report_csv(std::ostream& out, const EvalReport& r) {
  std::ostringstream line;
  line.precision(17);
  out << "trial,T,success\n";
  for (int k = 0; k < r.trials(); ++k) {
    line.str("");
    line << k << ',' << r.times[k] << ',' << (r.successes[k] ? 1 : 0);
    out << line.str() << '\n';
  }
}

inline void write_summary_csv(std::ostream& out, const EvalReport& r) {
  std::ostringstream line;
  line.precision(17);
  line << "trials,mean,std,success_rate\n" << r.trials() << ',' << r.mean << ',' << r.std_dev << ','
       << r.success_rate() << '\n';
  out << line.str();
}

struct ComparisonRow {
  std::string label;
  int trials = 0;
  double mean = 0.0;
  double std_dev = 0.0;
  double success_rate = 0.0;
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;

  std::string to_csv() const {
    std::string s = "label,trials,mean,std,success_rate\n";
    for (const auto& r : rows) s += r.label + "," + cells(r, ",") + "\n";
    return s;
  }

  std::string to_text() const {
    std::size_t w = 5;
    for (const auto& r : rows) w = std::max(w, r.label.size());
    std::string s = pad("label", w) + "  trials  mean +- std  success_rate\n";
    for (const auto& r : rows) s += pad(r.label, w) + "  " + cells(r, "  ") + "\n";
    return s;
  }

 private:
  static std::string pad(const std::string& s, std::size_t w) { return s + std::string(w - s.size(), ' '); }
  static std::string cells(const ComparisonRow& r, const char* sep) {
    char buf[160];
    if (std::string(sep) == ",") {
      std::snprintf(buf, sizeof buf, "%d,%.4f,%.4f,%.4f", r.trials, r.mean, r.std_dev, r.success_rate);
    } else {
      std::snprintf(buf, sizeof buf, "%6d  %.4f +- %.4f  %.4f", r.trials, r.mean, r.std_dev, r.success_rate);
    }
    return buf;
  }
};

inline ComparisonTable compare(const std::vector<EvalReport>& reports, const std::vector<std::string>& labels) {
  if (reports.size() < 2) throw std::invalid_argument("compare needs at least two reports");
  if (labels.size() != reports.size()) throw std::invalid_argument("one label per report");
  ComparisonTable t;
  for (std::size_t k = 0; k < reports.size(); ++k)
    t.rows.push_back({labels[k], reports[k].trials(), reports[k].mean, reports[k].std_dev, reports[k].success_rate()});
  return t;
}

}  // namespace harvest

#endif  // HARVEST_EVAL_HPP_
