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

// World description: sensor targets, agents, and the step budget.

#ifndef HARVEST_SCENARIO_HPP_
#define HARVEST_SCENARIO_HPP_

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "harvest/channel.hpp"

namespace harvest {

struct TargetSpec {
  Vec2 position = Vec2::Zero();
  double bandwidth = 1.0;
  double gain = 1.0;
  double initial_volume = 0.0;
};

struct AgentSpec {
  Vec2 start = Vec2::Zero();
  Vec2 final = Vec2::Zero();
  double height = 0.5;
  // World units per step.
  double max_speed = 1.0;
};

struct ScenarioConfig {
  std::vector<TargetSpec> targets;
  std::vector<AgentSpec> agents;
  int n_max = 1;
  double dt = 1.0;

  int num_targets() const { return static_cast<int>(targets.size()); }
  int num_agents() const { return static_cast<int>(agents.size()); }
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

/// Malformed scenario text. `location` is a JSON pointer or byte offset.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& location, const std::string& what)
      : std::runtime_error(location + ": " + what), location_(location) {}
  const std::string& location() const { return location_; }

 private:
  std::string location_;
};

/// Well-formed scenario that violates an invariant.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(ValidationReport report)
      : std::runtime_error(Join(report)), report_(std::move(report)) {}
  const ValidationReport& report() const { return report_; }

 private:
  static std::string Join(const ValidationReport& r) {
    std::string s = "invalid scenario:";
    for (const auto& v : r.violations) s += " [" + v + "]";
    return s;
  }
  ValidationReport report_;
};

inline ValidationReport validate(const ScenarioConfig& config) {
  ValidationReport report;
  auto fail = [&](std::string msg) { report.violations.push_back(std::move(msg)); };
  auto finite2 = [](const Vec2& v) { return std::isfinite(v.x()) && std::isfinite(v.y()); };

  if (config.targets.empty()) fail("M_s >= 1: scenario has no targets");
  if (config.agents.empty()) fail("M_a >= 1: scenario has no agents");
  if (config.n_max < 1) fail("n_max >= 1: got " + std::to_string(config.n_max));
  if (!(config.dt > 0.0)) fail("dt > 0: got " + std::to_string(config.dt));

  for (std::size_t i = 0; i < config.targets.size(); ++i) {
    const auto& t = config.targets[i];
    const std::string where = "targets[" + std::to_string(i) + "]";
    if (!finite2(t.position)) fail(where + ".position must be finite");
    if (!(t.bandwidth > 0.0)) fail(where + ".bandwidth > 0: got " + std::to_string(t.bandwidth));
    if (!(t.gain > 0.0)) fail(where + ".gain > 0: got " + std::to_string(t.gain));
    if (!(t.initial_volume >= 0.0))
      fail(where + ".initial_volume >= 0: got " + std::to_string(t.initial_volume));
    for (std::size_t k = 0; k < i; ++k) {
      if (config.targets[k].position == t.position)
        fail(where + ".position duplicates targets[" + std::to_string(k) + "]");
    }
  }
  for (std::size_t j = 0; j < config.agents.size(); ++j) {
    const auto& a = config.agents[j];
    const std::string where = "agents[" + std::to_string(j) + "]";
    if (!finite2(a.start) || !finite2(a.final)) fail(where + " positions must be finite");
    if (!(a.height >= 0.0)) fail(where + ".height >= 0: got " + std::to_string(a.height));
    if (!(a.max_speed > 0.0)) fail(where + ".max_speed > 0: got " + std::to_string(a.max_speed));
  }
  return report;
}

/// Travel time of the slowest agent going straight to its final position.
inline double travel_time_bound(const ScenarioConfig& config, const std::vector<Vec2>& positions,
                                double tolerance = 0.0) {
  double worst = 0.0;
  for (std::size_t j = 0; j < config.agents.size(); ++j) {
    const double dist = (positions[j] - config.agents[j].final).norm();
    worst = std::max(worst, std::max(0.0, dist - tolerance) / config.agents[j].max_speed);
  }
  return worst * config.dt;
}

/// Time to drain the slowest target if every agent hovered right above it.
inline double data_time_bound(const ScenarioConfig& config, const std::vector<double>& remaining) {
  double worst = 0.0;
  for (std::size_t i = 0; i < config.targets.size(); ++i) {
    if (remaining[i] <= 0.0) continue;
    const auto& t = config.targets[i];
    double rate = 0.0;
    for (const auto& a : config.agents) rate += peak_rate(a.height, t.bandwidth, t.gain);
    worst = std::max(worst, remaining[i] / rate);
  }
  return worst;
}

/// Lower bound on the mission completion time from the start configuration.
inline double lower_bound_time(const ScenarioConfig& config) {
  std::vector<Vec2> starts;
  for (const auto& a : config.agents) starts.push_back(a.start);
  std::vector<double> volumes;
  for (const auto& t : config.targets) volumes.push_back(t.initial_volume);
  return std::max(travel_time_bound(config, starts), data_time_bound(config, volumes));
}

/// Step budget: three times the lower-bound completion time, in steps.
inline int default_n_max(const ScenarioConfig& config) {
  return std::max(1, static_cast<int>(std::ceil(3.0 * lower_bound_time(config) / config.dt - 1e-9)));
}

namespace detail {

inline ScenarioConfig make_builtin(const std::vector<Vec2>& positions,
                                   const std::vector<double>& bandwidths,
                                   const std::vector<double>& volumes, const std::vector<Vec2>& starts,
                                   const std::vector<Vec2>& finals) {
  ScenarioConfig c;
  for (std::size_t i = 0; i < positions.size(); ++i)
    c.targets.push_back({positions[i], bandwidths[i], 0.7, volumes[i]});
  for (std::size_t j = 0; j < starts.size(); ++j) c.agents.push_back({starts[j], finals[j], 0.5, 1.0});
  c.dt = 1.0;
  c.n_max = default_n_max(c);
  return c;
}

}  // namespace detail

/// Four targets, three agents sharing start (0,1) and final (7,9).
inline ScenarioConfig builtin_config_1() {
  return detail::make_builtin({{3, 1}, {7, 1}, {7, 5}, {7, 7}}, {0.5, 1.0, 1.5, 2.0}, {5, 6, 3, 3},
                              {{0, 1}, {0, 1}, {0, 1}}, {{7, 9}, {7, 9}, {7, 9}});
}

/// Five targets, three agents from the origin to distinct finals.
inline ScenarioConfig builtin_config_2() {
  return detail::make_builtin({{3, 1}, {6, 7}, {8, 2}, {1, 6}, {3, 9}}, {0.5, 1.0, 1.5, 2.0, 2.5},
                              {5, 6, 3, 4, 4}, {{0, 0}, {0, 0}, {0, 0}}, {{9, 6}, {5, 5}, {7, 8}});
}

inline nlohmann::json to_json(const ScenarioConfig& config) {
  nlohmann::json j;
  j["targets"] = nlohmann::json::array();
  for (const auto& t : config.targets) {
    j["targets"].push_back({{"position", {t.position.x(), t.position.y()}},
                            {"bandwidth", t.bandwidth},
                            {"gain", t.gain},
                            {"initial_volume", t.initial_volume}});
  }
  j["agents"] = nlohmann::json::array();
  for (const auto& a : config.agents) {
    j["agents"].push_back({{"start", {a.start.x(), a.start.y()}},
                           {"final", {a.final.x(), a.final.y()}},
                           {"height", a.height},
                           {"max_speed", a.max_speed}});
  }
  j["n_max"] = config.n_max;
  j["dt"] = config.dt;
  return j;
}

namespace detail {

inline const nlohmann::json& require(const nlohmann::json& obj, const std::string& key,
                                     const std::string& where) {
  if (!obj.is_object()) throw ParseError(where.empty() ? "/" : where, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(where + "/" + key, "missing key \"" + key + "\"");
  return *it;
}

inline double number(const nlohmann::json& obj, const std::string& key, const std::string& where) {
  const auto& v = require(obj, key, where);
  if (!v.is_number()) throw ParseError(where + "/" + key, "expected a number");
  return v.get<double>();
}

inline Vec2 point(const nlohmann::json& obj, const std::string& key, const std::string& where) {
  const auto& v = require(obj, key, where);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw ParseError(where + "/" + key, "expected [x, y]");
  return {v[0].get<double>(), v[1].get<double>()};
}

}  // namespace detail

/// Parses without validating; throws ParseError on schema mismatch.
inline ScenarioConfig parse_config(const nlohmann::json& j) {
  using detail::number;
  using detail::point;
  using detail::require;
  ScenarioConfig c;
  const auto& targets = require(j, "targets", "");
  if (!targets.is_array()) throw ParseError("/targets", "expected an array");
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const std::string where = "/targets/" + std::to_string(i);
    c.targets.push_back({point(targets[i], "position", where), number(targets[i], "bandwidth", where),
                         number(targets[i], "gain", where),
                         number(targets[i], "initial_volume", where)});
  }
  const auto& agents = require(j, "agents", "");
  if (!agents.is_array()) throw ParseError("/agents", "expected an array");
  for (std::size_t k = 0; k < agents.size(); ++k) {
    const std::string where = "/agents/" + std::to_string(k);
    c.agents.push_back({point(agents[k], "start", where), point(agents[k], "final", where),
                        number(agents[k], "height", where), number(agents[k], "max_speed", where)});
  }
  const auto& n_max = require(j, "n_max", "");
  if (!n_max.is_number_integer()) throw ParseError("/n_max", "expected an integer");
  c.n_max = n_max.get<int>();
  c.dt = number(j, "dt", "");
  return c;
}

inline ScenarioConfig parse_config_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("byte " + std::to_string(e.byte), e.what());
  }
  ScenarioConfig c = parse_config(j);
  auto report = validate(c);
  if (!report.ok()) throw ValidationError(std::move(report));
  return c;
}

/// Resolves "builtin:config1" / "builtin:config2" or reads a scenario file.
inline ScenarioConfig load(const std::string& path) {
  if (path == "builtin:config1") return builtin_config_1();
  if (path == "builtin:config2") return builtin_config_2();
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config_text(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ":" + e.location(), e.what());
  }
}

inline void save(const ScenarioConfig& config, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write scenario file " + path);
  // max_digits10 through nlohmann's dump keeps doubles exact.
  out << to_json(config).dump(2) << '\n';
}

}  // namespace harvest

#endif  // HARVEST_SCENARIO_HPP_
