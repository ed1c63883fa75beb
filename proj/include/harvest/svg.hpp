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

// Trajectory plots as plain SVG. Output depends only on the inputs, so two
// renders of the same scene are byte-identical.

#ifndef HARVEST_SVG_HPP_
#define HARVEST_SVG_HPP_

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include "harvest/channel.hpp"
#include "harvest/scenario.hpp"

namespace harvest {

/// Rate at which a target counts as in range for plotting.
inline constexpr double kCommRangeRate = 0.01;

namespace detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

inline std::string star_points(double cx, double cy, double r) {
  std::string s;
  for (int k = 0; k < 10; ++k) {
    const double ang = -std::numbers::pi / 2 + k * std::numbers::pi / 5;
    const double rad = (k % 2 == 0) ? r : 0.4 * r;
    if (k) s += ' ';
    s += fmt(cx + rad * std::cos(ang)) + "," + fmt(cy + rad * std::sin(ang));
  }
  return s;
}

}  // namespace detail

/// Targets as stars with their communication-range disks, agent starts as
/// dots, finals as crosses, and one polyline per agent track.
inline std::string render_svg(const ScenarioConfig& config, const std::vector<std::vector<Vec2>>& tracks,
                              double pixels_per_unit = 40.0) {
  using detail::fmt;
  static const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"};

  Vec2 lo = config.targets.empty() ? Vec2::Zero() : config.targets.front().position;
  Vec2 hi = lo;
  auto grow = [&](const Vec2& p, double margin) {
    lo = lo.cwiseMin(p - Vec2::Constant(margin));
    hi = hi.cwiseMax(p + Vec2::Constant(margin));
  };
  std::vector<double> radii;
  for (const auto& t : config.targets) {
    double r = 0.0;
    for (const auto& a : config.agents) r = std::max(r, range_for_rate(a.height, t.bandwidth, t.gain, kCommRangeRate));
    radii.push_back(r);
    grow(t.position, r);
  }
  for (const auto& a : config.agents) {
    grow(a.start, 0.5);
    grow(a.final, 0.5);
  }
  for (const auto& track : tracks)
    for (const auto& p : track) grow(p, 0.5);

  const double s = pixels_per_unit;
  const double width = (hi.x() - lo.x()) * s;
  const double height = (hi.y() - lo.y()) * s;
  // World y grows upward, SVG y downward.
  auto X = [&](double x) { return fmt((x - lo.x()) * s); };
  auto Y = [&](double y) { return fmt((hi.y() - y) * s); };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width) + "\" height=\"" + fmt(height) +
         "\" viewBox=\"0 0 " + fmt(width) + " " + fmt(height) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t i = 0; i < config.targets.size(); ++i) {
    const auto& p = config.targets[i].position;
    out += "<circle cx=\"" + X(p.x()) + "\" cy=\"" + Y(p.y()) + "\" r=\"" + fmt(radii[i] * s) +
           "\" fill=\"#d62728\" fill-opacity=\"0.12\" stroke=\"none\"/>\n";
  }
  for (const auto& t : config.targets) {
    out += "<polygon points=\"" +
           detail::star_points((t.position.x() - lo.x()) * s, (hi.y() - t.position.y()) * s, 0.25 * s) +
           "\" fill=\"#d62728\"/>\n";
  }
  for (std::size_t j = 0; j < tracks.size(); ++j) {
    if (tracks[j].empty()) continue;
    std::string pts;
    for (std::size_t n = 0; n < tracks[j].size(); ++n) {
      if (n) pts += ' ';
      pts += X(tracks[j][n].x()) + "," + Y(tracks[j][n].y());
    }
    out += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + kColors[j % 6] +
           "\" stroke-width=\"2\"/>\n";
  }
  for (const auto& a : config.agents) {
    out += "<circle cx=\"" + X(a.start.x()) + "\" cy=\"" + Y(a.start.y()) + "\" r=\"" + fmt(0.12 * s) +
           "\" fill=\"#1f3c88\"/>\n";
    const double c = 0.15;
    out += "<path d=\"M" + X(a.final.x() - c) + " " + Y(a.final.y() - c) + " L" + X(a.final.x() + c) + " " +
           Y(a.final.y() + c) + " M" + X(a.final.x() - c) + " " + Y(a.final.y() + c) + " L" + X(a.final.x() + c) +
           " " + Y(a.final.y() - c) + "\" stroke=\"#1f3c88\" stroke-width=\"2\"/>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace harvest

#endif  // HARVEST_SVG_HPP_
