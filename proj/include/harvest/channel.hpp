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

#ifndef HARVEST_CHANNEL_HPP_
#define HARVEST_CHANNEL_HPP_

#include <Eigen/Core>

#include <cmath>
#include <limits>

namespace harvest {

using Vec2 = Eigen::Vector2d;

/// Shannon-Hartley capacity with free-space path loss between an agent flying
/// at `height` and a ground transmitter:
///   rate = bandwidth * log2(1 + gain / (|agent - target|^2 + height^2)).
inline double transmission_rate(const Vec2& agent_pos, double height,
                                const Vec2& target_pos, double bandwidth,
                                double gain) {
  const double d2 = (agent_pos - target_pos).squaredNorm() + height * height;
  if (d2 <= 0.0) return std::numeric_limits<double>::infinity();
  return bandwidth * std::log2(1.0 + gain / d2);
}

/// Rate when the agent sits directly above the transmitter.
inline double peak_rate(double height, double bandwidth, double gain) {
  const double d2 = height * height;
  if (d2 <= 0.0) return std::numeric_limits<double>::infinity();
  return bandwidth * std::log2(1.0 + gain / d2);
}

/// Planar radius at which the rate falls to `threshold`. Returns 0 when even
/// the peak rate is below the threshold.
inline double range_for_rate(double height, double bandwidth, double gain,
                             double threshold) {
  // threshold = B log2(1 + K / (r^2 + h^2))  =>  r^2 = K / (2^(t/B) - 1) - h^2
  const double denom = std::exp2(threshold / bandwidth) - 1.0;
  if (denom <= 0.0) return std::numeric_limits<double>::infinity();
  const double r2 = gain / denom - height * height;
  return r2 > 0.0 ? std::sqrt(r2) : 0.0;
}

}  // namespace harvest

#endif  // HARVEST_CHANNEL_HPP_
