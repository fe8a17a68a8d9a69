// Copyright 2026 The Offroad Eval Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef OFFROAD__PLANAR_HPP_
#define OFFROAD__PLANAR_HPP_

#include "offroad/core_geometry.hpp"
#include "offroad/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace offroad
{

enum class TimeMatching { by_timestamp, by_index };

inline std::string_view to_string(TimeMatching m) noexcept
{
  return m == TimeMatching::by_timestamp ? "by_timestamp" : "by_index";
}

struct PlanarParams
{
  std::vector<double> horizons{1.0, 2.0, 3.0};
  TimeMatching matching{TimeMatching::by_timestamp};
  // Waypoints per second; waypoint i sits at (i + 1) / index_rate. Required for by_index.
  std::optional<double> index_rate{};
  bool use_3d{false};

  void validate() const
  {
    if (horizons.empty()) {
      throw InvalidInput("at least one horizon is required");
    }
    for (std::size_t i = 0; i < horizons.size(); ++i) {
      if (!(horizons[i] > 0.0) || !std::isfinite(horizons[i])) {
        throw InvalidInput("horizons must be positive");
      }
      if (i > 0 && !(horizons[i] > horizons[i - 1])) {
        throw InvalidInput("horizons must be sorted ascending");
      }
    }
    if (matching == TimeMatching::by_index && (!index_rate || !(*index_rate > 0.0))) {
      throw InvalidInput("index matching requires a positive index_rate");
    }
  }
};

namespace detail
{

inline std::vector<double> waypoint_times(const Trajectory & traj, const PlanarParams & params)
{
  std::vector<double> times;
  times.reserve(traj.size());
  if (params.matching == TimeMatching::by_index) {
    for (std::size_t i = 0; i < traj.size(); ++i) {
      times.push_back(static_cast<double>(i + 1) / *params.index_rate);
    }
    return times;
  }
  if (!traj.has_timestamps()) {
    throw InvalidInput("timestamp matching requires timestamps on every waypoint");
  }
  for (std::size_t i = 0; i < traj.size(); ++i) {
    times.push_back(*traj[i].t);
    if (i > 0 && !(times[i] > times[i - 1])) {
      throw InvalidInput("timestamps must be strictly increasing");
    }
  }
  return times;
}

}  // namespace detail

/// Position at time `h` by linear interpolation in time. Before the first waypoint the ego
/// origin at t = 0 anchors the interpolation. Returns nullopt past the last waypoint.
inline std::optional<Waypoint3D> position_at_time(
  const Trajectory & traj, double h, const PlanarParams & params)
{
  if (traj.empty()) {
    return std::nullopt;
  }
  const auto times = detail::waypoint_times(traj, params);
  constexpr double eps = 1e-9;
  if (h > times.back() + eps) {
    return std::nullopt;
  }
  if (h >= times.back()) {
    return traj.waypoints.back();
  }
  if (h < times.front()) {
    if (times.front() <= 0.0) {
      return traj.waypoints.front();
    }
    const Waypoint3D origin{0.0, 0.0, 0.0, 0.0};
    return detail::lerp(origin, traj.waypoints.front(), h / times.front());
  }
  const auto it = std::upper_bound(times.begin(), times.end(), h);
  const auto hi = static_cast<std::size_t>(it - times.begin());
  const auto lo = hi - 1;
  return detail::lerp(traj[lo], traj[hi], (h - times[lo]) / (times[hi] - times[lo]));
}

struct L2Result
{
  // nullopt marks a horizon the prediction or the ground truth does not reach.
  std::vector<std::optional<double>> per_horizon{};
  std::optional<double> average{};
  std::vector<double> uncovered{};  // horizons past the end of the ground truth
};

inline L2Result l2_errors(const Trajectory & pred, const Trajectory & gt, const PlanarParams & params)
{
  params.validate();
  require_finite(pred);
  require_finite(gt);
  L2Result out;
  double sum = 0.0;
  std::size_t scored = 0;
  for (const double h : params.horizons) {
    const auto g = position_at_time(gt, h, params);
    if (!g) {
      out.uncovered.push_back(h);
      out.per_horizon.emplace_back(std::nullopt);
      continue;
    }
    const auto p = position_at_time(pred, h, params);
    if (!p) {
      out.per_horizon.emplace_back(std::nullopt);
      continue;
    }
    const double dx = p->x - g->x;
    const double dy = p->y - g->y;
    const double dz = params.use_3d ? p->z - g->z : 0.0;
    const double err = std::sqrt(dx * dx + dy * dy + dz * dz);
    out.per_horizon.emplace_back(err);
    sum += err;
    ++scored;
  }
  if (out.uncovered.size() == params.horizons.size()) {
    throw InvalidInput("ground truth does not cover any requested horizon");
  }
  if (scored > 0) {
    out.average = sum / static_cast<double>(scored);
  }
  return out;
}

enum class SampleStatus { ok, parse_failure, too_few_waypoints };

inline std::string_view to_string(SampleStatus s) noexcept
{
  switch (s) {
    case SampleStatus::ok:
      return "ok";
    case SampleStatus::parse_failure:
      return "parse_failure";
    case SampleStatus::too_few_waypoints:
      return "too_few_waypoints";
  }
  return "ok";
}

inline bool is_failure(SampleStatus s) noexcept { return s != SampleStatus::ok; }

/// Percentage of samples whose generated output failed to parse or had too few waypoints.
inline double failure_rate(std::span<const SampleStatus> outcomes)
{
  if (outcomes.empty()) {
    throw InvalidInput("failure rate of an empty batch is undefined");
  }
  const auto failed = std::count_if(outcomes.begin(), outcomes.end(), is_failure);
  return 100.0 * static_cast<double>(failed) / static_cast<double>(outcomes.size());
}

}  // namespace offroad

#endif  // OFFROAD__PLANAR_HPP_
