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

#ifndef OFFROAD__CORE_GEOMETRY_HPP_
#define OFFROAD__CORE_GEOMETRY_HPP_

#include "offroad/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace offroad
{

/// One waypoint in the ego frame: x forward, y lateral, z up, all in meters.
/// `t` is seconds relative to the frame time when the source carries timestamps.
struct Waypoint3D
{
  double x{0.0};
  double y{0.0};
  double z{0.0};
  std::optional<double> t{};

  bool operator==(const Waypoint3D &) const = default;
};

struct Trajectory
{
  std::vector<Waypoint3D> waypoints{};
  std::string frame_id{};

  std::size_t size() const noexcept { return waypoints.size(); }
  bool empty() const noexcept { return waypoints.empty(); }
  const Waypoint3D & operator[](std::size_t i) const { return waypoints[i]; }
  Waypoint3D & operator[](std::size_t i) { return waypoints[i]; }

  bool has_timestamps() const noexcept
  {
    return !waypoints.empty() &&
           std::all_of(waypoints.begin(), waypoints.end(), [](const auto & w) {
             return w.t.has_value();
           });
  }

  bool operator==(const Trajectory &) const = default;
};

inline bool is_finite(const Waypoint3D & w) noexcept
{
  return std::isfinite(w.x) && std::isfinite(w.y) && std::isfinite(w.z) &&
         (!w.t || std::isfinite(*w.t));
}

inline bool all_finite(const Trajectory & traj) noexcept
{
  return std::all_of(traj.waypoints.begin(), traj.waypoints.end(), [](const auto & w) {
    return is_finite(w);
  });
}

inline void require_finite(const Trajectory & traj)
{
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (!is_finite(traj[i])) {
      throw InvalidInput("non-finite coordinate at waypoint " + std::to_string(i));
    }
  }
}

/// At least two waypoints and every coordinate finite.
inline bool valid_for_mining(const Trajectory & traj) noexcept
{
  return traj.size() >= 2 && all_finite(traj);
}

inline double xy_distance(const Waypoint3D & a, const Waypoint3D & b) noexcept
{
  return std::hypot(b.x - a.x, b.y - a.y);
}

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) noexcept
{
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) {
    a += two_pi;
  } else if (a > std::numbers::pi) {
    a -= two_pi;
  }
  return a;
}

/// Cumulative XY arc length; element i is the path length from waypoint 0 to waypoint i.
inline std::vector<double> arc_length(const Trajectory & traj)
{
  require_finite(traj);
  std::vector<double> s;
  s.reserve(traj.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (i > 0) {
      acc += xy_distance(traj[i - 1], traj[i]);
    }
    s.push_back(acc);
  }
  return s;
}

inline double total_xy_length(const Trajectory & traj)
{
  const auto s = arc_length(traj);
  return s.empty() ? 0.0 : s.back();
}

namespace detail
{

inline double lerp(double a, double b, double f) noexcept { return a + f * (b - a); }

inline Waypoint3D lerp(const Waypoint3D & a, const Waypoint3D & b, double f) noexcept
{
  Waypoint3D w{lerp(a.x, b.x, f), lerp(a.y, b.y, f), lerp(a.z, b.z, f), std::nullopt};
  if (a.t && b.t) {
    w.t = lerp(*a.t, *b.t, f);
  }
  return w;
}

// Position at arc length `s` given cumulative stations `cum`. Zero-length segments are skipped.
inline Waypoint3D point_at(const Trajectory & traj, std::span<const double> cum, double s)
{
  if (s <= cum.front()) {
    return traj.waypoints.front();
  }
  if (s >= cum.back()) {
    return traj.waypoints.back();
  }
  const auto it = std::upper_bound(cum.begin(), cum.end(), s);
  const auto hi = static_cast<std::size_t>(it - cum.begin());
  const auto lo = hi - 1;
  const double span_len = cum[hi] - cum[lo];
  const double f = span_len > 0.0 ? (s - cum[lo]) / span_len : 0.0;
  return lerp(traj[lo], traj[hi], f);
}

}  // namespace detail

/// Samples the trajectory at the given XY arc-length stations by linear interpolation.
/// Stations outside [0, total length] clamp to the endpoints.
inline std::vector<Waypoint3D> sample_at_arclength(
  const Trajectory & traj, std::span<const double> stations)
{
  if (traj.size() < 2) {
    throw DegenerateTrajectory("sampling requires at least two waypoints");
  }
  const auto cum = arc_length(traj);
  std::vector<Waypoint3D> out;
  out.reserve(stations.size());
  for (const double s : stations) {
    out.push_back(detail::point_at(traj, cum, s));
  }
  return out;
}

/// `count` evenly spaced stations over [0, length], with the last one exactly `length`.
inline std::vector<double> uniform_stations(double length, std::size_t count)
{
  std::vector<double> s(count);
  for (std::size_t k = 0; k < count; ++k) {
    s[k] = length * static_cast<double>(k) / static_cast<double>(count - 1);
  }
  s.back() = length;
  return s;
}

inline Trajectory resample_by_arclength(const Trajectory & traj, std::size_t count)
{
  if (count < 2) {
    throw InvalidInput("resample count must be at least 2");
  }
  if (traj.size() < 2) {
    throw DegenerateTrajectory("resampling requires at least two waypoints");
  }
  const double length = total_xy_length(traj);
  if (!(length > 0.0)) {
    throw DegenerateTrajectory("trajectory has zero XY length");
  }
  const auto stations = uniform_stations(length, count);
  Trajectory out{sample_at_arclength(traj, stations), traj.frame_id};
  out.waypoints.front() = traj.waypoints.front();
  out.waypoints.back() = traj.waypoints.back();
  return out;
}

enum class TurningClass { left, right, straight };

inline std::string_view to_string(TurningClass c) noexcept
{
  switch (c) {
    case TurningClass::left:
      return "left";
    case TurningClass::right:
      return "right";
    case TurningClass::straight:
      return "straight";
  }
  return "straight";
}

struct MotionFeatureParams
{
  std::size_t profile_samples{16};
  double straight_threshold{0.15};  // rad
};

struct MotionFeatures
{
  double total_xy_length{0.0};
  double mean_abs_curvature{0.0};
  double max_abs_curvature{0.0};
  double net_heading_change{0.0};
  TurningClass turning_class{TurningClass::straight};
  std::vector<double> elevation_profile{};
};

inline TurningClass classify_turn(double net_heading_change, double straight_threshold) noexcept
{
  if (std::abs(net_heading_change) < straight_threshold) {
    return TurningClass::straight;
  }
  return net_heading_change > 0.0 ? TurningClass::left : TurningClass::right;
}

/// Curvature at each interior vertex is the wrapped heading change divided by the mean of the
/// two adjacent segment lengths. Consecutive waypoints that coincide in XY are collapsed first.
inline MotionFeatures motion_features(
  const Trajectory & traj, const MotionFeatureParams & params = {})
{
  if (traj.size() < 2) {
    throw InvalidInput("motion features require at least two waypoints");
  }
  if (params.profile_samples < 2) {
    throw InvalidInput("profile_samples must be at least 2");
  }
  require_finite(traj);

  std::vector<double> headings;
  std::vector<double> lengths;
  for (std::size_t i = 1; i < traj.size(); ++i) {
    const double len = xy_distance(traj[i - 1], traj[i]);
    if (len > 0.0) {
      headings.push_back(std::atan2(traj[i].y - traj[i - 1].y, traj[i].x - traj[i - 1].x));
      lengths.push_back(len);
    }
  }
  if (headings.empty()) {
    throw DegenerateTrajectory("trajectory has zero XY length");
  }

  MotionFeatures f;
  double length = 0.0;
  for (const double l : lengths) {
    length += l;
  }
  f.total_xy_length = length;

  double curvature_sum = 0.0;
  for (std::size_t j = 1; j < headings.size(); ++j) {
    const double turn = std::abs(wrap_angle(headings[j] - headings[j - 1]));
    const double kappa = turn / (0.5 * (lengths[j - 1] + lengths[j]));
    curvature_sum += kappa;
    f.max_abs_curvature = std::max(f.max_abs_curvature, kappa);
  }
  if (headings.size() > 1) {
    f.mean_abs_curvature = curvature_sum / static_cast<double>(headings.size() - 1);
  }
  f.net_heading_change = wrap_angle(headings.back() - headings.front());
  f.turning_class = classify_turn(f.net_heading_change, params.straight_threshold);

  const auto samples = resample_by_arclength(traj, params.profile_samples);
  double mean_z = 0.0;
  for (const auto & w : samples.waypoints) {
    mean_z += w.z;
  }
  mean_z /= static_cast<double>(samples.size());
  f.elevation_profile.reserve(samples.size());
  for (const auto & w : samples.waypoints) {
    f.elevation_profile.push_back(w.z - mean_z);
  }
  return f;
}

}  // namespace offroad

#endif  // OFFROAD__CORE_GEOMETRY_HPP_
