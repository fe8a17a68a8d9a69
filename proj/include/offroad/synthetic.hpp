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

#ifndef OFFROAD__SYNTHETIC_HPP_
#define OFFROAD__SYNTHETIC_HPP_

#include "offroad/archive.hpp"
#include "offroad/core_geometry.hpp"
#include "offroad/errors.hpp"
#include "offroad/random.hpp"
#include "offroad/traversability.hpp"
#include "offroad/tokenizer.hpp"

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

namespace offroad
{

enum class Terrain { flat, ramp, sine_hill, obstacle_field };

inline std::string_view to_string(Terrain t) noexcept
{
  switch (t) {
    case Terrain::flat:
      return "flat";
    case Terrain::ramp:
      return "ramp";
    case Terrain::sine_hill:
      return "sine-hill";
    case Terrain::obstacle_field:
      return "obstacle-field";
  }
  return "flat";
}

inline Terrain terrain_from_string(std::string_view s)
{
  if (s == "flat") return Terrain::flat;
  if (s == "ramp") return Terrain::ramp;
  if (s == "sine-hill") return Terrain::sine_hill;
  if (s == "obstacle-field") return Terrain::obstacle_field;
  throw InvalidInput("unknown terrain \"" + std::string(s) + "\"");
}

struct SyntheticSpec
{
  std::size_t scenes{4};
  std::size_t frames_per_scene{8};
  Terrain terrain{Terrain::obstacle_field};
  double resolution{0.25};
  // Waypoint spacing and count: t = dt, 2 dt, ..., waypoints * dt.
  double dt{0.25};
  std::size_t waypoints{12};
};

/// Everything needed to regenerate one scene analytically. The corridor centerline is
/// y = bend * x^2; cells farther than half_width (measured along y) from it are walls.
struct SceneLayout
{
  std::string scene_id{};
  Terrain terrain{Terrain::flat};
  double bend{0.0};
  double half_width{4.0};
  double grade{0.0};       // ramp slope dz/dx
  double amplitude{0.0};   // sine hill
  double wavelength{1.0};  // sine hill
  double phase{0.0};
  double origin_x{-2.0};
  double origin_y{-12.0};
  int width{0};
  int height{0};
  double resolution{0.25};
  std::vector<std::array<double, 3>> rocks{};  // (x, y, radius), outside the corridor

  double centerline(double x) const noexcept { return bend * x * x; }

  double ground(double x) const noexcept
  {
    switch (terrain) {
      case Terrain::flat:
        return 0.0;
      case Terrain::ramp:
      case Terrain::obstacle_field:
        return grade * x;
      case Terrain::sine_hill:
        return amplitude * std::sin(2.0 * std::numbers::pi * x / wavelength + phase);
    }
    return 0.0;
  }
};

struct FrameLayout
{
  std::string frame_id{};
  double speed{4.0};
  double lateral_offset{0.0};
  double route_offset{0.0};  // where along the route this frame starts
  double pitch{0.0};         // extra per-frame grade
};

namespace detail
{

inline std::string numbered(const char * prefix, std::size_t i)
{
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%03zu", prefix, i);
  return buf;
}

inline std::uint64_t scene_seed(std::uint64_t seed, std::size_t scene)
{
  SplitMix64 mix(seed ^ (0xA5A5A5A5ULL + 0x9E3779B97F4A7C15ULL * (scene + 1)));
  return mix.next();
}

}  // namespace detail

inline SceneLayout draw_scene_layout(std::uint64_t seed, std::size_t scene, const SyntheticSpec & spec)
{
  SplitMix64 rng(detail::scene_seed(seed, scene));
  SceneLayout s;
  s.scene_id = detail::numbered("scene", scene);
  s.terrain = spec.terrain;
  s.resolution = spec.resolution;
  s.width = static_cast<int>(std::lround(32.0 / spec.resolution)) + 1;
  s.height = static_cast<int>(std::lround(24.0 / spec.resolution)) + 1;
  const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
  s.bend = sign * rng.uniform(0.002, 0.01);
  s.half_width = rng.uniform(3.5, 4.5);
  s.grade = (rng.uniform() < 0.5 ? -1.0 : 1.0) *
            (spec.terrain == Terrain::obstacle_field ? rng.uniform(0.0, 0.05)
                                                     : rng.uniform(0.03, 0.12));
  s.amplitude = rng.uniform(0.5, 1.5);
  s.wavelength = rng.uniform(10.0, 20.0);
  s.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  if (spec.terrain == Terrain::obstacle_field) {
    for (int k = 0; k < 12; ++k) {
      const double x = rng.uniform(0.0, 30.0);
      const double side = rng.uniform() < 0.5 ? -1.0 : 1.0;
      const double r = rng.uniform(0.5, 1.2);
      const double y = s.centerline(x) + side * (s.half_width + r + rng.uniform(0.5, 4.0));
      s.rocks.push_back({x, y, r});
    }
  }
  return s;
}

inline FrameLayout draw_frame_layout(
  std::uint64_t seed, std::size_t scene, std::size_t frame, const SceneLayout & layout)
{
  SplitMix64 rng(detail::scene_seed(seed, scene) ^ (0xC2B2AE3D27D4EB4FULL * (frame + 1)));
  FrameLayout f;
  f.frame_id = layout.scene_id + "_" + detail::numbered("f", frame);
  f.speed = rng.uniform(3.0, 6.0);
  f.lateral_offset = rng.uniform(-0.4, 0.4);
  f.route_offset = rng.uniform(0.0, 20.0);
  f.pitch = rng.uniform(-0.02, 0.02);
  return f;
}

inline TraversabilityGrid render_grid(const SceneLayout & s)
{
  auto g = TraversabilityGrid::filled(s.width, s.height, s.resolution, s.origin_x, s.origin_y);
  for (int r = 0; r < s.height; ++r) {
    for (int c = 0; c < s.width; ++c) {
      const double x = s.origin_x + c * s.resolution;
      const double y = s.origin_y + r * s.resolution;
      bool blocked = std::abs(y - s.centerline(x)) > s.half_width;
      for (const auto & rock : s.rocks) {
        blocked = blocked || std::hypot(x - rock[0], y - rock[1]) <= rock[2];
      }
      if (blocked) {
        g.set(c, r, CellLabel::non_traversable);
      }
    }
  }
  return g;
}

/// Follows the corridor at a constant lateral offset; heights come from the terrain seen from
/// this frame's position along the route.
inline Trajectory corridor_trajectory(
  const SceneLayout & s, const FrameLayout & f, const SyntheticSpec & spec)
{
  Trajectory traj;
  traj.frame_id = f.frame_id;
  const double base = s.ground(f.route_offset);
  for (std::size_t k = 1; k <= spec.waypoints; ++k) {
    const double t = spec.dt * static_cast<double>(k);
    const double x = f.speed * t;
    const double y = s.centerline(x) + f.lateral_offset;
    const double z = s.ground(x + f.route_offset) - base + f.pitch * x;
    traj.waypoints.push_back({x, y, z, t});
  }
  return traj;
}

/// Straight line leaving the corridor on the outside of the bend and running deep into the
/// wall; more than 20 of its 40 waypoints sit on wall cells.
inline Trajectory through_obstacle_trajectory(const SceneLayout & s)
{
  Trajectory traj;
  traj.frame_id = s.scene_id + "_through_obstacle";
  const double side = s.bend >= 0.0 ? -1.0 : 1.0;
  for (int k = 0; k < 40; ++k) {
    const double x = 0.5 + 11.0 * k / 39.0;
    traj.waypoints.push_back({x, side * x, 0.0, 0.1 * (k + 1)});
  }
  return traj;
}

namespace detail
{

inline std::string describe(const Trajectory & traj)
{
  const auto f = motion_features(traj, {});
  const double rise = traj.waypoints.back().z - traj.waypoints.front().z;
  std::string text;
  switch (f.turning_class) {
    case TurningClass::left:
      text = "Curve left along the dirt corridor";
      break;
    case TurningClass::right:
      text = "Curve right along the dirt corridor";
      break;
    case TurningClass::straight:
      text = "Continue straight along the dirt corridor";
      break;
  }
  if (rise > 0.3) {
    text += " while climbing uphill";
  } else if (rise < -0.3) {
    text += " while descending downhill";
  } else {
    text += " over level ground";
  }
  return text + ", keeping clear of the vegetation on both sides.";
}

inline std::string split_for(std::size_t scene, std::size_t scenes)
{
  // Scene-level split in the 100 / 15 / 29 proportion of the reference benchmark.
  const double u = (static_cast<double>(scene) + 0.5) / static_cast<double>(scenes);
  if (u < 100.0 / 144.0) return "train";
  if (u < 115.0 / 144.0) return "val";
  return "test";
}

}  // namespace detail

/// Deterministic archive: same seed and spec give byte-identical files. Waypoint coordinates
/// are stored at 0.01 resolution so tokenized ground truth parses back to itself.
inline SceneArchive generate_synthetic(std::uint64_t seed, const SyntheticSpec & spec)
{
  if (spec.scenes < 1 || spec.frames_per_scene < 1 || spec.waypoints < 2) {
    throw InvalidInput("synthetic spec needs scenes, frames and at least two waypoints");
  }
  if (!(spec.resolution > 0.0) || !(spec.dt > 0.0)) {
    throw InvalidInput("synthetic resolution and dt must be positive");
  }
  SceneArchive archive;
  for (std::size_t si = 0; si < spec.scenes; ++si) {
    const auto layout = draw_scene_layout(seed, si, spec);
    SceneEntry entry;
    entry.scene_id = layout.scene_id;
    entry.split = detail::split_for(si, spec.scenes);
    entry.grid_path = "grids/" + layout.scene_id + ".grid";
    for (std::size_t fi = 0; fi < spec.frames_per_scene; ++fi) {
      const auto frame = draw_frame_layout(seed, si, fi, layout);
      SceneRecord r;
      r.scene_id = layout.scene_id;
      r.frame_id = frame.frame_id;
      r.image_ref = "images/" + layout.scene_id + "/" + frame.frame_id + ".jpg";
      r.gt_trajectory = quantize_trajectory(corridor_trajectory(layout, frame, spec));
      r.language = detail::describe(r.gt_trajectory);
      entry.frame_ids.push_back(r.frame_id);
      archive.frames.push_back(std::move(r));
    }
    archive.grids.emplace(layout.scene_id, render_grid(layout));
    archive.scenes.push_back(std::move(entry));
  }
  return archive;
}

}  // namespace offroad

#endif  // OFFROAD__SYNTHETIC_HPP_
