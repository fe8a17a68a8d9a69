// Shared builders for tests.
#pragma once

#include "offroad/core_geometry.hpp"
#include "offroad/random.hpp"
#include "offroad/traversability.hpp"

#include <array>
#include <cmath>
#include <filesystem>
#include <initializer_list>
#include <numbers>
#include <string>

namespace fixtures
{

inline offroad::Trajectory traj(std::initializer_list<std::array<double, 3>> pts)
{
  offroad::Trajectory t;
  for (const auto & p : pts) {
    t.waypoints.push_back({p[0], p[1], p[2], std::nullopt});
  }
  return t;
}

inline offroad::Trajectory timed(std::initializer_list<std::array<double, 4>> pts)
{
  offroad::Trajectory t;
  for (const auto & p : pts) {
    t.waypoints.push_back({p[0], p[1], p[2], p[3]});
  }
  return t;
}

/// Straight line along +x with unit spacing, z = slope * x.
inline offroad::Trajectory line(std::size_t n, double step = 1.0, double slope = 0.0)
{
  offroad::Trajectory t;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = step * static_cast<double>(i);
    t.waypoints.push_back({x, 0.0, slope * x, std::nullopt});
  }
  return t;
}

/// Circular arc starting at the origin heading along +x; `sign` +1 turns left, -1 right.
/// The whole arc is then rotated by `yaw` and shifted by (tx, ty).
inline offroad::Trajectory arc(
  double radius, double length, std::size_t n, double sign, double yaw = 0.0, double tx = 0.0,
  double ty = 0.0, double z_offset = 0.0)
{
  offroad::Trajectory t;
  const double c = std::cos(yaw), s = std::sin(yaw);
  for (std::size_t i = 0; i < n; ++i) {
    const double phi = length / radius * static_cast<double>(i) / static_cast<double>(n - 1);
    const double x = radius * std::sin(phi);
    const double y = sign * radius * (1.0 - std::cos(phi));
    t.waypoints.push_back({c * x - s * y + tx, s * x + c * y + ty, z_offset, std::nullopt});
  }
  return t;
}

/// Random walk with forward bias; coordinates in a few tens of metres.
inline offroad::Trajectory random_walk(offroad::SplitMix64 & rng, std::size_t n, double spread = 1.0)
{
  offroad::Trajectory t;
  double x = rng.uniform(-5, 5), y = rng.uniform(-5, 5), z = rng.uniform(-1, 1);
  double heading = rng.uniform(-std::numbers::pi, std::numbers::pi);
  for (std::size_t i = 0; i < n; ++i) {
    t.waypoints.push_back({x, y, z, std::nullopt});
    heading += rng.uniform(-0.4, 0.4);
    const double step = rng.uniform(0.2, 2.0) * spread;
    x += step * std::cos(heading);
    y += step * std::sin(heading);
    z += rng.uniform(-0.3, 0.3);
  }
  return t;
}

inline offroad::TraversabilityGrid random_grid(
  offroad::SplitMix64 & rng, int w, int h, double density, double resolution = 0.5)
{
  auto g = offroad::TraversabilityGrid::filled(w, h, resolution, 0.0, 0.0,
                                               offroad::CellLabel::traversable);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (rng.uniform() < density) {
        g.set(c, r, offroad::CellLabel::non_traversable);
      }
    }
  }
  return g;
}

inline std::filesystem::path temp_dir(const std::string & name)
{
  auto p = std::filesystem::temp_directory_path() / ("offroad_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace fixtures
