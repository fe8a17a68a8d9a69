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

#ifndef OFFROAD__TRAVERSABILITY_HPP_
#define OFFROAD__TRAVERSABILITY_HPP_

#include "offroad/core_geometry.hpp"
#include "offroad/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace offroad
{

enum class CellLabel : std::uint8_t { traversable = 0, non_traversable = 1 };

/// Row-major occupancy labels. Cell (col, row) has its center at
/// (origin_x + col * resolution, origin_y + row * resolution).
struct TraversabilityGrid
{
  int width{0};
  int height{0};
  double resolution{1.0};
  double origin_x{0.0};
  double origin_y{0.0};
  std::vector<CellLabel> labels{};

  std::size_t index(int col, int row) const noexcept
  {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(col);
  }
  CellLabel at(int col, int row) const { return labels[index(col, row)]; }
  void set(int col, int row, CellLabel label) { labels[index(col, row)] = label; }

  void validate() const
  {
    if (width < 1 || height < 1) {
      throw InvalidInput("grid width and height must be at least 1");
    }
    if (!(resolution > 0.0) || !std::isfinite(resolution)) {
      throw InvalidInput("grid resolution must be positive and finite");
    }
    if (!std::isfinite(origin_x) || !std::isfinite(origin_y)) {
      throw InvalidInput("grid origin must be finite");
    }
    if (labels.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
      throw InvalidInput("grid label count does not match width * height");
    }
  }

  static TraversabilityGrid filled(
    int width, int height, double resolution, double origin_x, double origin_y,
    CellLabel label = CellLabel::traversable)
  {
    return TraversabilityGrid{
      width, height, resolution, origin_x, origin_y,
      std::vector<CellLabel>(
        static_cast<std::size_t>(width) * static_cast<std::size_t>(height), label)};
  }

  bool operator==(const TraversabilityGrid &) const = default;
};

inline constexpr double unbounded_clearance = std::numeric_limits<double>::infinity();

/// Distance in meters from every cell center to the nearest non-traversable cell center.
/// When the grid has no obstacle at all, every entry is `unbounded_clearance`.
struct ClearanceField
{
  int width{0};
  int height{0};
  double resolution{1.0};
  double origin_x{0.0};
  double origin_y{0.0};
  std::vector<double> distance{};
  // Squared distance in cell units; -1 where unbounded.
  std::vector<std::int64_t> squared_cells{};

  bool unbounded() const noexcept
  {
    return !distance.empty() && std::isinf(distance.front());
  }
  double at(int col, int row) const
  {
    return distance[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
                    static_cast<std::size_t>(col)];
  }
};

namespace detail
{

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) noexcept
{
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) {
    --q;
  }
  return q;
}

}  // namespace detail

/// Exact Euclidean distance transform (Meijster, Roerdink and Hesselink, two separable passes
/// in integer arithmetic). Output meters are resolution * sqrt(integer squared cell distance).
inline ClearanceField clearance_field(const TraversabilityGrid & grid)
{
  grid.validate();
  const std::int64_t w = grid.width;
  const std::int64_t h = grid.height;
  const std::size_t n = static_cast<std::size_t>(w * h);

  ClearanceField field{grid.width, grid.height, grid.resolution, grid.origin_x, grid.origin_y,
                       {}, {}};

  const bool any_obstacle = std::any_of(grid.labels.begin(), grid.labels.end(), [](auto l) {
    return l == CellLabel::non_traversable;
  });
  if (!any_obstacle) {
    field.distance.assign(n, unbounded_clearance);
    field.squared_cells.assign(n, -1);
    return field;
  }

  const std::int64_t inf = w + h;
  std::vector<std::int64_t> g(n);

  // Column pass: vertical distance to the nearest obstacle in the same column.
  for (std::int64_t x = 0; x < w; ++x) {
    auto idx = [&](std::int64_t y) { return static_cast<std::size_t>(y * w + x); };
    g[idx(0)] = grid.labels[idx(0)] == CellLabel::non_traversable ? 0 : inf;
    for (std::int64_t y = 1; y < h; ++y) {
      g[idx(y)] = grid.labels[idx(y)] == CellLabel::non_traversable ? 0 : g[idx(y - 1)] + 1;
    }
    for (std::int64_t y = h - 2; y >= 0; --y) {
      if (g[idx(y + 1)] < g[idx(y)]) {
        g[idx(y)] = g[idx(y + 1)] + 1;
      }
    }
  }

  // Row pass: lower envelope of parabolas.
  field.squared_cells.resize(n);
  std::vector<std::int64_t> s(static_cast<std::size_t>(w));
  std::vector<std::int64_t> t(static_cast<std::size_t>(w));
  for (std::int64_t y = 0; y < h; ++y) {
    const std::int64_t * row = g.data() + y * w;
    auto f = [&](std::int64_t x, std::int64_t i) {
      return (x - i) * (x - i) + row[i] * row[i];
    };
    auto sep = [&](std::int64_t i, std::int64_t u) {
      return detail::floor_div(u * u - i * i + row[u] * row[u] - row[i] * row[i], 2 * (u - i));
    };

    std::int64_t q = 0;
    s[0] = 0;
    t[0] = 0;
    for (std::int64_t u = 1; u < w; ++u) {
      while (q >= 0 && f(t[static_cast<std::size_t>(q)], s[static_cast<std::size_t>(q)]) >
                         f(t[static_cast<std::size_t>(q)], u)) {
        --q;
      }
      if (q < 0) {
        q = 0;
        s[0] = u;
      } else {
        const std::int64_t next = 1 + sep(s[static_cast<std::size_t>(q)], u);
        if (next < w) {
          ++q;
          s[static_cast<std::size_t>(q)] = u;
          t[static_cast<std::size_t>(q)] = next;
        }
      }
    }
    for (std::int64_t u = w - 1; u >= 0; --u) {
      field.squared_cells[static_cast<std::size_t>(y * w + u)] =
        f(u, s[static_cast<std::size_t>(q)]);
      if (u == t[static_cast<std::size_t>(q)]) {
        --q;
      }
    }
  }

  field.distance.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    field.distance[i] =
      grid.resolution * std::sqrt(static_cast<double>(field.squared_cells[i]));
  }
  return field;
}

namespace detail
{

struct GridCoord
{
  double col;
  double row;
  bool inside;
};

// Continuous cell coordinates. A point is inside when it lies within some cell's footprint.
inline GridCoord to_grid(const ClearanceField & field, double x, double y) noexcept
{
  const double col = (x - field.origin_x) / field.resolution;
  const double row = (y - field.origin_y) / field.resolution;
  const bool inside = col >= -0.5 && col <= field.width - 0.5 && row >= -0.5 &&
                      row <= field.height - 0.5;
  return {col, row, inside};
}

}  // namespace detail

/// Bilinear interpolation of the field between cell centers, clamped at the outer half cell.
/// Points outside the grid footprint get clearance 0.
inline double clearance_at(const ClearanceField & field, double x, double y)
{
  const auto c = detail::to_grid(field, x, y);
  if (!c.inside) {
    return 0.0;
  }
  if (field.unbounded()) {
    return unbounded_clearance;
  }
  const double cx = std::clamp(c.col, 0.0, static_cast<double>(field.width - 1));
  const double cy = std::clamp(c.row, 0.0, static_cast<double>(field.height - 1));
  const int c0 = static_cast<int>(std::floor(cx));
  const int r0 = static_cast<int>(std::floor(cy));
  const int c1 = std::min(c0 + 1, field.width - 1);
  const int r1 = std::min(r0 + 1, field.height - 1);
  const double tx = cx - c0;
  const double ty = cy - r0;
  const double bottom = detail::lerp(field.at(c0, r0), field.at(c1, r0), tx);
  const double top = detail::lerp(field.at(c0, r1), field.at(c1, r1), tx);
  return detail::lerp(bottom, top, ty);
}

/// True when the cell containing (x, y) is non-traversable, or the point is off the grid.
inline bool on_obstacle(const ClearanceField & field, double x, double y)
{
  const auto c = detail::to_grid(field, x, y);
  if (!c.inside) {
    return true;
  }
  const int col = std::clamp(static_cast<int>(std::lround(c.col)), 0, field.width - 1);
  const int row = std::clamp(static_cast<int>(std::lround(c.row)), 0, field.height - 1);
  return field.at(col, row) == 0.0;
}

inline std::vector<double> waypoint_clearances(
  const Trajectory & traj, const ClearanceField & field)
{
  require_finite(traj);
  std::vector<double> out;
  out.reserve(traj.size());
  for (const auto & w : traj.waypoints) {
    out.push_back(clearance_at(field, w.x, w.y));
  }
  return out;
}

struct TraversabilityParams
{
  double alpha{3.0};
  std::size_t top_k{20};
  std::vector<double> thresholds{0.5, 1.0, 1.5};
  double lambda_penalty{2.0};

  void validate() const
  {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
      throw InvalidInput("alpha must be positive");
    }
    if (top_k < 1) {
      throw InvalidInput("K must be at least 1");
    }
    if (thresholds.empty()) {
      throw InvalidInput("threshold set must not be empty");
    }
    for (const double d : thresholds) {
      if (!(d > 0.0) || !std::isfinite(d)) {
        throw InvalidInput("thresholds must be positive");
      }
    }
    if (!(lambda_penalty >= 0.0) || !std::isfinite(lambda_penalty)) {
      throw InvalidInput("lambda_penalty must be non-negative");
    }
  }
};

/// Mean of exp(-alpha * c) over the min(K, N) smallest clearances.
inline double risk(std::span<const double> clearances, const TraversabilityParams & params)
{
  if (clearances.empty()) {
    throw InvalidInput("risk requires at least one clearance");
  }
  const std::size_t k = std::min(params.top_k, clearances.size());
  std::vector<double> sorted(clearances.begin(), clearances.end());
  std::partial_sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), sorted.end());
  double acc = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    acc += std::exp(-params.alpha * sorted[i]);
  }
  return acc / static_cast<double>(k);
}

inline double base_score(double risk_value) noexcept
{
  return std::clamp(1.0 - risk_value, 0.0, 1.0);
}

inline double compliance_score(
  double risk_value, double mean_violation_ratio, double lambda_penalty) noexcept
{
  const double penalty = std::max(0.0, 1.0 - lambda_penalty * mean_violation_ratio);
  return base_score(risk_value) * penalty;
}

/// Per-waypoint quantities the compliance score depends on. Scoring works from this profile so
/// that clearances can be perturbed independently of geometry.
struct ClearanceProfile
{
  std::vector<double> clearances{};
  std::vector<bool> on_obstacle{};
  std::vector<double> segment_lengths{};  // XY, size N - 1
};

inline ClearanceProfile clearance_profile(const Trajectory & traj, const ClearanceField & field)
{
  ClearanceProfile p;
  p.clearances = waypoint_clearances(traj, field);
  p.on_obstacle.reserve(traj.size());
  for (const auto & w : traj.waypoints) {
    p.on_obstacle.push_back(on_obstacle(field, w.x, w.y));
  }
  for (std::size_t i = 1; i < traj.size(); ++i) {
    p.segment_lengths.push_back(xy_distance(traj[i - 1], traj[i]));
  }
  return p;
}

inline double violation_ratio(const ClearanceProfile & profile, double d)
{
  if (profile.clearances.size() < 2) {
    throw DegenerateTrajectory("violation ratio requires at least two waypoints");
  }
  double bad = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < profile.clearances.size(); ++i) {
    const double len = profile.segment_lengths[i];
    total += len;
    const bool is_bad = profile.clearances[i] < d || profile.clearances[i + 1] < d ||
                        profile.on_obstacle[i] || profile.on_obstacle[i + 1];
    if (is_bad) {
      bad += len;
    }
  }
  if (!(total > 0.0)) {
    throw DegenerateTrajectory("trajectory has zero XY length");
  }
  return bad / total;
}

inline double violation_ratio(const Trajectory & traj, const ClearanceField & field, double d)
{
  return violation_ratio(clearance_profile(traj, field), d);
}

struct TraversabilityResult
{
  double s_trav{0.0};
  double s_base{0.0};
  double risk{0.0};
  double penalty{0.0};
  double mean_violation_ratio{0.0};
  std::vector<double> violation_ratios{};  // one per threshold, same order as params
  bool degenerate{false};
};

inline TraversabilityResult traversability_score(
  const ClearanceProfile & profile, const TraversabilityParams & params)
{
  params.validate();
  TraversabilityResult r;
  double length = 0.0;
  for (const double l : profile.segment_lengths) {
    length += l;
  }
  if (profile.clearances.size() < 2 || !(length > 0.0)) {
    r.degenerate = true;
    return r;
  }
  r.risk = risk(profile.clearances, params);
  r.s_base = base_score(r.risk);
  for (const double d : params.thresholds) {
    r.violation_ratios.push_back(violation_ratio(profile, d));
    r.mean_violation_ratio += r.violation_ratios.back();
  }
  r.mean_violation_ratio /= static_cast<double>(params.thresholds.size());
  r.penalty = std::max(0.0, 1.0 - params.lambda_penalty * r.mean_violation_ratio);
  r.s_trav = r.s_base * r.penalty;
  return r;
}

inline TraversabilityResult traversability_score(
  const Trajectory & traj, const ClearanceField & field, const TraversabilityParams & params = {})
{
  return traversability_score(clearance_profile(traj, field), params);
}

inline TraversabilityResult traversability_score(
  const Trajectory & traj, const TraversabilityGrid & grid, const TraversabilityParams & params = {})
{
  return traversability_score(traj, clearance_field(grid), params);
}

}  // namespace offroad

#endif  // OFFROAD__TRAVERSABILITY_HPP_
