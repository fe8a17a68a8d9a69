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

#ifndef OFFROAD__ELEVATION_HPP_
#define OFFROAD__ELEVATION_HPP_

#include "offroad/core_geometry.hpp"
#include "offroad/errors.hpp"
#include "offroad/format.hpp"

#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

namespace offroad
{

struct ElevationParams
{
  double w1{5.0};
  double w2{1.0};
  double w3{10.0};
  bool mean_center{true};
  std::size_t samples{100};

  void validate() const
  {
    if (!(w1 >= 0.0) || !(w2 >= 0.0) || !(w3 >= 0.0)) {
      throw InvalidInput("elevation weights must be non-negative");
    }
    if (samples < 2) {
      throw InvalidInput("elevation sample count must be at least 2");
    }
  }
};

struct ElevationBreakdown
{
  double mse_z{0.0};
  double rmse_z{0.0};
  double mse_dz{0.0};
  double s_z{0.0};
  double overlap_length{0.0};
};

namespace detail
{

inline double checked_length(const Trajectory & traj, const char * which)
{
  if (traj.size() < 2 || !all_finite(traj)) {
    throw UndefinedMetric(std::string(which) + " trajectory is not valid for elevation scoring");
  }
  const double length = total_xy_length(traj);
  if (!(length > 0.0)) {
    throw UndefinedMetric(std::string(which) + " trajectory has zero XY length");
  }
  return length;
}

inline std::vector<double> z_at(const Trajectory & traj, const std::vector<double> & stations)
{
  std::vector<double> z;
  z.reserve(stations.size());
  for (const auto & w : sample_at_arclength(traj, stations)) {
    z.push_back(w.z);
  }
  return z;
}

inline void center(std::vector<double> & v)
{
  double mean = 0.0;
  for (const double x : v) {
    mean += x;
  }
  mean /= static_cast<double>(v.size());
  for (double & x : v) {
    x -= mean;
  }
}

// Central differences inside, one-sided at both ends.
inline std::vector<double> slopes(const std::vector<double> & z, double step)
{
  const std::size_t m = z.size();
  std::vector<double> dz(m);
  dz[0] = (z[1] - z[0]) / step;
  dz[m - 1] = (z[m - 1] - z[m - 2]) / step;
  for (std::size_t k = 1; k + 1 < m; ++k) {
    dz[k] = (z[k + 1] - z[k - 1]) / (2.0 * step);
  }
  return dz;
}

}  // namespace detail

/// Height and slope agreement over the shared arc-length interval [0, min(L_pred, L_gt)].
/// Throws UndefinedMetric when either trajectory is degenerate.
inline ElevationBreakdown elevation_consistency(
  const Trajectory & pred, const Trajectory & gt, const ElevationParams & params = {})
{
  params.validate();
  const double overlap =
    std::min(detail::checked_length(pred, "predicted"), detail::checked_length(gt, "ground-truth"));
  const auto stations = uniform_stations(overlap, params.samples);

  auto zp = detail::z_at(pred, stations);
  auto zg = detail::z_at(gt, stations);
  if (params.mean_center) {
    detail::center(zp);
    detail::center(zg);
  }
  const double step = overlap / static_cast<double>(params.samples - 1);
  const auto dzp = detail::slopes(zp, step);
  const auto dzg = detail::slopes(zg, step);

  ElevationBreakdown out;
  out.overlap_length = overlap;
  for (std::size_t k = 0; k < params.samples; ++k) {
    out.mse_z += (zp[k] - zg[k]) * (zp[k] - zg[k]);
    out.mse_dz += (dzp[k] - dzg[k]) * (dzp[k] - dzg[k]);
  }
  const auto m = static_cast<double>(params.samples);
  out.mse_z /= m;
  out.mse_dz /= m;
  out.rmse_z = std::sqrt(out.mse_z);
  out.s_z = params.w1 * out.mse_z + params.w2 * out.rmse_z + params.w3 * out.mse_dz;
  return out;
}

struct ProfileSample
{
  double s{0.0};
  double z{0.0};
  double z_rel{0.0};  // z - z at s = 0

  bool operator==(const ProfileSample &) const = default;
};

inline std::vector<ProfileSample> elevation_profile(const Trajectory & traj, std::size_t samples)
{
  if (samples < 2) {
    throw InvalidInput("profile sample count must be at least 2");
  }
  if (traj.size() < 2) {
    throw DegenerateTrajectory("elevation profile requires at least two waypoints");
  }
  const double length = total_xy_length(traj);
  if (!(length > 0.0)) {
    throw DegenerateTrajectory("trajectory has zero XY length");
  }
  const auto stations = uniform_stations(length, samples);
  const auto z = detail::z_at(traj, stations);
  std::vector<ProfileSample> out;
  out.reserve(samples);
  for (std::size_t k = 0; k < samples; ++k) {
    out.push_back({stations[k], z[k], z[k] - z[0]});
  }
  return out;
}

/// CSV with columns s, z_pred, z_gt, z_pred-z0, z_gt-z0 over the overlap interval.
inline std::string elevation_profile_csv(
  const Trajectory & pred, const Trajectory & gt, std::size_t samples)
{
  if (samples < 2) {
    throw InvalidInput("profile sample count must be at least 2");
  }
  const double overlap =
    std::min(detail::checked_length(pred, "predicted"), detail::checked_length(gt, "ground-truth"));
  const auto stations = uniform_stations(overlap, samples);
  const auto zp = detail::z_at(pred, stations);
  const auto zg = detail::z_at(gt, stations);
  std::ostringstream os;
  os << "s,z_pred,z_gt,z_pred-z0,z_gt-z0\n";
  for (std::size_t k = 0; k < samples; ++k) {
    os << format_shortest(stations[k]) << ',' << format_shortest(zp[k]) << ','
       << format_shortest(zg[k]) << ',' << format_shortest(zp[k] - zp[0]) << ','
       << format_shortest(zg[k] - zg[0]) << '\n';
  }
  return os.str();
}

}  // namespace offroad

#endif  // OFFROAD__ELEVATION_HPP_
