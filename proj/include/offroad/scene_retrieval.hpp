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

#ifndef OFFROAD__SCENE_RETRIEVAL_HPP_
#define OFFROAD__SCENE_RETRIEVAL_HPP_

#include "offroad/core_geometry.hpp"
#include "offroad/elevation.hpp"
#include "offroad/errors.hpp"
#include "offroad/preference_mining.hpp"

#include "json.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace offroad
{

struct SceneIndexEntry
{
  std::string scene_id{};
  std::string frame_id{};
  MotionFeatures features{};
  std::vector<double> raw{};
  std::vector<double> normalized{};
};

/// Exact linear-scan index over z-scored motion features. Dimensions whose batch standard
/// deviation is zero (to 1e-12 relative) normalize to 0.
struct SceneIndex
{
  std::vector<SceneIndexEntry> entries{};
  std::vector<double> mean{};
  std::vector<double> stdev{};
  MotionFeatureParams feature_params{};
  std::vector<std::string> warnings{};

  const SceneIndexEntry * find(const std::string & frame_id) const
  {
    const auto it = by_frame_.find(frame_id);
    return it == by_frame_.end() ? nullptr : &entries[it->second];
  }

  std::map<std::string, std::size_t> by_frame_{};
};

/// [total_xy_length, mean_abs_curvature, max_abs_curvature, net_heading_change, profile...]
inline std::vector<double> feature_vector(const MotionFeatures & f)
{
  std::vector<double> v{
    f.total_xy_length, f.mean_abs_curvature, f.max_abs_curvature, f.net_heading_change};
  v.insert(v.end(), f.elevation_profile.begin(), f.elevation_profile.end());
  return v;
}

inline SceneIndex build_index(
  std::span<const SceneRecord> records, const MotionFeatureParams & params = {})
{
  SceneIndex index;
  index.feature_params = params;
  for (const auto & r : records) {
    if (!valid_for_mining(r.gt_trajectory) || !(total_xy_length(r.gt_trajectory) > 0.0)) {
      index.warnings.push_back("skipped frame " + r.frame_id + ": trajectory not indexable");
      continue;
    }
    if (index.by_frame_.count(r.frame_id) != 0) {
      throw InvalidInput("duplicate frame_id in index: " + r.frame_id);
    }
    SceneIndexEntry e;
    e.scene_id = r.scene_id;
    e.frame_id = r.frame_id;
    e.features = motion_features(r.gt_trajectory, params);
    e.raw = feature_vector(e.features);
    index.by_frame_[r.frame_id] = index.entries.size();
    index.entries.push_back(std::move(e));
  }
  if (index.entries.size() < 2) {
    index.warnings.push_back("index too small: fewer than two indexable records");
  }
  if (index.entries.empty()) {
    return index;
  }

  const std::size_t dims = index.entries.front().raw.size();
  const auto n = static_cast<double>(index.entries.size());
  index.mean.assign(dims, 0.0);
  index.stdev.assign(dims, 0.0);
  for (const auto & e : index.entries) {
    for (std::size_t d = 0; d < dims; ++d) {
      index.mean[d] += e.raw[d];
    }
  }
  for (double & m : index.mean) {
    m /= n;
  }
  for (const auto & e : index.entries) {
    for (std::size_t d = 0; d < dims; ++d) {
      const double dev = e.raw[d] - index.mean[d];
      index.stdev[d] += dev * dev;
    }
  }
  for (std::size_t d = 0; d < dims; ++d) {
    index.stdev[d] = std::sqrt(index.stdev[d] / n);
    if (index.stdev[d] <= 1e-12 * std::max(1.0, std::abs(index.mean[d]))) {
      index.stdev[d] = 0.0;
    }
  }
  for (auto & e : index.entries) {
    e.normalized.resize(dims);
    for (std::size_t d = 0; d < dims; ++d) {
      e.normalized[d] =
        index.stdev[d] == 0.0 ? 0.0 : (e.raw[d] - index.mean[d]) / index.stdev[d];
    }
  }
  return index;
}

struct Neighbor
{
  std::string scene_id{};
  std::string frame_id{};
  double distance{0.0};
};

inline double feature_distance(const std::vector<double> & a, const std::vector<double> & b)
{
  double acc = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double diff = a[d] - b[d];
    acc += diff * diff;
  }
  return std::sqrt(acc);
}

/// k nearest entries to `query_frame` in normalized feature space, self excluded, ordered by
/// (distance, frame_id).
inline std::vector<Neighbor> retrieve_similar(
  const SceneIndex & index, const std::string & query_frame, std::size_t k)
{
  if (k < 1) {
    throw InvalidInput("k must be at least 1");
  }
  const auto * query = index.find(query_frame);
  if (query == nullptr) {
    throw NotFound("frame not in index: " + query_frame);
  }
  std::vector<Neighbor> all;
  all.reserve(index.entries.size());
  for (const auto & e : index.entries) {
    if (e.frame_id == query_frame) {
      continue;
    }
    all.push_back({e.scene_id, e.frame_id, feature_distance(query->normalized, e.normalized)});
  }
  const std::size_t take = std::min(k, all.size());
  auto less = [](const Neighbor & a, const Neighbor & b) {
    return a.distance < b.distance || (a.distance == b.distance && a.frame_id < b.frame_id);
  };
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take), all.end(), less);
  all.resize(take);
  return all;
}

// Bundle document, version 1:
//
//   schema            "offroad.refinement_bundle"
//   version           1
//   scene_id, frame_id, image_ref
//   original_language the frame's current annotation
//   target_xy         [[x, y], ...] waypoints as recorded
//   target_elevation  [[s, z, z - z0], ...] at uniform XY arc length
//   neighbors         [{rank, scene_id, frame_id, distance, language, xy, elevation}, ...]
//
// These cues are for an external annotator only and never enter pair prompts.

struct BundleTrack
{
  std::vector<std::array<double, 2>> xy{};
  std::vector<ProfileSample> elevation{};

  bool operator==(const BundleTrack &) const = default;
};

struct BundleNeighbor
{
  std::size_t rank{0};
  std::string scene_id{};
  std::string frame_id{};
  double distance{0.0};
  std::string language{};
  BundleTrack track{};

  bool operator==(const BundleNeighbor &) const = default;
};

struct RefinementBundle
{
  std::string scene_id{};
  std::string frame_id{};
  std::string image_ref{};
  std::string original_language{};
  BundleTrack target{};
  std::vector<BundleNeighbor> neighbors{};

  bool operator==(const RefinementBundle &) const = default;
};

namespace detail
{

inline BundleTrack make_track(const Trajectory & traj, std::size_t samples)
{
  BundleTrack t;
  for (const auto & w : traj.waypoints) {
    t.xy.push_back({w.x, w.y});
  }
  t.elevation = elevation_profile(traj, samples);
  return t;
}

inline nlohmann::ordered_json track_xy_json(const BundleTrack & t)
{
  auto xy = nlohmann::ordered_json::array();
  for (const auto & p : t.xy) {
    xy.push_back({p[0], p[1]});
  }
  return xy;
}

inline nlohmann::ordered_json track_elevation_json(const BundleTrack & t)
{
  auto el = nlohmann::ordered_json::array();
  for (const auto & s : t.elevation) {
    el.push_back({s.s, s.z, s.z_rel});
  }
  return el;
}

inline BundleTrack track_from_json(const nlohmann::json & xy, const nlohmann::json & el)
{
  BundleTrack t;
  for (const auto & p : xy) {
    t.xy.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  }
  for (const auto & s : el) {
    t.elevation.push_back({s.at(0).get<double>(), s.at(1).get<double>(), s.at(2).get<double>()});
  }
  return t;
}

}  // namespace detail

inline RefinementBundle make_refinement_bundle(
  const SceneRecord & target, std::span<const Neighbor> neighbors,
  std::span<const SceneRecord> records, std::size_t profile_samples = 32)
{
  std::map<std::string, const SceneRecord *> lookup;
  for (const auto & r : records) {
    lookup[r.frame_id] = &r;
  }
  RefinementBundle b;
  b.scene_id = target.scene_id;
  b.frame_id = target.frame_id;
  b.image_ref = target.image_ref;
  b.original_language = target.language;
  b.target = detail::make_track(target.gt_trajectory, profile_samples);
  std::size_t rank = 1;
  for (const auto & n : neighbors) {
    const auto it = lookup.find(n.frame_id);
    if (it == lookup.end()) {
      throw NotFound("neighbor frame not among records: " + n.frame_id);
    }
    b.neighbors.push_back({rank++, n.scene_id, n.frame_id, n.distance, it->second->language,
                           detail::make_track(it->second->gt_trajectory, profile_samples)});
  }
  return b;
}

inline std::string to_json_text(const RefinementBundle & b)
{
  nlohmann::ordered_json j;
  j["schema"] = "offroad.refinement_bundle";
  j["version"] = 1;
  j["scene_id"] = b.scene_id;
  j["frame_id"] = b.frame_id;
  j["image_ref"] = b.image_ref;
  j["original_language"] = b.original_language;
  j["target_xy"] = detail::track_xy_json(b.target);
  j["target_elevation"] = detail::track_elevation_json(b.target);
  auto ns = nlohmann::ordered_json::array();
  for (const auto & n : b.neighbors) {
    nlohmann::ordered_json e;
    e["rank"] = n.rank;
    e["scene_id"] = n.scene_id;
    e["frame_id"] = n.frame_id;
    e["distance"] = n.distance;
    e["language"] = n.language;
    e["xy"] = detail::track_xy_json(n.track);
    e["elevation"] = detail::track_elevation_json(n.track);
    ns.push_back(std::move(e));
  }
  j["neighbors"] = std::move(ns);
  return j.dump(2) + "\n";
}

inline RefinementBundle parse_refinement_bundle(const std::string & text)
{
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    if (j.at("schema").get<std::string>() != "offroad.refinement_bundle" ||
        j.at("version").get<int>() != 1) {
      throw SchemaError("bundle", 0, "unsupported bundle schema or version");
    }
    RefinementBundle b;
    b.scene_id = j.at("scene_id").get<std::string>();
    b.frame_id = j.at("frame_id").get<std::string>();
    b.image_ref = j.at("image_ref").get<std::string>();
    b.original_language = j.at("original_language").get<std::string>();
    b.target = detail::track_from_json(j.at("target_xy"), j.at("target_elevation"));
    for (const auto & n : j.at("neighbors")) {
      b.neighbors.push_back({n.at("rank").get<std::size_t>(), n.at("scene_id").get<std::string>(),
                             n.at("frame_id").get<std::string>(), n.at("distance").get<double>(),
                             n.at("language").get<std::string>(),
                             detail::track_from_json(n.at("xy"), n.at("elevation"))});
    }
    return b;
  } catch (const nlohmann::json::exception & e) {
    throw SchemaError("bundle", 0, e.what());
  }
}

/// Bundle text for `target` and its retrieved neighbors.
inline std::string export_refinement_bundle(
  const SceneRecord & target, std::span<const Neighbor> neighbors,
  std::span<const SceneRecord> records, std::size_t profile_samples = 32)
{
  return to_json_text(make_refinement_bundle(target, neighbors, records, profile_samples));
}

}  // namespace offroad

#endif  // OFFROAD__SCENE_RETRIEVAL_HPP_
