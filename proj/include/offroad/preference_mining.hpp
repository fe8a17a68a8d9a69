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

#ifndef OFFROAD__PREFERENCE_MINING_HPP_
#define OFFROAD__PREFERENCE_MINING_HPP_

#include "offroad/core_geometry.hpp"
#include "offroad/errors.hpp"
#include "offroad/tokenizer.hpp"

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace offroad
{

struct SceneRecord
{
  std::string scene_id{};
  std::string frame_id{};
  std::string image_ref{};
  std::string language{};
  Trajectory gt_trajectory{};

  bool operator==(const SceneRecord &) const = default;
};

inline constexpr std::string_view default_instruction =
  "Describe the driving scene, then output the future ego trajectory as 3D waypoints.";

struct MiningParams
{
  double lambda_geo{1.0};
  std::size_t samples{32};
  std::size_t min_candidates{1};
  std::string instruction{default_instruction};

  void validate() const
  {
    if (!(lambda_geo >= 0.0) || !std::isfinite(lambda_geo)) {
      throw InvalidInput("lambda_geo must be non-negative");
    }
    if (samples < 2) {
      throw InvalidInput("mining resample count must be at least 2");
    }
  }
};

/// Non-empty language, at least two finite waypoints and a positive XY length.
inline bool mining_eligible(const SceneRecord & r)
{
  return !r.language.empty() && valid_for_mining(r.gt_trajectory) &&
         total_xy_length(r.gt_trajectory) > 0.0;
}

namespace detail
{

inline double score_resampled(
  const Trajectory & candidate, const Trajectory & gt, double lambda_geo)
{
  double dz = 0.0;
  double dxy = 0.0;
  for (std::size_t i = 0; i < candidate.size(); ++i) {
    dz += std::abs(candidate[i].z - gt[i].z);
    dxy += std::hypot(candidate[i].x - gt[i].x, candidate[i].y - gt[i].y);
  }
  const auto m = static_cast<double>(candidate.size());
  return dz / m - lambda_geo * (dxy / m);
}

inline std::optional<Trajectory> try_resample(const Trajectory & traj, std::size_t count)
{
  if (!valid_for_mining(traj) || !(total_xy_length(traj) > 0.0)) {
    return std::nullopt;
  }
  return resample_by_arclength(traj, count);
}

}  // namespace detail

/// Mean |dz| minus lambda_geo times mean XY distance over index-aligned waypoints, after both
/// trajectories are resampled to `params.samples` points by arc length. Rewards elevation
/// disagreement and penalizes planar disagreement. Returns nullopt for a degenerate candidate.
inline std::optional<double> negative_score(
  const Trajectory & candidate, const Trajectory & gt, const MiningParams & params = {})
{
  params.validate();
  const auto gt_rs = detail::try_resample(gt, params.samples);
  if (!gt_rs) {
    throw DegenerateTrajectory("ground-truth trajectory is degenerate");
  }
  const auto cand_rs = detail::try_resample(candidate, params.samples);
  if (!cand_rs) {
    return std::nullopt;
  }
  return detail::score_resampled(*cand_rs, *gt_rs, params.lambda_geo);
}

struct MinedNegative
{
  Trajectory trajectory{};
  std::string scene_id{};
  std::string frame_id{};
  double score{0.0};
};

/// Scans the pool for the highest-scoring candidate from the target's scene. The target itself,
/// other scenes and ineligible frames are skipped. Ties go to the smallest frame_id.
inline std::optional<MinedNegative> mine_hard_negative(
  const SceneRecord & target, std::span<const SceneRecord> pool, const MiningParams & params = {})
{
  params.validate();
  if (!mining_eligible(target)) {
    return std::nullopt;
  }
  const auto gt_rs = resample_by_arclength(target.gt_trajectory, params.samples);

  const SceneRecord * best = nullptr;
  double best_score = 0.0;
  std::size_t candidates = 0;
  for (const auto & cand : pool) {
    if (cand.scene_id != target.scene_id || cand.frame_id == target.frame_id ||
        !mining_eligible(cand)) {
      continue;
    }
    ++candidates;
    const auto cand_rs = resample_by_arclength(cand.gt_trajectory, params.samples);
    const double score = detail::score_resampled(cand_rs, gt_rs, params.lambda_geo);
    if (best == nullptr || score > best_score ||
        (score == best_score && cand.frame_id < best->frame_id)) {
      best = &cand;
      best_score = score;
    }
  }
  if (best == nullptr || candidates < params.min_candidates) {
    return std::nullopt;
  }
  return MinedNegative{best->gt_trajectory, best->scene_id, best->frame_id, best_score};
}

struct PreferencePair
{
  std::string target_scene_id{};
  std::string target_frame_id{};
  std::string prompt{};
  std::string chosen{};
  std::string rejected{};
  std::string negative_scene_id{};
  std::string negative_frame_id{};
  double score{0.0};

  bool operator==(const PreferencePair &) const = default;
};

/// The prompt carries only the image reference and the instruction.
inline std::string build_prompt(const std::string & image_ref, const std::string & instruction)
{
  return "<image>" + image_ref + "</image>\n" + instruction;
}

/// Chosen is language + tokenized ground truth; rejected swaps in the mined trajectory.
/// Returns nullopt when both completions quantize to the same text.
inline std::optional<PreferencePair> build_pair(
  const SceneRecord & target, const MinedNegative & negative, const MiningParams & params = {})
{
  PreferencePair pair;
  pair.target_scene_id = target.scene_id;
  pair.target_frame_id = target.frame_id;
  pair.prompt = build_prompt(target.image_ref, params.instruction);
  pair.chosen = target.language + tokenize_trajectory(target.gt_trajectory);
  pair.rejected = target.language + tokenize_trajectory(negative.trajectory);
  pair.negative_scene_id = negative.scene_id;
  pair.negative_frame_id = negative.frame_id;
  pair.score = negative.score;
  if (pair.chosen == pair.rejected) {
    return std::nullopt;
  }
  return pair;
}

}  // namespace offroad

#endif  // OFFROAD__PREFERENCE_MINING_HPP_
