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

#ifndef OFFROAD__EVALUATION_HPP_
#define OFFROAD__EVALUATION_HPP_

#include "offroad/archive.hpp"
#include "offroad/elevation.hpp"
#include "offroad/errors.hpp"
#include "offroad/parallel.hpp"
#include "offroad/params_io.hpp"
#include "offroad/planar.hpp"
#include "offroad/tokenizer.hpp"
#include "offroad/traversability.hpp"

#include "json.hpp"

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace offroad
{

/// One generated output. Exactly one of `generated_text` and `trajectory` is set.
struct Prediction
{
  std::string frame_id{};
  std::optional<std::string> generated_text{};
  std::optional<Trajectory> trajectory{};
};

/// Line-delimited {frame_id, generated_text} or {frame_id, trajectory} records. A leading
/// {"schema":"offroad.predictions","version":1} header is accepted but not required.
inline std::vector<Prediction> predictions_from_text(const std::string & text, const std::string & file)
{
  std::vector<Prediction> out;
  std::set<std::string> seen;
  for (const auto & rec : detail::read_jsonl(text, file, "offroad.predictions", true)) {
    detail::only_fields(rec, file, {"frame_id", "generated_text", "trajectory"});
    Prediction p;
    p.frame_id = detail::field<std::string>(rec, file, "frame_id");
    const bool has_text = rec.value.contains("generated_text");
    const bool has_traj = rec.value.contains("trajectory");
    if (has_text == has_traj) {
      throw SchemaError(file, rec.line, "exactly one of generated_text or trajectory is required");
    }
    if (has_text) {
      p.generated_text = detail::field<std::string>(rec, file, "generated_text");
    } else {
      try {
        p.trajectory = trajectory_from_json(rec.value.at("trajectory"));
      } catch (const InvalidInput & e) {
        throw SchemaError(file, rec.line, e.what());
      }
    }
    if (!seen.insert(p.frame_id).second) {
      throw SchemaError(file, rec.line, "duplicate prediction for frame " + p.frame_id);
    }
    out.push_back(std::move(p));
  }
  return out;
}

inline std::string predictions_to_text(std::span<const Prediction> predictions)
{
  std::string out = detail::header_line("offroad.predictions");
  for (const auto & p : predictions) {
    nlohmann::ordered_json j;
    j["frame_id"] = p.frame_id;
    if (p.generated_text) {
      j["generated_text"] = *p.generated_text;
    } else if (p.trajectory) {
      j["trajectory"] = trajectory_to_json(*p.trajectory);
    }
    out += j.dump() + "\n";
  }
  return out;
}

/// Predictions equal to each frame's tokenized ground truth, prefixed with its language.
inline std::vector<Prediction> self_predictions(const SceneArchive & archive)
{
  std::vector<Prediction> out;
  for (const auto & r : archive.frames) {
    out.push_back({r.frame_id, r.language + tokenize_trajectory(r.gt_trajectory), std::nullopt});
  }
  return out;
}

/// Gives an untimed prediction the ground truth's timestamps by index. Waypoints past the end
/// of the ground truth continue at its last interval.
inline Trajectory with_reference_times(const Trajectory & pred, const Trajectory & gt)
{
  if (pred.has_timestamps() || !gt.has_timestamps()) {
    return pred;
  }
  Trajectory out = pred;
  const double last = *gt.waypoints.back().t;
  const double step = gt.size() >= 2 ? last - *gt[gt.size() - 2].t : last;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].t = i < gt.size() ? *gt[i].t : last + step * static_cast<double>(i - gt.size() + 1);
  }
  return out;
}

struct FrameMetrics
{
  std::string scene_id{};
  std::string frame_id{};
  SampleStatus status{SampleStatus::ok};
  std::optional<ParseError> parse_error{};
  std::size_t waypoints{0};
  std::vector<std::optional<double>> l2{};
  std::optional<double> l2_avg{};
  std::optional<TraversabilityResult> traversability{};
  std::optional<ElevationBreakdown> elevation{};
  std::optional<std::string> elevation_missing{};
  std::vector<std::string> notes{};
};

struct MetricAggregates
{
  std::size_t frames{0};
  std::size_t failed{0};
  std::optional<double> failure_rate{};
  std::vector<std::optional<double>> l2_mean{};
  std::vector<std::size_t> l2_scored{};
  std::optional<double> l2_avg_mean{};
  std::optional<double> s_trav_mean{};
  std::size_t s_trav_count{0};
  std::size_t s_trav_degenerate{0};
  std::optional<double> s_z_mean{};
  std::optional<double> mse_z_mean{};
  std::optional<double> rmse_z_mean{};
  std::optional<double> mse_dz_mean{};
  std::size_t elevation_count{0};
  std::size_t elevation_missing{0};
};

struct MetricReport
{
  ParamsBundle params{};
  std::optional<std::string> split{};
  std::vector<FrameMetrics> frames{};
  MetricAggregates aggregates{};
  std::vector<std::string> unknown_frames{};
  std::vector<std::string> missing_predictions{};
};

inline FrameMetrics evaluate_frame(
  const SceneRecord & gt, const Prediction & pred, const ClearanceField & field,
  const ParamsBundle & params)
{
  FrameMetrics m;
  m.scene_id = gt.scene_id;
  m.frame_id = gt.frame_id;

  Trajectory traj;
  if (pred.generated_text) {
    auto parsed = parse_completion(*pred.generated_text);
    if (!parsed.trajectory.ok()) {
      m.status = SampleStatus::parse_failure;
      m.parse_error = parsed.trajectory.error;
      return m;
    }
    traj = std::move(*parsed.trajectory.trajectory);
  } else if (pred.trajectory) {
    traj = *pred.trajectory;
  } else {
    m.status = SampleStatus::parse_failure;
    m.parse_error = ParseError{0, "empty prediction"};
    return m;
  }
  m.waypoints = traj.size();
  if (traj.size() < std::max<std::size_t>(params.min_waypoints, 2)) {
    m.status = SampleStatus::too_few_waypoints;
    return m;
  }
  traj.frame_id = gt.frame_id;

  try {
    const auto timed = params.planar.matching == TimeMatching::by_timestamp
                         ? with_reference_times(traj, gt.gt_trajectory)
                         : traj;
    const auto l2 = l2_errors(timed, gt.gt_trajectory, params.planar);
    m.l2 = l2.per_horizon;
    m.l2_avg = l2.average;
    for (const double h : l2.uncovered) {
      m.notes.push_back("planar: ground truth ends before horizon " + format_shortest(h) + " s");
    }
  } catch (const InvalidInput & e) {
    m.notes.push_back(std::string("planar: ") + e.what());
  }

  m.traversability = traversability_score(traj, field, params.traversability);

  try {
    m.elevation = elevation_consistency(traj, gt.gt_trajectory, params.elevation);
  } catch (const UndefinedMetric & e) {
    m.elevation_missing = e.what();
  }
  return m;
}

namespace detail
{

class Mean
{
public:
  void add(double v)
  {
    sum_ += v;
    ++n_;
  }
  std::optional<double> value() const
  {
    return n_ == 0 ? std::nullopt : std::optional<double>(sum_ / static_cast<double>(n_));
  }
  std::size_t count() const noexcept { return n_; }

private:
  double sum_{0.0};
  std::size_t n_{0};
};

}  // namespace detail

/// Aggregates in row order. Failed rows only count towards the failure rate.
inline MetricAggregates aggregate(std::span<const FrameMetrics> rows, std::size_t horizons)
{
  MetricAggregates a;
  a.frames = rows.size();
  std::vector<detail::Mean> l2(horizons);
  detail::Mean l2_avg, s_trav, s_z, mse_z, rmse_z, mse_dz;
  std::vector<SampleStatus> statuses;
  for (const auto & r : rows) {
    statuses.push_back(r.status);
    if (is_failure(r.status)) {
      ++a.failed;
      continue;
    }
    for (std::size_t h = 0; h < r.l2.size() && h < horizons; ++h) {
      if (r.l2[h]) {
        l2[h].add(*r.l2[h]);
      }
    }
    if (r.l2_avg) {
      l2_avg.add(*r.l2_avg);
    }
    if (r.traversability) {
      s_trav.add(r.traversability->s_trav);
      if (r.traversability->degenerate) {
        ++a.s_trav_degenerate;
      }
    }
    if (r.elevation) {
      s_z.add(r.elevation->s_z);
      mse_z.add(r.elevation->mse_z);
      rmse_z.add(r.elevation->rmse_z);
      mse_dz.add(r.elevation->mse_dz);
    } else {
      ++a.elevation_missing;
    }
  }
  if (!statuses.empty()) {
    a.failure_rate = failure_rate(statuses);
  }
  for (const auto & m : l2) {
    a.l2_mean.push_back(m.value());
    a.l2_scored.push_back(m.count());
  }
  a.l2_avg_mean = l2_avg.value();
  a.s_trav_mean = s_trav.value();
  a.s_trav_count = s_trav.count();
  a.s_z_mean = s_z.value();
  a.mse_z_mean = mse_z.value();
  a.rmse_z_mean = rmse_z.value();
  a.mse_dz_mean = mse_dz.value();
  a.elevation_count = s_z.count();
  return a;
}

/// Parses and scores every prediction whose frame is in the archive (and in `split`, when
/// given). Rows are ordered by (scene_id, frame_id); output does not depend on `workers`.
inline MetricReport evaluate_batch(
  const SceneArchive & archive, std::span<const Prediction> predictions,
  const ParamsBundle & params, std::size_t workers = 1,
  const std::optional<std::string> & split = std::nullopt)
{
  params.validate();
  MetricReport report;
  report.params = params;
  report.split = split;

  std::map<std::string, const SceneRecord *> frames;
  for (const auto & f : archive.frames) {
    if (split) {
      const auto * s = archive.split_of(f.scene_id);
      if (s == nullptr || *s != *split) {
        continue;
      }
    }
    frames[f.frame_id] = &f;
  }

  struct Job
  {
    const SceneRecord * gt;
    const Prediction * pred;
  };
  std::vector<Job> jobs;
  std::set<std::string> predicted;
  for (const auto & p : predictions) {
    predicted.insert(p.frame_id);
    const auto it = frames.find(p.frame_id);
    if (it == frames.end()) {
      report.unknown_frames.push_back(p.frame_id);
      continue;
    }
    jobs.push_back({it->second, &p});
  }
  std::sort(report.unknown_frames.begin(), report.unknown_frames.end());
  std::sort(jobs.begin(), jobs.end(), [](const Job & a, const Job & b) {
    return std::tie(a.gt->scene_id, a.gt->frame_id) < std::tie(b.gt->scene_id, b.gt->frame_id);
  });
  for (const auto & [id, rec] : frames) {
    if (predicted.count(id) == 0) {
      report.missing_predictions.push_back(id);
    }
  }

  std::vector<std::string> scene_ids;
  for (const auto & j : jobs) {
    if (scene_ids.empty() || scene_ids.back() != j.gt->scene_id) {
      scene_ids.push_back(j.gt->scene_id);
    }
  }
  std::vector<ClearanceField> fields(scene_ids.size());
  parallel_for(scene_ids.size(), workers, [&](std::size_t i) {
    const auto it = archive.grids.find(scene_ids[i]);
    if (it == archive.grids.end()) {
      throw InvalidInput("scene " + scene_ids[i] + " has no grid");
    }
    fields[i] = clearance_field(it->second);
  });
  std::map<std::string, const ClearanceField *> field_of;
  for (std::size_t i = 0; i < scene_ids.size(); ++i) {
    field_of[scene_ids[i]] = &fields[i];
  }

  report.frames.resize(jobs.size());
  parallel_for(jobs.size(), workers, [&](std::size_t i) {
    report.frames[i] =
      evaluate_frame(*jobs[i].gt, *jobs[i].pred, *field_of.at(jobs[i].gt->scene_id), params);
  });
  report.aggregates = aggregate(report.frames, params.planar.horizons.size());
  return report;
}

namespace detail
{

template <typename T>
nlohmann::ordered_json opt(const std::optional<T> & v)
{
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

inline nlohmann::ordered_json opt_vec(const std::vector<std::optional<double>> & v)
{
  auto arr = nlohmann::ordered_json::array();
  for (const auto & x : v) {
    arr.push_back(opt(x));
  }
  return arr;
}

}  // namespace detail

inline nlohmann::ordered_json to_json(const FrameMetrics & m)
{
  nlohmann::ordered_json j;
  j["scene_id"] = m.scene_id;
  j["frame_id"] = m.frame_id;
  j["status"] = std::string(to_string(m.status));
  j["failed"] = is_failure(m.status);
  if (m.parse_error) {
    j["parse_error"] = {{"offset", m.parse_error->offset}, {"message", m.parse_error->message}};
  } else {
    j["parse_error"] = nullptr;
  }
  j["waypoints"] = m.waypoints;
  j["l2"] = detail::opt_vec(m.l2);
  j["l2_avg"] = detail::opt(m.l2_avg);
  if (m.traversability) {
    const auto & t = *m.traversability;
    j["traversability"] = {
      {"s_trav", t.s_trav},
      {"s_base", t.s_base},
      {"risk", t.risk},
      {"penalty", t.penalty},
      {"mean_violation_ratio", t.mean_violation_ratio},
      {"violation_ratios", t.violation_ratios},
      {"degenerate", t.degenerate}};
  } else {
    j["traversability"] = nullptr;
  }
  if (m.elevation) {
    const auto & e = *m.elevation;
    j["elevation"] = {
      {"mse_z", e.mse_z},
      {"rmse_z", e.rmse_z},
      {"mse_dz", e.mse_dz},
      {"s_z", e.s_z},
      {"overlap_length", e.overlap_length}};
  } else {
    j["elevation"] = nullptr;
  }
  j["elevation_missing"] = detail::opt(m.elevation_missing);
  j["notes"] = m.notes;
  return j;
}

inline nlohmann::ordered_json to_json(const MetricAggregates & a)
{
  nlohmann::ordered_json j;
  j["frames"] = a.frames;
  j["failed"] = a.failed;
  j["failure_rate"] = detail::opt(a.failure_rate);
  j["l2_mean"] = detail::opt_vec(a.l2_mean);
  j["l2_scored"] = a.l2_scored;
  j["l2_avg_mean"] = detail::opt(a.l2_avg_mean);
  j["s_trav_mean"] = detail::opt(a.s_trav_mean);
  j["s_trav_count"] = a.s_trav_count;
  j["s_trav_degenerate"] = a.s_trav_degenerate;
  j["s_z_mean"] = detail::opt(a.s_z_mean);
  j["mse_z_mean"] = detail::opt(a.mse_z_mean);
  j["rmse_z_mean"] = detail::opt(a.rmse_z_mean);
  j["mse_dz_mean"] = detail::opt(a.mse_dz_mean);
  j["elevation_count"] = a.elevation_count;
  j["elevation_missing"] = a.elevation_missing;
  return j;
}

inline std::string report_to_json_text(const MetricReport & r)
{
  nlohmann::ordered_json j;
  j["schema"] = "offroad.metric_report";
  j["version"] = 1;
  j["l2_mode"] = r.params.planar.use_3d ? "3d" : "xy";
  j["split"] = detail::opt(r.split);
  j["params"] = to_json(r.params);
  j["aggregates"] = to_json(r.aggregates);
  auto rows = nlohmann::ordered_json::array();
  for (const auto & f : r.frames) {
    rows.push_back(to_json(f));
  }
  j["frames"] = std::move(rows);
  j["unknown_frames"] = r.unknown_frames;
  j["missing_predictions"] = r.missing_predictions;
  return j.dump(2) + "\n";
}

}  // namespace offroad

#endif  // OFFROAD__EVALUATION_HPP_
