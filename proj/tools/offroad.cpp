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


#include "offroad/offroad.hpp"

#include "CLI11.hpp"

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace
{

constexpr int exit_ok = 0;
constexpr int exit_runtime = 1;
constexpr int exit_validation = 2;

offroad::ParamsBundle params_or_default(const std::string & path)
{
  return path.empty() ? offroad::ParamsBundle{} : offroad::load_params(path);
}

std::string csv_xy(const offroad::Trajectory & pred, const offroad::Trajectory & gt)
{
  std::string out = "series,index,x,y,z\n";
  auto emit = [&out](const char * name, const offroad::Trajectory & t) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      out += std::string(name) + "," + std::to_string(i) + "," +
             offroad::format_shortest(t[i].x) + "," + offroad::format_shortest(t[i].y) + "," +
             offroad::format_shortest(t[i].z) + "\n";
    }
  };
  emit("pred", pred);
  emit("gt", gt);
  return out;
}

void write_plots(
  const std::filesystem::path & dir, const offroad::SceneArchive & archive,
  const std::vector<offroad::Prediction> & predictions, const offroad::MetricReport & report,
  std::size_t samples)
{
  std::filesystem::create_directories(dir);
  std::map<std::string, const offroad::Prediction *> by_frame;
  for (const auto & p : predictions) {
    by_frame[p.frame_id] = &p;
  }
  for (const auto & row : report.frames) {
    if (offroad::is_failure(row.status)) {
      continue;
    }
    const auto * pred = by_frame.at(row.frame_id);
    offroad::Trajectory traj = pred->trajectory ? *pred->trajectory
                                                : *offroad::parse_completion(*pred->generated_text)
                                                     .trajectory.trajectory;
    const auto & gt = archive.find_frame(row.frame_id)->gt_trajectory;
    offroad::detail::write_file(dir / (row.frame_id + "_xy.csv"), csv_xy(traj, gt));
    if (row.elevation) {
      offroad::detail::write_file(
        dir / (row.frame_id + "_elevation.csv"), offroad::elevation_profile_csv(traj, gt, samples));
    }
  }
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"Off-road trajectory evaluation and preference-data toolkit"};
  app.require_subcommand(1);

  std::string params_path;
  std::string out_path;
  std::size_t workers = 1;
  auto add_common = [&](CLI::App * cmd) {
    cmd->add_option("--params", params_path, "Parameter file (JSON); defaults apply when absent");
    cmd->add_option("--out", out_path, "Output path")->required();
    cmd->add_option("--workers", workers, "Worker threads")->check(CLI::Range(1, 256));
  };

  // eval
  auto * eval = app.add_subcommand("eval", "Score predictions against an archive");
  add_common(eval);
  std::string archive_dir, predictions_path, split, plots_dir;
  eval->add_option("--archive", archive_dir, "Archive directory")->required();
  eval->add_option("--predictions", predictions_path, "Predictions (JSON lines)")->required();
  eval->add_option("--split", split, "Only score frames from this split");
  eval->add_option("--plots", plots_dir, "Directory for per-frame CSV plot series");

  // mine
  auto * mine = app.add_subcommand("mine", "Build preference pairs with mined hard negatives");
  add_common(mine);
  std::string report_path;
  mine->add_option("--archive", archive_dir, "Archive directory")->required();
  mine->add_option("--report", report_path, "Mining report path");

  // retrieve
  auto * retrieve = app.add_subcommand("retrieve", "Export a refinement bundle for one frame");
  add_common(retrieve);
  std::string query;
  std::size_t k = 5;
  retrieve->add_option("--archive", archive_dir, "Archive directory")->required();
  retrieve->add_option("--query", query, "Frame id")->required();
  retrieve->add_option("-k,--k", k, "Number of neighbors")->check(CLI::PositiveNumber);

  // gen-synthetic
  auto * gen = app.add_subcommand("gen-synthetic", "Write a synthetic archive");
  add_common(gen);
  std::uint64_t seed = 0;
  offroad::SyntheticSpec spec;
  std::string terrain = "obstacle-field";
  std::string self_predictions;
  gen->add_option("--seed", seed, "Random seed");
  gen->add_option("--scenes", spec.scenes, "Scene count")->check(CLI::PositiveNumber);
  gen->add_option("--frames", spec.frames_per_scene, "Frames per scene")
    ->check(CLI::PositiveNumber);
  gen->add_option("--terrain", terrain, "flat | ramp | sine-hill | obstacle-field");
  gen->add_option("--waypoints", spec.waypoints, "Waypoints per trajectory")
    ->check(CLI::PositiveNumber);
  gen->add_option(
    "--self-predictions", self_predictions,
    "Also write predictions equal to the tokenized ground truth");

  // score-orpo
  auto * score = app.add_subcommand("score-orpo", "Odds-ratio preference loss from logprobs");
  add_common(score);
  std::string pairs_path, logprobs_path;
  score->add_option("--pairs", pairs_path, "Preference pairs (JSON lines)")->required();
  score->add_option("--logprobs", logprobs_path, "Recorded log-probabilities (JSON lines)")
    ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp & e) {
    return app.exit(e);
  } catch (const CLI::ParseError & e) {
    app.exit(e);
    return exit_validation;
  }

  try {
    const auto params = params_or_default(params_path);
    if (eval->parsed()) {
      const auto archive = offroad::load_archive(archive_dir);
      const auto predictions = offroad::predictions_from_text(
        offroad::detail::read_file(predictions_path), predictions_path);
      const auto report = offroad::evaluate_batch(
        archive, predictions, params, workers,
        split.empty() ? std::nullopt : std::optional<std::string>(split));
      offroad::detail::write_file(out_path, offroad::report_to_json_text(report));
      if (!plots_dir.empty()) {
        write_plots(plots_dir, archive, predictions, report, params.elevation.samples);
      }
    } else if (mine->parsed()) {
      const auto archive = offroad::load_archive(archive_dir);
      const auto mined = offroad::mine_dataset(archive, params, workers);
      offroad::detail::write_file(out_path, offroad::pairs_to_text(mined.pairs, params.mining));
      if (!report_path.empty()) {
        offroad::detail::write_file(
          report_path, offroad::mining_report_to_text(mined.report, params));
      }
      for (const auto & w : mined.report.warnings) {
        std::cerr << "warning: " << w << "\n";
      }
    } else if (retrieve->parsed()) {
      const auto archive = offroad::load_archive(archive_dir);
      const auto index = offroad::build_index(archive.frames, params.retrieval);
      for (const auto & w : index.warnings) {
        std::cerr << "warning: " << w << "\n";
      }
      const auto * target = archive.find_frame(query);
      if (target == nullptr) {
        throw offroad::NotFound("frame not in archive: " + query);
      }
      const auto neighbors = offroad::retrieve_similar(index, query, k);
      offroad::detail::write_file(
        out_path, offroad::export_refinement_bundle(
                    *target, neighbors, archive.frames, params.bundle_samples));
    } else if (gen->parsed()) {
      spec.terrain = offroad::terrain_from_string(terrain);
      const auto archive = offroad::generate_synthetic(seed, spec);
      offroad::save_archive(archive, out_path);
      if (!self_predictions.empty()) {
        offroad::detail::write_file(
          self_predictions, offroad::predictions_to_text(offroad::self_predictions(archive)));
      }
    } else if (score->parsed()) {
      const auto pairs =
        offroad::pairs_from_text(offroad::detail::read_file(pairs_path), pairs_path);
      const auto policy =
        offroad::logprobs_from_text(offroad::detail::read_file(logprobs_path), logprobs_path);
      const auto result = offroad::score_pairs(policy, pairs, params.orpo);
      offroad::detail::write_file(
        out_path, offroad::orpo_report_to_text(result, pairs, params));
    }
  } catch (const offroad::SchemaError & e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_validation;
  } catch (const offroad::InvalidInput & e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_validation;
  } catch (const offroad::NotFound & e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_validation;
  } catch (const offroad::DegenerateTrajectory & e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_validation;
  } catch (const std::exception & e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_runtime;
  }
  return exit_ok;
}
