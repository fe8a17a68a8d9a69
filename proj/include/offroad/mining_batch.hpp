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

#ifndef OFFROAD__MINING_BATCH_HPP_
#define OFFROAD__MINING_BATCH_HPP_

#include "offroad/archive.hpp"
#include "offroad/errors.hpp"
#include "offroad/orpo.hpp"
#include "offroad/parallel.hpp"
#include "offroad/params_io.hpp"
#include "offroad/preference_mining.hpp"

#include "json.hpp"

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace offroad
{

struct MiningReport
{
  std::size_t frames{0};
  std::size_t eligible{0};
  std::size_t pairs{0};
  std::size_t skipped_no_candidate{0};
  std::size_t dropped_zero_margin{0};
  std::vector<std::string> warnings{};
};

struct MiningOutput
{
  std::vector<PreferencePair> pairs{};
  MiningReport report{};
};

/// One pair per eligible frame, mined from the frame's own scene. Pairs are ordered by
/// (scene_id, frame_id) of the target.
inline MiningOutput mine_dataset(
  const SceneArchive & archive, const ParamsBundle & params, std::size_t workers = 1)
{
  params.validate();
  std::map<std::string, std::vector<SceneRecord>> by_scene;
  for (const auto & r : archive.frames) {
    by_scene[r.scene_id].push_back(r);
  }
  struct Job
  {
    const SceneRecord * target;
    const std::vector<SceneRecord> * pool;
  };
  std::vector<Job> jobs;
  for (auto & [scene, frames] : by_scene) {
    std::sort(frames.begin(), frames.end(), [](const SceneRecord & a, const SceneRecord & b) {
      return a.frame_id < b.frame_id;
    });
    for (const auto & f : frames) {
      jobs.push_back({&f, &frames});
    }
  }

  enum class Outcome { ineligible, no_candidate, zero_margin, paired };
  std::vector<Outcome> outcomes(jobs.size(), Outcome::ineligible);
  std::vector<std::optional<PreferencePair>> pairs(jobs.size());
  parallel_for(jobs.size(), workers, [&](std::size_t i) {
    const auto & target = *jobs[i].target;
    if (!mining_eligible(target)) {
      return;
    }
    const auto negative = mine_hard_negative(target, *jobs[i].pool, params.mining);
    if (!negative) {
      outcomes[i] = Outcome::no_candidate;
      return;
    }
    pairs[i] = build_pair(target, *negative, params.mining);
    outcomes[i] = pairs[i] ? Outcome::paired : Outcome::zero_margin;
  });

  MiningOutput out;
  out.report.frames = jobs.size();
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    switch (outcomes[i]) {
      case Outcome::ineligible:
        break;
      case Outcome::no_candidate:
        ++out.report.eligible;
        ++out.report.skipped_no_candidate;
        break;
      case Outcome::zero_margin:
        ++out.report.eligible;
        ++out.report.dropped_zero_margin;
        break;
      case Outcome::paired:
        ++out.report.eligible;
        out.pairs.push_back(std::move(*pairs[i]));
        break;
    }
  }
  out.report.pairs = out.pairs.size();
  if (out.pairs.empty()) {
    out.report.warnings.push_back("no preference pairs were produced");
  }
  return out;
}

inline nlohmann::ordered_json to_json(const PreferencePair & p, const MiningParams & params)
{
  nlohmann::ordered_json j;
  j["target"] = {{"scene_id", p.target_scene_id}, {"frame_id", p.target_frame_id}};
  j["prompt"] = p.prompt;
  j["chosen"] = p.chosen;
  j["rejected"] = p.rejected;
  j["negative_source"] = {{"scene_id", p.negative_scene_id}, {"frame_id", p.negative_frame_id}};
  j["score"] = p.score;
  j["params"] = {{"lambda_geo", params.lambda_geo}, {"samples", params.samples}};
  return j;
}

/// Header line, then one pair per line.
inline std::string pairs_to_text(std::span<const PreferencePair> pairs, const MiningParams & params)
{
  std::string out = detail::header_line("offroad.preference_pairs");
  for (const auto & p : pairs) {
    out += to_json(p, params).dump() + "\n";
  }
  return out;
}

inline std::vector<PreferencePair> pairs_from_text(const std::string & text, const std::string & file)
{
  std::vector<PreferencePair> out;
  for (const auto & rec : detail::read_jsonl(text, file, "offroad.preference_pairs")) {
    detail::only_fields(
      rec, file, {"target", "prompt", "chosen", "rejected", "negative_source", "score", "params"});
    PreferencePair p;
    try {
      const auto & t = rec.value.at("target");
      const auto & n = rec.value.at("negative_source");
      p.target_scene_id = t.at("scene_id").get<std::string>();
      p.target_frame_id = t.at("frame_id").get<std::string>();
      p.negative_scene_id = n.at("scene_id").get<std::string>();
      p.negative_frame_id = n.at("frame_id").get<std::string>();
      p.prompt = rec.value.at("prompt").get<std::string>();
      p.chosen = rec.value.at("chosen").get<std::string>();
      p.rejected = rec.value.at("rejected").get<std::string>();
      p.score = rec.value.at("score").get<double>();
    } catch (const nlohmann::json::exception & e) {
      throw SchemaError(file, rec.line, e.what());
    }
    out.push_back(std::move(p));
  }
  return out;
}

inline std::string mining_report_to_text(const MiningReport & r, const ParamsBundle & params)
{
  nlohmann::ordered_json j;
  j["schema"] = "offroad.mining_report";
  j["version"] = 1;
  j["params"] = to_json(params);
  j["frames"] = r.frames;
  j["eligible"] = r.eligible;
  j["pairs"] = r.pairs;
  j["skipped_no_candidate"] = r.skipped_no_candidate;
  j["dropped_zero_margin"] = r.dropped_zero_margin;
  j["warnings"] = r.warnings;
  return j.dump(2) + "\n";
}

/// Log-probability triples {prompt, target, token_logprobs} as dumped by an external policy.
inline RecordedPolicy logprobs_from_text(const std::string & text, const std::string & file)
{
  RecordedPolicy policy;
  for (const auto & rec : detail::read_jsonl(text, file, "offroad.logprobs")) {
    detail::only_fields(rec, file, {"prompt", "target", "token_logprobs"});
    try {
      policy.add(
        detail::field<std::string>(rec, file, "prompt"),
        detail::field<std::string>(rec, file, "target"),
        SequenceLogProb{detail::field<std::vector<double>>(rec, file, "token_logprobs")});
    } catch (const InvalidInput & e) {
      throw SchemaError(file, rec.line, e.what());
    }
  }
  return policy;
}

struct OrpoScoreReport
{
  std::vector<OrpoBreakdown> per_pair{};
  std::optional<double> mean_total{};
  std::optional<double> mean_sft{};
  std::optional<double> mean_odds{};
};

inline OrpoScoreReport score_pairs(
  const PolicyAdapter & policy, std::span<const PreferencePair> pairs, const OrpoParams & params)
{
  params.validate();
  OrpoScoreReport r;
  double total = 0.0, sft = 0.0, odds_term = 0.0;
  for (const auto & p : pairs) {
    const auto b = orpo_for_pair(policy, p, params);
    total += b.total;
    sft += b.sft;
    odds_term += b.odds;
    r.per_pair.push_back(b);
  }
  if (!pairs.empty()) {
    const auto n = static_cast<double>(pairs.size());
    r.mean_total = total / n;
    r.mean_sft = sft / n;
    r.mean_odds = odds_term / n;
  }
  return r;
}

inline std::string orpo_report_to_text(
  const OrpoScoreReport & r, std::span<const PreferencePair> pairs, const ParamsBundle & params)
{
  auto opt = [](const std::optional<double> & v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
  };
  nlohmann::ordered_json j;
  j["schema"] = "offroad.orpo_report";
  j["version"] = 1;
  j["params"] = to_json(params);
  j["pairs"] = pairs.size();
  j["mean_total"] = opt(r.mean_total);
  j["mean_sft"] = opt(r.mean_sft);
  j["mean_odds"] = opt(r.mean_odds);
  auto rows = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < r.per_pair.size(); ++i) {
    const auto & b = r.per_pair[i];
    rows.push_back(
      {{"scene_id", pairs[i].target_scene_id},
       {"frame_id", pairs[i].target_frame_id},
       {"sft", b.sft},
       {"odds", b.odds},
       {"total", b.total},
       {"log_odds_chosen", b.log_odds_chosen},
       {"log_odds_rejected", b.log_odds_rejected}});
  }
  j["per_pair"] = std::move(rows);
  return j.dump(2) + "\n";
}

}  // namespace offroad

#endif  // OFFROAD__MINING_BATCH_HPP_
