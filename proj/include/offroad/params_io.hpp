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

#ifndef OFFROAD__PARAMS_IO_HPP_
#define OFFROAD__PARAMS_IO_HPP_

#include "offroad/core_geometry.hpp"
#include "offroad/elevation.hpp"
#include "offroad/errors.hpp"
#include "offroad/orpo.hpp"
#include "offroad/planar.hpp"
#include "offroad/preference_mining.hpp"
#include "offroad/traversability.hpp"

#include "json.hpp"

#include <cstddef>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>

namespace offroad
{

/// Every tunable in one place. Defaults follow the published constants where they exist
/// (alpha = 3, K = 20, weights 5/1/10) and documented choices elsewhere.
struct ParamsBundle
{
  TraversabilityParams traversability{};
  ElevationParams elevation{};
  PlanarParams planar{};
  MiningParams mining{};
  OrpoParams orpo{};
  std::size_t min_waypoints{2};
  MotionFeatureParams retrieval{};
  std::size_t bundle_samples{32};

  void validate() const
  {
    traversability.validate();
    elevation.validate();
    planar.validate();
    mining.validate();
    orpo.validate();
    if (retrieval.profile_samples < 2) {
      throw InvalidInput("retrieval profile_samples must be at least 2");
    }
    if (bundle_samples < 2) {
      throw InvalidInput("bundle_samples must be at least 2");
    }
  }
};

inline nlohmann::ordered_json to_json(const ParamsBundle & p)
{
  nlohmann::ordered_json j;
  j["traversability"] = {
    {"alpha", p.traversability.alpha},
    {"K", p.traversability.top_k},
    {"thresholds", p.traversability.thresholds},
    {"lambda_penalty", p.traversability.lambda_penalty}};
  j["elevation"] = {
    {"w1", p.elevation.w1},
    {"w2", p.elevation.w2},
    {"w3", p.elevation.w3},
    {"mean_center", p.elevation.mean_center},
    {"samples", p.elevation.samples}};
  nlohmann::ordered_json planar = {
    {"horizons", p.planar.horizons},
    {"matching", std::string(to_string(p.planar.matching))},
    {"index_rate", nullptr},
    {"use_3d", p.planar.use_3d}};
  if (p.planar.index_rate) {
    planar["index_rate"] = *p.planar.index_rate;
  }
  j["planar"] = std::move(planar);
  j["mining"] = {
    {"lambda_geo", p.mining.lambda_geo},
    {"samples", p.mining.samples},
    {"min_candidates", p.mining.min_candidates},
    {"instruction", p.mining.instruction}};
  j["orpo"] = {
    {"lambda_orpo", p.orpo.lambda_orpo}, {"length_normalize", p.orpo.length_normalize}};
  j["failure"] = {{"min_waypoints", p.min_waypoints}};
  j["retrieval"] = {
    {"profile_samples", p.retrieval.profile_samples},
    {"straight_threshold", p.retrieval.straight_threshold},
    {"bundle_samples", p.bundle_samples}};
  return j;
}

namespace detail
{

inline void only_keys(
  const nlohmann::json & j, const std::string & section, std::initializer_list<const char *> keys)
{
  if (!j.is_object()) {
    throw InvalidInput("params section \"" + section + "\" must be an object");
  }
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto & [k, v] : j.items()) {
    if (allowed.count(k) == 0) {
      throw InvalidInput("unknown params key \"" + section + (section.empty() ? "" : ".") + k + "\"");
    }
  }
}

template <typename T>
void read_if(const nlohmann::json & j, const char * key, T & out)
{
  if (j.contains(key)) {
    out = j.at(key).get<T>();
  }
}

}  // namespace detail

/// Reads a params document. Missing keys keep defaults; unknown keys are rejected.
inline ParamsBundle params_from_json(const nlohmann::json & j)
{
  ParamsBundle p;
  try {
    detail::only_keys(
      j, "", {"traversability", "elevation", "planar", "mining", "orpo", "failure", "retrieval"});
    if (j.contains("traversability")) {
      const auto & t = j.at("traversability");
      detail::only_keys(t, "traversability", {"alpha", "K", "thresholds", "lambda_penalty"});
      detail::read_if(t, "alpha", p.traversability.alpha);
      detail::read_if(t, "K", p.traversability.top_k);
      detail::read_if(t, "thresholds", p.traversability.thresholds);
      detail::read_if(t, "lambda_penalty", p.traversability.lambda_penalty);
    }
    if (j.contains("elevation")) {
      const auto & e = j.at("elevation");
      detail::only_keys(e, "elevation", {"w1", "w2", "w3", "mean_center", "samples"});
      detail::read_if(e, "w1", p.elevation.w1);
      detail::read_if(e, "w2", p.elevation.w2);
      detail::read_if(e, "w3", p.elevation.w3);
      detail::read_if(e, "mean_center", p.elevation.mean_center);
      detail::read_if(e, "samples", p.elevation.samples);
    }
    if (j.contains("planar")) {
      const auto & pl = j.at("planar");
      detail::only_keys(pl, "planar", {"horizons", "matching", "index_rate", "use_3d"});
      detail::read_if(pl, "horizons", p.planar.horizons);
      detail::read_if(pl, "use_3d", p.planar.use_3d);
      if (pl.contains("matching")) {
        const auto m = pl.at("matching").get<std::string>();
        if (m == "by_timestamp") {
          p.planar.matching = TimeMatching::by_timestamp;
        } else if (m == "by_index") {
          p.planar.matching = TimeMatching::by_index;
        } else {
          throw InvalidInput("planar.matching must be by_timestamp or by_index");
        }
      }
      if (pl.contains("index_rate") && !pl.at("index_rate").is_null()) {
        p.planar.index_rate = pl.at("index_rate").get<double>();
      }
    }
    if (j.contains("mining")) {
      const auto & m = j.at("mining");
      detail::only_keys(m, "mining", {"lambda_geo", "samples", "min_candidates", "instruction"});
      detail::read_if(m, "lambda_geo", p.mining.lambda_geo);
      detail::read_if(m, "samples", p.mining.samples);
      detail::read_if(m, "min_candidates", p.mining.min_candidates);
      detail::read_if(m, "instruction", p.mining.instruction);
    }
    if (j.contains("orpo")) {
      const auto & o = j.at("orpo");
      detail::only_keys(o, "orpo", {"lambda_orpo", "length_normalize"});
      detail::read_if(o, "lambda_orpo", p.orpo.lambda_orpo);
      detail::read_if(o, "length_normalize", p.orpo.length_normalize);
    }
    if (j.contains("failure")) {
      const auto & f = j.at("failure");
      detail::only_keys(f, "failure", {"min_waypoints"});
      detail::read_if(f, "min_waypoints", p.min_waypoints);
    }
    if (j.contains("retrieval")) {
      const auto & r = j.at("retrieval");
      detail::only_keys(r, "retrieval", {"profile_samples", "straight_threshold", "bundle_samples"});
      detail::read_if(r, "profile_samples", p.retrieval.profile_samples);
      detail::read_if(r, "straight_threshold", p.retrieval.straight_threshold);
      detail::read_if(r, "bundle_samples", p.bundle_samples);
    }
  } catch (const nlohmann::json::exception & e) {
    throw InvalidInput(std::string("params: ") + e.what());
  }
  p.validate();
  return p;
}

inline ParamsBundle load_params(const std::string & path)
{
  std::ifstream in(path);
  if (!in) {
    throw SchemaError(path, 0, "cannot open params file");
  }
  try {
    return params_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error & e) {
    throw SchemaError(path, 0, e.what());
  } catch (const InvalidInput & e) {
    throw SchemaError(path, 0, e.what());
  }
}

}  // namespace offroad

#endif  // OFFROAD__PARAMS_IO_HPP_
