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

// Scene archive on disk, version 1. A directory holding:
//
//   manifest.jsonl   header {"schema":"offroad.manifest","version":1}, then one line per scene:
//                    {"scene_id", "split": train|val|test, "grid": relative path, "frames": [ids]}
//   frames.jsonl     header {"schema":"offroad.frames","version":1}, then one line per frame:
//                    {"scene_id", "frame_id", "image_ref", "language",
//                     "trajectory": [[x, y, z] or [x, y, z, t], ...]}
//   grids/*.grid     "offroad-grid 1", "width W", "height H", "resolution R", "origin X Y",
//                    then H rows (row 0 first) of W characters, '0' traversable,
//                    '1' non-traversable.
//
// Frame ids are unique across the whole archive. All frames of a scene share the scene's
// ego frame, which is also the frame of the scene's grid.

#ifndef OFFROAD__ARCHIVE_HPP_
#define OFFROAD__ARCHIVE_HPP_

#include "offroad/core_geometry.hpp"
#include "offroad/errors.hpp"
#include "offroad/format.hpp"
#include "offroad/preference_mining.hpp"
#include "offroad/traversability.hpp"

#include "json.hpp"

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace offroad
{

struct SceneEntry
{
  std::string scene_id{};
  std::string split{};
  std::string grid_path{};  // relative to the archive root
  std::vector<std::string> frame_ids{};

  bool operator==(const SceneEntry &) const = default;
};

struct SceneArchive
{
  std::vector<SceneEntry> scenes{};
  std::vector<SceneRecord> frames{};
  std::map<std::string, TraversabilityGrid> grids{};  // by scene_id
  std::vector<std::string> warnings{};

  const SceneRecord * find_frame(const std::string & frame_id) const
  {
    for (const auto & f : frames) {
      if (f.frame_id == frame_id) {
        return &f;
      }
    }
    return nullptr;
  }

  std::vector<SceneRecord> scene_frames(const std::string & scene_id) const
  {
    std::vector<SceneRecord> out;
    for (const auto & f : frames) {
      if (f.scene_id == scene_id) {
        out.push_back(f);
      }
    }
    return out;
  }

  const std::string * split_of(const std::string & scene_id) const
  {
    for (const auto & s : scenes) {
      if (s.scene_id == scene_id) {
        return &s.split;
      }
    }
    return nullptr;
  }
};

// ---------------------------------------------------------------------------------------------
// trajectories as JSON

inline nlohmann::ordered_json trajectory_to_json(const Trajectory & traj)
{
  auto arr = nlohmann::ordered_json::array();
  for (const auto & w : traj.waypoints) {
    if (w.t) {
      arr.push_back({w.x, w.y, w.z, *w.t});
    } else {
      arr.push_back({w.x, w.y, w.z});
    }
  }
  return arr;
}

/// Accepts [[x, y, z], ...] or [[x, y, z, t], ...]; timestamps must be on all waypoints or none
/// and strictly increasing.
inline Trajectory trajectory_from_json(const nlohmann::json & j)
{
  if (!j.is_array()) {
    throw InvalidInput("trajectory must be an array of waypoints");
  }
  Trajectory traj;
  std::size_t with_t = 0;
  for (const auto & p : j) {
    if (!p.is_array() || (p.size() != 3 && p.size() != 4)) {
      throw InvalidInput("waypoint must be [x, y, z] or [x, y, z, t]");
    }
    for (const auto & v : p) {
      if (!v.is_number()) {
        throw InvalidInput("waypoint coordinates must be numbers");
      }
    }
    Waypoint3D w{p[0].get<double>(), p[1].get<double>(), p[2].get<double>(), std::nullopt};
    if (p.size() == 4) {
      w.t = p[3].get<double>();
      ++with_t;
    }
    if (!is_finite(w)) {
      throw InvalidInput("waypoint coordinates must be finite");
    }
    traj.waypoints.push_back(w);
  }
  if (with_t != 0 && with_t != traj.size()) {
    throw InvalidInput("timestamps must be present on all waypoints or none");
  }
  for (std::size_t i = 1; with_t != 0 && i < traj.size(); ++i) {
    if (!(*traj[i].t > *traj[i - 1].t)) {
      throw InvalidInput("timestamps must be strictly increasing");
    }
  }
  return traj;
}

// ---------------------------------------------------------------------------------------------
// grids

inline std::string grid_to_text(const TraversabilityGrid & g)
{
  std::ostringstream os;
  os << "offroad-grid 1\n";
  os << "width " << g.width << "\n";
  os << "height " << g.height << "\n";
  os << "resolution " << format_shortest(g.resolution) << "\n";
  os << "origin " << format_shortest(g.origin_x) << ' ' << format_shortest(g.origin_y) << "\n";
  for (int r = 0; r < g.height; ++r) {
    for (int c = 0; c < g.width; ++c) {
      os << (g.at(c, r) == CellLabel::non_traversable ? '1' : '0');
    }
    os << '\n';
  }
  return os.str();
}

inline TraversabilityGrid grid_from_text(const std::string & text, const std::string & file)
{
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  auto next = [&](const char * what) {
    if (!std::getline(in, line)) {
      throw SchemaError(file, lineno + 1, std::string("unexpected end of file, expected ") + what);
    }
    ++lineno;
    return std::istringstream(line);
  };
  auto expect_key = [&](std::istringstream & ls, const char * key) {
    std::string k;
    ls >> k;
    if (k != key) {
      throw SchemaError(file, lineno, std::string("expected \"") + key + "\"");
    }
  };
  auto expect_end = [&](std::istringstream & ls) {
    std::string rest;
    if (ls >> rest) {
      throw SchemaError(file, lineno, "trailing text");
    }
  };

  TraversabilityGrid g;
  {
    auto ls = next("header");
    std::string magic;
    int version = 0;
    ls >> magic >> version;
    if (magic != "offroad-grid" || version != 1) {
      throw SchemaError(file, lineno, "expected \"offroad-grid 1\"");
    }
    expect_end(ls);
  }
  {
    auto ls = next("width");
    expect_key(ls, "width");
    if (!(ls >> g.width) || g.width < 1) {
      throw SchemaError(file, lineno, "width must be a positive integer");
    }
    expect_end(ls);
  }
  {
    auto ls = next("height");
    expect_key(ls, "height");
    if (!(ls >> g.height) || g.height < 1) {
      throw SchemaError(file, lineno, "height must be a positive integer");
    }
    expect_end(ls);
  }
  {
    auto ls = next("resolution");
    expect_key(ls, "resolution");
    if (!(ls >> g.resolution) || !(g.resolution > 0.0) || !std::isfinite(g.resolution)) {
      throw SchemaError(file, lineno, "resolution must be positive");
    }
    expect_end(ls);
  }
  {
    auto ls = next("origin");
    expect_key(ls, "origin");
    if (!(ls >> g.origin_x >> g.origin_y) || !std::isfinite(g.origin_x) ||
        !std::isfinite(g.origin_y)) {
      throw SchemaError(file, lineno, "origin must be two finite numbers");
    }
    expect_end(ls);
  }
  g.labels.reserve(static_cast<std::size_t>(g.width) * static_cast<std::size_t>(g.height));
  for (int r = 0; r < g.height; ++r) {
    next("grid row");
    if (line.size() != static_cast<std::size_t>(g.width)) {
      throw SchemaError(file, lineno, "row length does not match width");
    }
    for (const char c : line) {
      if (c == '0') {
        g.labels.push_back(CellLabel::traversable);
      } else if (c == '1') {
        g.labels.push_back(CellLabel::non_traversable);
      } else {
        throw SchemaError(file, lineno, "grid cells must be '0' or '1'");
      }
    }
  }
  if (std::getline(in, line)) {
    throw SchemaError(file, lineno + 1, "unexpected content after the last grid row");
  }
  return g;
}

// ---------------------------------------------------------------------------------------------
// line-delimited records

namespace detail
{

inline std::string read_file(const std::filesystem::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw SchemaError(path.string(), 0, "cannot open file");
  }
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void write_file(const std::filesystem::path & path, const std::string & content)
{
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error("cannot write " + path.string());
  }
  out << content;
}

struct JsonLine
{
  std::size_t line{0};
  nlohmann::json value{};
};

/// Non-empty lines parsed as JSON objects. When `schema` is non-empty the first line must be
/// the matching {"schema", "version": 1} header and is not returned.
inline std::vector<JsonLine> read_jsonl(
  const std::string & text, const std::string & file, const std::string & schema,
  bool header_optional = false)
{
  std::vector<JsonLine> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) {
      continue;
    }
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error & e) {
      throw SchemaError(file, lineno, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) {
      throw SchemaError(file, lineno, "each line must be a JSON object");
    }
    if (first && !schema.empty()) {
      first = false;
      const bool is_header = j.contains("schema");
      if (is_header) {
        if (j.at("schema") != schema || !j.contains("version") || j.at("version") != 1) {
          throw SchemaError(file, lineno, "expected header {\"schema\":\"" + schema +
                                            "\",\"version\":1}");
        }
        continue;
      }
      if (!header_optional) {
        throw SchemaError(file, lineno, "missing header line for schema " + schema);
      }
    }
    first = false;
    out.push_back({lineno, std::move(j)});
  }
  return out;
}

inline std::string header_line(const std::string & schema)
{
  nlohmann::ordered_json h;
  h["schema"] = schema;
  h["version"] = 1;
  return h.dump() + "\n";
}

template <typename T>
T field(const JsonLine & rec, const std::string & file, const char * key)
{
  if (!rec.value.contains(key)) {
    throw SchemaError(file, rec.line, std::string("missing field \"") + key + "\"");
  }
  try {
    return rec.value.at(key).get<T>();
  } catch (const nlohmann::json::exception &) {
    throw SchemaError(file, rec.line, std::string("field \"") + key + "\" has the wrong type");
  }
}

inline void only_fields(
  const JsonLine & rec, const std::string & file, std::initializer_list<const char *> keys)
{
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto & [k, v] : rec.value.items()) {
    if (allowed.count(k) == 0) {
      throw SchemaError(file, rec.line, "unknown field \"" + k + "\"");
    }
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------------------------
// archive load/save

inline SceneArchive load_archive(const std::filesystem::path & root)
{
  namespace fs = std::filesystem;
  SceneArchive archive;

  const auto manifest_path = root / "manifest.jsonl";
  const auto manifest_file = manifest_path.string();
  std::set<std::string> scene_ids;
  std::map<std::string, std::string> frame_scene;  // listed frame -> scene
  for (const auto & rec : detail::read_jsonl(
         detail::read_file(manifest_path), manifest_file, "offroad.manifest")) {
    detail::only_fields(rec, manifest_file, {"scene_id", "split", "grid", "frames"});
    SceneEntry s;
    s.scene_id = detail::field<std::string>(rec, manifest_file, "scene_id");
    s.split = detail::field<std::string>(rec, manifest_file, "split");
    s.grid_path = detail::field<std::string>(rec, manifest_file, "grid");
    s.frame_ids = detail::field<std::vector<std::string>>(rec, manifest_file, "frames");
    if (s.split != "train" && s.split != "val" && s.split != "test") {
      throw SchemaError(manifest_file, rec.line, "split must be train, val or test");
    }
    if (!scene_ids.insert(s.scene_id).second) {
      throw SchemaError(manifest_file, rec.line, "duplicate scene_id " + s.scene_id);
    }
    for (const auto & f : s.frame_ids) {
      if (!frame_scene.emplace(f, s.scene_id).second) {
        throw SchemaError(manifest_file, rec.line, "frame listed twice: " + f);
      }
    }
    const auto grid_file = root / s.grid_path;
    if (!fs::exists(grid_file)) {
      throw SchemaError(
        manifest_file, rec.line, "scene " + s.scene_id + " references missing grid " + s.grid_path);
    }
    auto grid = grid_from_text(detail::read_file(grid_file), grid_file.string());
    archive.grids.emplace(s.scene_id, std::move(grid));
    archive.scenes.push_back(std::move(s));
  }

  const auto frames_path = root / "frames.jsonl";
  const auto frames_file = frames_path.string();
  std::set<std::string> seen;
  for (const auto & rec :
       detail::read_jsonl(detail::read_file(frames_path), frames_file, "offroad.frames")) {
    detail::only_fields(
      rec, frames_file, {"scene_id", "frame_id", "image_ref", "language", "trajectory"});
    SceneRecord r;
    r.scene_id = detail::field<std::string>(rec, frames_file, "scene_id");
    r.frame_id = detail::field<std::string>(rec, frames_file, "frame_id");
    r.image_ref = detail::field<std::string>(rec, frames_file, "image_ref");
    r.language = detail::field<std::string>(rec, frames_file, "language");
    if (!rec.value.contains("trajectory")) {
      throw SchemaError(frames_file, rec.line, "missing field \"trajectory\"");
    }
    try {
      r.gt_trajectory = trajectory_from_json(rec.value.at("trajectory"));
    } catch (const InvalidInput & e) {
      throw SchemaError(frames_file, rec.line, e.what());
    }
    r.gt_trajectory.frame_id = r.frame_id;
    if (!seen.insert(r.frame_id).second) {
      throw SchemaError(frames_file, rec.line, "duplicate frame_id " + r.frame_id);
    }
    const auto listed = frame_scene.find(r.frame_id);
    if (listed == frame_scene.end()) {
      throw SchemaError(frames_file, rec.line, "frame " + r.frame_id + " is not in the manifest");
    }
    if (listed->second != r.scene_id) {
      throw SchemaError(
        frames_file, rec.line,
        "frame " + r.frame_id + " belongs to scene " + listed->second + " in the manifest");
    }
    if (r.gt_trajectory.size() < 2) {
      archive.warnings.push_back("frame " + r.frame_id + " has fewer than two waypoints");
    }
    archive.frames.push_back(std::move(r));
  }
  for (const auto & [frame, scene] : frame_scene) {
    if (seen.count(frame) == 0) {
      throw SchemaError(
        manifest_file, 0, "manifest references absent frame " + frame + " (scene " + scene + ")");
    }
  }
  return archive;
}

inline std::string frames_to_text(const SceneArchive & archive)
{
  std::string out = detail::header_line("offroad.frames");
  for (const auto & r : archive.frames) {
    nlohmann::ordered_json j;
    j["scene_id"] = r.scene_id;
    j["frame_id"] = r.frame_id;
    j["image_ref"] = r.image_ref;
    j["language"] = r.language;
    j["trajectory"] = trajectory_to_json(r.gt_trajectory);
    out += j.dump() + "\n";
  }
  return out;
}

inline std::string manifest_to_text(const SceneArchive & archive)
{
  std::string out = detail::header_line("offroad.manifest");
  for (const auto & s : archive.scenes) {
    nlohmann::ordered_json j;
    j["scene_id"] = s.scene_id;
    j["split"] = s.split;
    j["grid"] = s.grid_path;
    j["frames"] = s.frame_ids;
    out += j.dump() + "\n";
  }
  return out;
}

/// Checks the invariants load_archive enforces on an archive built in memory, e.g. by a
/// converter from another dataset layout: unique scene and frame ids, valid split tags, a grid
/// per scene, and manifest frame lists that match the frame records exactly.
inline void validate_archive(const SceneArchive & archive)
{
  std::map<std::string, const SceneEntry *> scenes;
  std::map<std::string, std::string> listed;
  for (const auto & s : archive.scenes) {
    if (!scenes.emplace(s.scene_id, &s).second) {
      throw InvalidInput("duplicate scene_id " + s.scene_id);
    }
    if (s.split != "train" && s.split != "val" && s.split != "test") {
      throw InvalidInput("scene " + s.scene_id + ": split must be train, val or test");
    }
    if (archive.grids.count(s.scene_id) == 0) {
      throw InvalidInput("scene " + s.scene_id + " has no grid");
    }
    for (const auto & f : s.frame_ids) {
      if (!listed.emplace(f, s.scene_id).second) {
        throw InvalidInput("frame listed twice: " + f);
      }
    }
  }
  std::set<std::string> seen;
  for (const auto & r : archive.frames) {
    if (!seen.insert(r.frame_id).second) {
      throw InvalidInput("duplicate frame_id " + r.frame_id);
    }
    const auto it = listed.find(r.frame_id);
    if (it == listed.end() || it->second != r.scene_id) {
      throw InvalidInput("frame " + r.frame_id + " is not listed under scene " + r.scene_id);
    }
  }
  for (const auto & [frame, scene] : listed) {
    if (seen.count(frame) == 0) {
      throw InvalidInput("manifest references absent frame " + frame + " (scene " + scene + ")");
    }
  }
}

inline void save_archive(const SceneArchive & archive, const std::filesystem::path & root)
{
  validate_archive(archive);
  std::filesystem::create_directories(root);
  detail::write_file(root / "manifest.jsonl", manifest_to_text(archive));
  detail::write_file(root / "frames.jsonl", frames_to_text(archive));
  for (const auto & s : archive.scenes) {
    detail::write_file(root / s.grid_path, grid_to_text(archive.grids.at(s.scene_id)));
  }
}

}  // namespace offroad

#endif  // OFFROAD__ARCHIVE_HPP_
