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

// Trajectory token text. The grammar is bit-exact:
//
//   text  := "<trajectory>" tuples?
//   tuples := tuple ("," tuple)*
//   tuple := "[" num "," num "," num "]"
//   num   := "-"? digits "." digit digit
//
// No whitespace is accepted anywhere. Serialization rounds each coordinate to two decimals,
// ties to even on the exact binary value, and never emits "-0.00".

#ifndef OFFROAD__TOKENIZER_HPP_
#define OFFROAD__TOKENIZER_HPP_

#include "offroad/core_geometry.hpp"
#include "offroad/errors.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

namespace offroad
{

inline constexpr std::string_view trajectory_token = "<trajectory>";

inline std::string format_fixed2(double v)
{
  if (!std::isfinite(v)) {
    throw InvalidInput("cannot serialize a non-finite coordinate");
  }
  std::array<char, 400> buf{};
  const auto res =
    std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed, 2);
  std::string out(buf.data(), res.ptr);
  if (out == "-0.00") {
    out = "0.00";
  }
  return out;
}

/// The value a coordinate takes after a serialize/parse round trip.
inline double quantize_coordinate(double v)
{
  const auto text = format_fixed2(v);
  double out = 0.0;
  std::from_chars(text.data(), text.data() + text.size(), out);
  return out;
}

/// Copy of `traj` with x, y, z snapped to the 0.01 grid used by the trajectory text.
/// Timestamps are kept.
inline Trajectory quantize_trajectory(const Trajectory & traj)
{
  Trajectory out = traj;
  for (auto & w : out.waypoints) {
    w.x = quantize_coordinate(w.x);
    w.y = quantize_coordinate(w.y);
    w.z = quantize_coordinate(w.z);
  }
  return out;
}

inline std::string tokenize_trajectory(const Trajectory & traj)
{
  std::string out(trajectory_token);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const auto & w = traj[i];
    if (i > 0) {
      out += ',';
    }
    out += '[';
    out += format_fixed2(w.x);
    out += ',';
    out += format_fixed2(w.y);
    out += ',';
    out += format_fixed2(w.z);
    out += ']';
  }
  return out;
}

struct ParseError
{
  std::size_t offset{0};
  std::string message{};
};

struct ParseResult
{
  std::optional<Trajectory> trajectory{};
  std::optional<ParseError> error{};

  bool ok() const noexcept { return trajectory.has_value(); }
};

namespace detail
{

class TrajectoryParser
{
public:
  explicit TrajectoryParser(std::string_view text, std::size_t base_offset = 0)
  : text_(text), base_(base_offset)
  {
  }

  ParseResult run()
  {
    if (text_.substr(0, trajectory_token.size()) != trajectory_token) {
      return fail("expected \"<trajectory>\"");
    }
    pos_ = trajectory_token.size();
    Trajectory traj;
    if (pos_ == text_.size()) {
      return {std::move(traj), std::nullopt};
    }
    while (true) {
      Waypoint3D w;
      if (!expect('[')) return fail("expected '['");
      if (!number(w.x)) return failure_;
      if (!expect(',')) return fail("expected ',' inside tuple");
      if (!number(w.y)) return failure_;
      if (!expect(',')) return fail("expected ',' inside tuple");
      if (!number(w.z)) return failure_;
      if (!expect(']')) return fail("expected ']' after third coordinate");
      traj.waypoints.push_back(w);
      if (pos_ == text_.size()) {
        break;
      }
      if (!expect(',')) return fail("unexpected text after tuple");
    }
    return {std::move(traj), std::nullopt};
  }

private:
  bool expect(char c)
  {
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  static bool is_digit(char c) noexcept { return c >= '0' && c <= '9'; }

  bool number(double & out)
  {
    const std::size_t start = pos_;
    if (pos_ < text_.size() && text_[pos_] == '-') {
      ++pos_;
    }
    const std::size_t int_start = pos_;
    while (pos_ < text_.size() && is_digit(text_[pos_])) {
      ++pos_;
    }
    if (pos_ == int_start) {
      failure_ = fail("expected digit");
      return false;
    }
    if (!expect('.')) {
      failure_ = fail("expected '.'");
      return false;
    }
    for (int i = 0; i < 2; ++i) {
      if (pos_ >= text_.size() || !is_digit(text_[pos_])) {
        failure_ = fail("expected exactly two decimal digits");
        return false;
      }
      ++pos_;
    }
    const auto res = std::from_chars(text_.data() + start, text_.data() + pos_, out);
    if (res.ec != std::errc{} || !std::isfinite(out)) {
      pos_ = start;
      failure_ = fail("numeric literal is not a finite double");
      return false;
    }
    return true;
  }

  ParseResult fail(std::string message) const
  {
    return {std::nullopt, ParseError{base_ + pos_, std::move(message)}};
  }

  std::string_view text_;
  std::size_t base_;
  std::size_t pos_{0};
  ParseResult failure_{};
};

}  // namespace detail

/// Strict parse of trajectory token text. Never throws; failures carry the byte offset.
inline ParseResult parse_trajectory(std::string_view text)
{
  return detail::TrajectoryParser(text).run();
}

/// A generated completion: free-form language, the separator, then trajectory tuples.
struct Completion
{
  std::string language{};
  ParseResult trajectory{};
};

/// Splits at the first "<trajectory>" and parses the remainder strictly. Error offsets are
/// relative to the full text.
inline Completion parse_completion(std::string_view text)
{
  const auto at = text.find(trajectory_token);
  if (at == std::string_view::npos) {
    return {std::string(text),
            ParseResult{std::nullopt, ParseError{text.size(), "missing \"<trajectory>\""}}};
  }
  return {std::string(text.substr(0, at)),
          detail::TrajectoryParser(text.substr(at), at).run()};
}

}  // namespace offroad

#endif  // OFFROAD__TOKENIZER_HPP_
