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

#ifndef OFFROAD__ERRORS_HPP_
#define OFFROAD__ERRORS_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace offroad
{

class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Precondition violation: non-finite coordinate, empty input, bad parameter.
class InvalidInput : public Error
{
public:
  using Error::Error;
};

/// Trajectory has fewer than two waypoints or zero XY length where a length is needed.
class DegenerateTrajectory : public Error
{
public:
  using Error::Error;
};

/// Metric is undefined for these inputs; callers report it as missing, not as zero.
class UndefinedMetric : public Error
{
public:
  using Error::Error;
};

class NotFound : public Error
{
public:
  using Error::Error;
};

/// Schema or validation failure while reading a file. `line` is 1-based, 0 when not applicable.
class SchemaError : public Error
{
public:
  SchemaError(std::string file, std::size_t line, const std::string & message)
  : Error(format(file, line, message)), file_(std::move(file)), line_(line)
  {
  }

  const std::string & file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

private:
  static std::string format(const std::string & file, std::size_t line, const std::string & msg)
  {
    if (line == 0) {
      return file + ": " + msg;
    }
    return file + ":" + std::to_string(line) + ": " + msg;
  }

  std::string file_;
  std::size_t line_;
};

}  // namespace offroad

#endif  // OFFROAD__ERRORS_HPP_
