// Copyright 2026 The relerm Authors. All Rights Reserved.
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

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace relerm {

/// Base of every error raised by the library. `kind()` is a stable
/// machine-readable tag used in CLI error records.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : Error("parse_error", "line " + std::to_string(line) + ": " + message),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class EmptyGraphError : public Error {
 public:
  explicit EmptyGraphError(const std::string& message)
      : Error("empty_graph", message) {}
};

class IndexError : public Error {
 public:
  IndexError(std::size_t index, const std::string& message)
      : Error("index_error", message), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& message)
      : Error("numeric_error", message) {}
};

// Raised by exact oracles when an enumeration would be too large.
class RefusalError : public Error {
 public:
  explicit RefusalError(const std::string& message)
      : Error("refused", message) {}
};

class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t step, double risk, const std::string& message)
      : Error("diverged", message), step_(step), risk_(risk) {}
  std::size_t step() const noexcept { return step_; }
  double risk() const noexcept { return risk_; }

 private:
  std::size_t step_;
  double risk_;
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& message)
      : Error("format_error", message) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> violations)
      : Error("config_error", join(violations)),
        violations_(std::move(violations)) {}
  const std::vector<std::string>& violations() const noexcept {
    return violations_;
  }

 private:
  static std::string join(const std::vector<std::string>& items) {
    std::string out = "invalid configuration";
    for (const auto& item : items) out += "; " + item;
    return out;
  }
  std::vector<std::string> violations_;
};

class PathError : public Error {
 public:
  explicit PathError(const std::string& path)
      : Error("path_error", "cannot open '" + path + "'"), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace relerm
