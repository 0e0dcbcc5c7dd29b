// Copyright 2026 The Crashbench Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CRASHBENCH_ERROR_HPP_
#define CRASHBENCH_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace crashbench {

// All library errors derive from Error and carry a stable machine-readable
// code (e.g. "MissingField") next to the human-readable message. The code is
// what gets serialized into records and HTTP error bodies.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

class MissingField : public Error {
 public:
  explicit MissingField(std::string field)
      : Error("MissingField", "missing mandatory field '" + field + "'"),
        field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class MalformedDate : public Error {
 public:
  explicit MalformedDate(const std::string& text)
      : Error("MalformedDate", "malformed date '" + text + "'") {}
};

class InvalidField : public Error {
 public:
  InvalidField(std::string field, const std::string& why)
      : Error("InvalidField", "invalid field '" + field + "': " + why),
        field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class DiffSyntaxError : public Error {
 public:
  DiffSyntaxError(std::size_t line_no, const std::string& what)
      : Error("DiffSyntaxError",
              "line " + std::to_string(line_no) + ": " + what),
        line_no_(line_no) {}
  std::size_t line_no() const noexcept { return line_no_; }

 private:
  std::size_t line_no_;
};

class FileNotInTree : public Error {
 public:
  explicit FileNotInTree(std::string path)
      : Error("FileNotInTree", "file not in source tree: " + path),
        path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class BackendUnavailable : public Error {
 public:
  explicit BackendUnavailable(const std::string& why)
      : Error("BackendUnavailable", "execution backend unavailable: " + why) {}
};

class UnknownKernelArtifact : public Error {
 public:
  explicit UnknownKernelArtifact(const std::string& ref)
      : Error("UnknownKernelArtifact", "unknown kernel artifact: " + ref) {}
};

class MissingPrice : public Error {
 public:
  explicit MissingPrice(std::string component)
      : Error("MissingPrice", "no price configured for component '" +
                                  component + "'"),
        component_(std::move(component)) {}
  const std::string& component() const noexcept { return component_; }

 private:
  std::string component_;
};

class UnknownBug : public Error {
 public:
  explicit UnknownBug(const std::string& bug_id)
      : Error("UnknownBug", "unknown or uncurated bug: " + bug_id) {}
};

}  // namespace crashbench

#endif  // CRASHBENCH_ERROR_HPP_
