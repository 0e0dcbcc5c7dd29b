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

#ifndef CRASHBENCH_FS_HPP_
#define CRASHBENCH_FS_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace crashbench {

// Whole-file read; nullopt when the file is missing or unreadable.
std::optional<std::string> read_file(const std::filesystem::path& path);

// Writes via a sibling temp file and rename(2), creating parent directories.
void write_file_atomic(const std::filesystem::path& path, std::string_view data);

// Like write_file_atomic but fails (returns false) if `path` already exists.
bool write_file_once(const std::filesystem::path& path, std::string_view data);

}  // namespace crashbench

#endif  // CRASHBENCH_FS_HPP_
