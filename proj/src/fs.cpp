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

#include "crashbench/fs.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "crashbench/error.hpp"

namespace crashbench {
namespace {

std::filesystem::path temp_sibling(const std::filesystem::path& path) {
  static std::atomic<unsigned long> counter{0};
  return path.parent_path() /
         ("." + path.filename().string() + ".tmp." +
          std::to_string(::getpid()) + "." + std::to_string(counter++));
}

void write_temp(const std::filesystem::path& tmp, std::string_view data) {
  std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
  out.write(data.data(), std::streamsize(data.size()));
  out.close();
  if (!out) {
    throw Error("IoError", "cannot write " + tmp.string());
  }
}

}  // namespace

std::optional<std::string> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path,
                       std::string_view data) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  const auto tmp = temp_sibling(path);
  write_temp(tmp, data);
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error("IoError", "cannot replace " + path.string());
  }
}

bool write_file_once(const std::filesystem::path& path, std::string_view data) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  const auto tmp = temp_sibling(path);
  write_temp(tmp, data);
  // link(2) refuses to clobber, which makes the publish step exclusive.
  const int rc = ::link(tmp.c_str(), path.c_str());
  const int err = errno;
  std::error_code ec;
  std::filesystem::remove(tmp, ec);
  if (rc == 0) return true;
  if (err == EEXIST) return false;
  throw Error("IoError", "cannot create " + path.string() + ": " +
                             std::strerror(err));
}

}  // namespace crashbench
