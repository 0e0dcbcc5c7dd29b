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

#ifndef CRASHBENCH_REMOTE_BACKEND_HPP_
#define CRASHBENCH_REMOTE_BACKEND_HPP_

#include <chrono>
#include <map>
#include <mutex>
#include <string>
#include <variant>

#include "crashbench/exec_backend.hpp"
#include "crashbench/http.hpp"

namespace crashbench::exec {

// Client for the backend wire API:
//   POST /v1/jobs/build        BuildJob        -> {"job_id"}
//   POST /v1/jobs/reproduce    ReproductionJob -> {"job_id"}
//   GET  /v1/jobs/<id>                         -> {"job_id","state",...}
//   GET  /v1/jobs/<id>/result                  -> BuildResult | ReproductionOutcome
class RemoteBackend final : public ExecutionBackend {
 public:
  explicit RemoteBackend(std::string base_url,
                         std::chrono::milliseconds poll_interval =
                             std::chrono::milliseconds(200));

  JobHandle<BuildResult> submit_build(const BuildJob& job) override;
  JobHandle<ReproductionOutcome> submit_reproduction(
      const ReproductionJob& job) override;

 private:
  std::string submit(const std::string& path, const std::string& body);
  nlohmann::json await_result(const std::string& job_id) const;

  std::string base_url_;
  std::chrono::milliseconds poll_interval_;
};

// Serves any ExecutionBackend over the wire API above.
class BackendServer {
 public:
  explicit BackendServer(ExecutionBackend& backend);

  int start(const std::string& host = "127.0.0.1", int port = 0);
  void stop() { service_.stop(); }
  std::string base_url() const { return service_.base_url(); }

 private:
  using AnyHandle =
      std::variant<JobHandle<BuildResult>, JobHandle<ReproductionOutcome>>;

  http::Response status(const std::string& id);
  http::Response result(const std::string& id);

  ExecutionBackend& backend_;
  http::Service service_;
  std::mutex mu_;
  long next_id_ = 1;
  std::map<std::string, AnyHandle> jobs_;
};

}  // namespace crashbench::exec

#endif  // CRASHBENCH_REMOTE_BACKEND_HPP_
