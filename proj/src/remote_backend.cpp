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

#include "crashbench/remote_backend.hpp"

#include <future>
#include <thread>

#include "crashbench/error.hpp"

namespace crashbench::exec {
namespace {

[[noreturn]] void rethrow_remote(const http::ClientResult& res) {
  std::string code = "RemoteError";
  std::string message = res.body;
  try {
    const auto j = nlohmann::json::parse(res.body);
    code = j.value("error", code);
    message = j.value("message", message);
  } catch (const nlohmann::json::exception&) {
  }
  if (code == "BackendUnavailable") throw BackendUnavailable(message);
  if (code == "UnknownKernelArtifact") throw UnknownKernelArtifact(message);
  throw Error(code, message);
}

http::Response json_response(const nlohmann::json& j, int status = 200) {
  http::Response r;
  r.status = status;
  r.body = j.dump();
  return r;
}

http::Response error_of(const std::exception_ptr& ep) {
  try {
    std::rethrow_exception(ep);
  } catch (const BackendUnavailable& e) {
    return http::error_response(503, e.code(), e.what());
  } catch (const Error& e) {
    return http::error_response(422, e.code(), e.what());
  } catch (const std::exception& e) {
    return http::error_response(500, "InternalError", e.what());
  }
}

}  // namespace

RemoteBackend::RemoteBackend(std::string base_url,
                             std::chrono::milliseconds poll_interval)
    : base_url_(std::move(base_url)), poll_interval_(poll_interval) {}

std::string RemoteBackend::submit(const std::string& path,
                                  const std::string& body) {
  auto res = http::post_json(base_url_, path, body);
  if (!res) throw BackendUnavailable("cannot reach " + base_url_);
  if (res->status != 200 && res->status != 202) rethrow_remote(*res);
  return nlohmann::json::parse(res->body).at("job_id").get<std::string>();
}

nlohmann::json RemoteBackend::await_result(const std::string& job_id) const {
  int misses = 0;
  for (;;) {
    auto st = http::get(base_url_, "/v1/jobs/" + job_id);
    if (!st) {
      if (++misses > 5) throw BackendUnavailable("lost contact with backend");
      std::this_thread::sleep_for(poll_interval_);
      continue;
    }
    misses = 0;
    if (st->status != 200) rethrow_remote(*st);
    const auto state = nlohmann::json::parse(st->body).value("state", "");
    if (state == "pending") {
      std::this_thread::sleep_for(poll_interval_);
      continue;
    }
    auto res = http::get(base_url_, "/v1/jobs/" + job_id + "/result");
    if (!res) throw BackendUnavailable("lost contact with backend");
    if (res->status != 200) rethrow_remote(*res);
    return nlohmann::json::parse(res->body);
  }
}

JobHandle<BuildResult> RemoteBackend::submit_build(const BuildJob& job) {
  const std::string id = submit("/v1/jobs/build", nlohmann::json(job).dump());
  auto fut = std::async(std::launch::async, [this, id] {
               return await_result(id).get<BuildResult>();
             }).share();
  return JobHandle<BuildResult>(id, fut);
}

JobHandle<ReproductionOutcome> RemoteBackend::submit_reproduction(
    const ReproductionJob& job) {
  const std::string id =
      submit("/v1/jobs/reproduce", nlohmann::json(job).dump());
  auto fut = std::async(std::launch::async, [this, id] {
               return await_result(id).get<ReproductionOutcome>();
             }).share();
  return JobHandle<ReproductionOutcome>(id, fut);
}

BackendServer::BackendServer(ExecutionBackend& backend) : backend_(backend) {
  auto submit = [this](auto make_handle) {
    return [this, make_handle](const http::Request& req) {
      try {
        const auto body = nlohmann::json::parse(req.body);
        AnyHandle handle = make_handle(body);
        std::lock_guard<std::mutex> lock(mu_);
        const std::string id = "job-" + std::to_string(next_id_++);
        jobs_.emplace(id, std::move(handle));
        return json_response({{"job_id", id}}, 202);
      } catch (const nlohmann::json::exception& e) {
        return http::error_response(400, "BadRequest", e.what());
      } catch (...) {
        return error_of(std::current_exception());
      }
    };
  };
  service_.post("/v1/jobs/build", submit([this](const nlohmann::json& j) {
                  return AnyHandle(backend_.submit_build(j.get<BuildJob>()));
                }));
  service_.post("/v1/jobs/reproduce", submit([this](const nlohmann::json& j) {
                  return AnyHandle(
                      backend_.submit_reproduction(j.get<ReproductionJob>()));
                }));
  service_.get(R"(/v1/jobs/([A-Za-z0-9_-]+))",
               [this](const http::Request& r) { return status(r.matches[1]); });
  service_.get(R"(/v1/jobs/([A-Za-z0-9_-]+)/result)",
               [this](const http::Request& r) { return result(r.matches[1]); });
}

int BackendServer::start(const std::string& host, int port) {
  return service_.start(host, port);
}

http::Response BackendServer::status(const std::string& id) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = jobs_.find(id);
  if (it == jobs_.end()) {
    return http::error_response(404, "UnknownJob", "no job " + id);
  }
  const bool ready =
      std::visit([](const auto& h) { return h.ready(); }, it->second);
  const char* kind =
      std::holds_alternative<JobHandle<BuildResult>>(it->second) ? "build"
                                                                 : "reproduce";
  return json_response(
      {{"job_id", id}, {"kind", kind}, {"state", ready ? "done" : "pending"}});
}

http::Response BackendServer::result(const std::string& id) {
  AnyHandle handle;
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) {
      return http::error_response(404, "UnknownJob", "no job " + id);
    }
    handle = it->second;
  }
  const bool ready = std::visit([](const auto& h) { return h.ready(); }, handle);
  if (!ready) return http::error_response(409, "Pending", "job " + id);
  try {
    return std::visit(
        [](const auto& h) { return json_response(nlohmann::json(h.get())); },
        handle);
  } catch (...) {
    return error_of(std::current_exception());
  }
}

}  // namespace crashbench::exec
