// include/ddsd/remote_backend.hpp

// Copyright 2026  The ddsd Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// HTTP client for a hosted model. Wire protocol, JSON bodies over POST:
//
//   /generate  {"prompt", "model", "temperature", "max_new_tokens"} -> {"text"}
//   /embed     {"prompt", "model", "pooling"}                        -> {"vector"}

#ifndef DDSD_REMOTE_BACKEND_HPP_
#define DDSD_REMOTE_BACKEND_HPP_

#include <chrono>
#include <memory>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "ddsd/backend.hpp"
#include "ddsd/error.hpp"

namespace ddsd {

/// "http://host:port/base" -> ("http://host:port", "/base"); no trailing slash.
inline std::pair<std::string, std::string> SplitEndpoint(const std::string &url) {
  std::size_t scheme = url.find("://");
  if (scheme == std::string::npos || url.compare(0, 4, "http") != 0)
    throw ValidationError("backend: endpoint must be an http(s) URL: " + url);
  std::size_t slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, ""};
  std::string base = url.substr(slash);
  while (!base.empty() && base.back() == '/') base.pop_back();
  return {url.substr(0, slash), base};
}

class RemoteBackend : public Backend {
 public:
  explicit RemoteBackend(BackendConfig config) : config_(std::move(config)) {
    config_.kind = BackendKind::kRemote;
    Validate(config_);
    std::tie(host_, base_path_) = SplitEndpoint(config_.endpoint_url);
  }

  std::string Generate(const std::string &prompt) override {
    if (prompt.empty()) throw ValidationError("generate: empty prompt");
    nlohmann::json req = {{"prompt", prompt},
                          {"model", config_.model_name},
                          {"temperature", config_.temperature},
                          {"max_new_tokens", config_.max_new_tokens}};
    nlohmann::json resp = Post("/generate", req);
    if (!resp.contains("text") || !resp["text"].is_string())
      throw ProtocolError(200, resp.dump().substr(0, 200), "generate: response lacks 'text'");
    return resp["text"].get<std::string>();
  }

  std::vector<double> Embed(const std::string &prompt) override {
    if (prompt.empty()) throw ValidationError("embed: empty prompt");
    nlohmann::json req = {{"prompt", prompt},
                          {"model", config_.model_name},
                          {"pooling", std::string(PoolingName(config_.pooling))}};
    nlohmann::json resp = Post("/embed", req);
    const std::string excerpt = resp.dump().substr(0, 200);
    if (!resp.contains("vector") || !resp["vector"].is_array())
      throw ProtocolError(200, excerpt, "embed: response lacks 'vector'");
    std::vector<double> v;
    v.reserve(resp["vector"].size());
    for (const auto &e : resp["vector"]) {
      if (!e.is_number()) throw ProtocolError(200, excerpt, "embed: non-numeric entry");
      v.push_back(e.get<double>());
    }
    if (v.size() != static_cast<std::size_t>(config_.embedding_dim))
      throw ProtocolError(200, excerpt,
                          "embed: expected " + std::to_string(config_.embedding_dim) +
                              " dims, got " + std::to_string(v.size()));
    return v;
  }

  std::string Identity() const override {
    return "remote(" + config_.endpoint_url + ",model=" + config_.model_name + ")";
  }
  int max_in_flight() const override { return config_.max_in_flight; }

 private:
  nlohmann::json Post(const std::string &path, const nlohmann::json &body) {
    // One client per request so concurrent batch workers share nothing.
    httplib::Client client(host_);
    client.set_connection_timeout(config_.request_timeout);
    client.set_read_timeout(config_.request_timeout);
    client.set_write_timeout(config_.request_timeout);
    auto begin = std::chrono::steady_clock::now();
    auto res = client.Post(base_path_ + path, body.dump(), "application/json");
    if (!res) {
      auto err = res.error();
      auto elapsed = std::chrono::steady_clock::now() - begin;
      if (err == httplib::Error::ConnectionTimeout ||
          (err == httplib::Error::Read && elapsed >= config_.request_timeout))
        throw TimeoutError(path + ": request timed out");
      throw BackendError(path + ": transport failure (" + httplib::to_string(err) + ")");
    }
    if (res->status < 200 || res->status >= 300)
      throw ProtocolError(res->status, res->body.substr(0, 200),
                          path + ": HTTP status " + std::to_string(res->status));
    try {
      return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception &) {
      throw ProtocolError(res->status, res->body.substr(0, 200), path + ": body is not JSON");
    }
  }

  BackendConfig config_;
  std::string host_;
  std::string base_path_;
};

inline std::unique_ptr<Backend> MakeBackend(const BackendConfig &config) {
  if (config.kind == BackendKind::kRemote) return std::make_unique<RemoteBackend>(config);
  return std::make_unique<MockBackend>(config);
}

}  // namespace ddsd

#endif  // DDSD_REMOTE_BACKEND_HPP_
