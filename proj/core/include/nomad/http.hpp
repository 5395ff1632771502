// Copyright 2026 The nomad-curate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

namespace nomad::http {

struct Response {
  int status = 0;
  std::string body;
};

// Minimal JSON-over-HTTP POST surface. Implementations throw
// Error(EndpointUnreachable) when no response could be obtained at all.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual Response post(const std::string& path, const std::string& body) = 0;
};

struct ClientOptions {
  std::optional<std::string> api_key;  // sent as "Authorization: Bearer ..."
  std::chrono::seconds connect_timeout{10};
  std::chrono::seconds read_timeout{300};
};

// API key from NOMAD_API_KEY, falling back to OPENAI_API_KEY.
std::optional<std::string> api_key_from_env();

// `base_url` is scheme://host[:port][/prefix]; request paths are appended to
// the prefix, e.g. "http://localhost:8000/v1" + "/completions".
std::unique_ptr<Transport> make_transport(const std::string& base_url,
                                          const ClientOptions& options = {});

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
  double backoff_factor = 2.0;
  // Injected so tests can observe backoff without sleeping.
  std::function<void(std::chrono::milliseconds)> sleep;

  std::chrono::milliseconds delay_before(int attempt) const;
};

// POSTs `body` and returns the decoded JSON reply of a 2xx response.
// Connection failures, 408, 429 and 5xx are retried with exponential backoff;
// after the last attempt they surface as EndpointUnreachable, RateLimited or
// EndpointProtocol. Other statuses and undecodable bodies fail immediately
// with EndpointProtocol.
nlohmann::json post_json(Transport& transport, const std::string& path,
                         const nlohmann::json& body, const RetryPolicy& retry);

}  // namespace nomad::http
