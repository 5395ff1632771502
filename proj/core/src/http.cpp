// Copyright 2026 The nomad-curate Authors
// SPDX-License-Identifier: Apache-2.0

#include "nomad/http.hpp"

#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "nomad/error.hpp"

namespace nomad::http {
namespace {

class HttplibTransport final : public Transport {
 public:
  HttplibTransport(const std::string& base_url, const ClientOptions& options) {
    const auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument,
                  "endpoint URL needs a scheme: '" + base_url + "'");
    }
    const auto host_begin = scheme_end + 3;
    const auto path_begin = base_url.find('/', host_begin);
    std::string origin = base_url.substr(0, path_begin);
    if (path_begin != std::string::npos) {
      prefix_ = base_url.substr(path_begin);
      while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
    }
    client_ = std::make_unique<httplib::Client>(origin);
    if (!client_->is_valid()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "unsupported endpoint URL: " + base_url);
    }
    client_->set_connection_timeout(options.connect_timeout);
    client_->set_read_timeout(options.read_timeout);
    if (options.api_key) client_->set_bearer_token_auth(*options.api_key);
    origin_ = std::move(origin);
  }

  Response post(const std::string& path, const std::string& body) override {
    auto result = client_->Post(prefix_ + path, body, "application/json");
    if (!result) {
      throw Error(ErrorCode::kEndpointUnreachable,
                  origin_ + prefix_ + path + ": " +
                      httplib::to_string(result.error()));
    }
    return Response{result->status, result->body};
  }

 private:
  std::unique_ptr<httplib::Client> client_;
  std::string origin_;
  std::string prefix_;
};

bool retryable_status(int status) {
  return status == 408 || status == 429 || status >= 500;
}

}  // namespace

std::optional<std::string> api_key_from_env() {
  for (const char* name : {"NOMAD_API_KEY", "OPENAI_API_KEY"}) {
    if (const char* v = std::getenv(name); v != nullptr && *v != '\0') {
      return std::string(v);
    }
  }
  return std::nullopt;
}

std::unique_ptr<Transport> make_transport(const std::string& base_url,
                                          const ClientOptions& options) {
  return std::make_unique<HttplibTransport>(base_url, options);
}

std::chrono::milliseconds RetryPolicy::delay_before(int attempt) const {
  // attempt is 1-based; no delay before the first try.
  if (attempt <= 1) return std::chrono::milliseconds(0);
  const double scale = std::pow(backoff_factor, attempt - 2);
  return std::chrono::milliseconds(static_cast<long long>(
      std::llround(static_cast<double>(initial_backoff.count()) * scale)));
}

nlohmann::json post_json(Transport& transport, const std::string& path,
                         const nlohmann::json& body, const RetryPolicy& retry) {
  const std::string payload = body.dump();
  const int attempts = std::max(retry.max_attempts, 1);
  ErrorCode last_code = ErrorCode::kEndpointUnreachable;
  std::string last_message;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    if (attempt > 1) {
      const auto delay = retry.delay_before(attempt);
      if (retry.sleep) {
        retry.sleep(delay);
      } else {
        std::this_thread::sleep_for(delay);
      }
    }
    Response response;
    try {
      response = transport.post(path, payload);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kEndpointUnreachable) throw;
      last_code = e.code();
      last_message = e.detail();
      continue;
    }
    if (response.status >= 200 && response.status < 300) {
      auto parsed = nlohmann::json::parse(response.body, nullptr, false);
      if (parsed.is_discarded()) {
        throw Error(ErrorCode::kEndpointProtocol,
                    path + ": response is not valid JSON");
      }
      return parsed;
    }
    last_message = path + ": HTTP " + std::to_string(response.status);
    if (!retryable_status(response.status)) {
      throw Error(ErrorCode::kEndpointProtocol, last_message);
    }
    last_code = response.status == 429 ? ErrorCode::kRateLimited
                                        : ErrorCode::kEndpointProtocol;
  }
  throw Error(last_code, last_message + " (after " + std::to_string(attempts) +
                             " attempts)");
}

}  // namespace nomad::http
