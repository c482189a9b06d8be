// Copyright 2026 The wikiprf Authors
// SPDX-License-Identifier: Apache-2.0

#include "http_client.hpp"

#include <algorithm>
#include <chrono>
#include <thread>

#include "httplib.h"
#include "wikiprf/error.hpp"

namespace wikiprf {

HttpJsonClient::HttpJsonClient(std::string endpoint, double timeout_seconds, int max_in_flight, int retries)
    : endpoint_(std::move(endpoint)),
      timeout_seconds_(timeout_seconds),
      retries_(std::max(1, retries)),
      in_flight_(std::clamp(max_in_flight, 1, 1024)) {
  const auto scheme_end = endpoint_.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorCode::InvalidArgument, "endpoint needs a scheme: " + endpoint_);
  const auto path_start = endpoint_.find('/', scheme_end + 3);
  origin_ = endpoint_.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : endpoint_.substr(path_start);
}

nlohmann::json HttpJsonClient::post(const nlohmann::json& body) const {
  in_flight_.acquire();
  struct Release {
    std::counting_semaphore<1024>& s;
    ~Release() { s.release(); }
  } release{in_flight_};

  const auto timeout = std::chrono::duration<double>(timeout_seconds_);
  const auto secs = static_cast<time_t>(timeout_seconds_);
  const auto usecs = static_cast<time_t>((timeout_seconds_ - static_cast<double>(secs)) * 1e6);
  const std::string payload = body.dump();
  std::string last_error = "no attempt";
  bool timed_out = false;
  for (int attempt = 0; attempt < retries_; ++attempt) {
    httplib::Client client(origin_);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    auto res = client.Post(path_, payload, "application/json");
    if (res && res->status == 200) {
      auto parsed = nlohmann::json::parse(res->body, nullptr, false);
      if (!parsed.is_discarded()) return parsed;
      last_error = "response is not JSON";
      timed_out = false;
    } else if (res) {
      last_error = "HTTP status " + std::to_string(res->status);
      timed_out = false;
    } else {
      last_error = httplib::to_string(res.error());
      timed_out = res.error() == httplib::Error::Read;
    }
    if (attempt + 1 < retries_) {
      std::this_thread::sleep_for(std::min(std::chrono::duration<double>(0.05 * (attempt + 1)), timeout));
    }
  }
  if (timed_out) throw Error(ErrorCode::Timeout, endpoint_ + ": " + last_error);
  throw Error(ErrorCode::RemoteUnavailable, endpoint_ + ": " + last_error);
}

}  // namespace wikiprf
