// Copyright 2026 The wikiprf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <semaphore>
#include <string>

#include "json.hpp"

namespace wikiprf {

/// JSON-over-HTTP POST with bounded retries and a cap on in-flight
/// requests. One httplib client per call so the object is thread-safe.
class HttpJsonClient {
 public:
  HttpJsonClient(std::string endpoint, double timeout_seconds, int max_in_flight, int retries);

  /// Throws Error(RemoteUnavailable) after exhausting retries, or
  /// Error(Timeout) when the last failure was a read timeout.
  nlohmann::json post(const nlohmann::json& body) const;

  const std::string& endpoint() const noexcept { return endpoint_; }

 private:
  std::string endpoint_;
  std::string origin_;  // scheme://host:port
  std::string path_;
  double timeout_seconds_;
  int retries_;
  mutable std::counting_semaphore<1024> in_flight_;
};

}  // namespace wikiprf
