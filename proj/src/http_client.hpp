#pragma once

#include <chrono>
#include <string>

namespace conceptrank::detail {

struct HttpRequest {
  std::string base_url;  // scheme://host[:port][/prefix]
  std::string path;      // appended to the prefix of base_url
  std::string body;
  std::string bearer_token;
  int timeout_seconds = 60;
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
};

/// POSTs a JSON body. Connection failures, 429 and 5xx are retried up to
/// `max_retries` times with doubling backoff; then TransportError. Other
/// non-2xx statuses fail immediately.
std::string post_json(const HttpRequest& request);

}  // namespace conceptrank::detail
