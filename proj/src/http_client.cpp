#include "http_client.hpp"

#include <thread>

#include "conceptrank/errors.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

namespace conceptrank::detail {

namespace {

struct SplitUrl {
  std::string origin;
  std::string prefix;
};

SplitUrl split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  auto path_start = url.find('/', host_start);
  if (path_start == std::string::npos) return {url, ""};
  std::string prefix = url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, path_start), prefix};
}

}  // namespace

std::string post_json(const HttpRequest& request) {
  auto [origin, prefix] = split_url(request.base_url);
  httplib::Client client(origin);
  client.set_connection_timeout(request.timeout_seconds, 0);
  client.set_read_timeout(request.timeout_seconds, 0);
  client.set_write_timeout(request.timeout_seconds, 0);
  httplib::Headers headers;
  if (!request.bearer_token.empty()) {
    headers.emplace("Authorization", "Bearer " + request.bearer_token);
  }
  const std::string full_path = prefix + request.path;

  auto backoff = request.initial_backoff;
  std::string last_error;
  for (int attempt = 0; attempt <= request.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    auto res = client.Post(full_path, headers, request.body, "application/json");
    if (!res) {
      last_error = "request failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 200 && res->status < 300) return res->body;
    last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200);
    if (res->status != 429 && res->status < 500) throw TransportError(last_error);
  }
  throw TransportError(last_error + " (after " + std::to_string(request.max_retries) +
                       " retries)");
}

}  // namespace conceptrank::detail
