#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "http_json.hpp"

#include "httplib.h"
#include "qgpt/error.hpp"

namespace qgpt::detail {

namespace {

// "http://host:port/v1" -> ("http://host:port", "/v1")
std::pair<std::string, std::string> split_base_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  const auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  const auto slash = url.find('/', host_start);
  if (slash == std::string::npos) return {url, ""};
  auto prefix = url.substr(slash);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, slash), prefix};
}

}  // namespace

nlohmann::json post_json(const std::string& base_url, const std::string& path,
                         const nlohmann::json& body, const std::string& api_key,
                         int timeout_seconds) {
  const auto [origin, prefix] = split_base_url(base_url);
  httplib::Client client(origin);
  if (!client.is_valid()) {
    throw Error(ErrorCategory::kProviderError, "invalid base url '" + base_url + "'");
  }
  client.set_connection_timeout(timeout_seconds, 0);
  client.set_read_timeout(timeout_seconds, 0);
  client.set_write_timeout(timeout_seconds, 0);
  if (!api_key.empty()) client.set_bearer_token_auth(api_key);

  auto res = client.Post(prefix + path, body.dump(), "application/json");
  if (!res) {
    throw Error(ErrorCategory::kProviderError,
                "request to " + base_url + path + " failed: " + httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    throw Error(ErrorCategory::kProviderError,
                "HTTP " + std::to_string(res->status) + " from " + base_url + path + ": " +
                    res->body.substr(0, 200));
  }
  auto parsed = nlohmann::json::parse(res->body, nullptr, false);
  if (parsed.is_discarded()) {
    throw Error(ErrorCategory::kProviderError, "non-JSON response from " + base_url + path);
  }
  return parsed;
}

}  // namespace qgpt::detail
