#pragma once

#include <string>

#include "json.hpp"

namespace qgpt::detail {

/// POST `body` to `base_url` + `path` and parse the JSON reply. Connection
/// failures, non-2xx statuses and unparsable bodies throw kProviderError.
nlohmann::json post_json(const std::string& base_url, const std::string& path,
                         const nlohmann::json& body, const std::string& api_key,
                         int timeout_seconds);

}  // namespace qgpt::detail
