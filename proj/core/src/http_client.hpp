#pragma once

#include <nlohmann/json.hpp>

#include <string>

namespace kgrag::detail {

struct HttpPolicy {
    int timeout_ms = 30000;
    int max_attempts = 3;
    int backoff_ms = 500;
};

// POSTs `body` as JSON with a bearer token (when non-empty) and returns the parsed reply.
// Connection failures, 429 and 5xx are retried with exponential backoff; the last
// failure becomes TransportError (no response) or ProviderError (verbatim payload).
nlohmann::json post_json(const std::string& url, const std::string& api_key,
                         const nlohmann::json& body, const HttpPolicy& policy);

}  // namespace kgrag::detail
