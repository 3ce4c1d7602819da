#include "http_client.hpp"

#include "kgrag/errors.hpp"

#include <httplib.h>

#include <chrono>
#include <thread>

namespace kgrag::detail {

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("endpoint URL lacks a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

bool retryable(int status) { return status == 429 || status >= 500; }

}  // namespace

nlohmann::json post_json(const std::string& url, const std::string& api_key,
                         const nlohmann::json& body, const HttpPolicy& policy) {
    const auto [origin, path] = split_url(url);
    httplib::Client client(origin);
    const auto timeout = std::chrono::milliseconds(policy.timeout_ms);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    httplib::Headers headers;
    if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);
    const auto payload = body.dump();
    const int attempts = std::max(1, policy.max_attempts);

    int delay_ms = policy.backoff_ms;
    for (int attempt = 1;; ++attempt) {
        auto res = client.Post(path, headers, payload, "application/json");
        if (res && res->status >= 200 && res->status < 300) {
            nlohmann::json reply;
            try {
                reply = nlohmann::json::parse(res->body);
            } catch (const nlohmann::json::exception&) {
                throw ProviderError(res->status, res->body);
            }
            if (reply.is_object() && reply.contains("error"))
                throw ProviderError(res->status, res->body);
            return reply;
        }
        const bool last = attempt >= attempts;
        if (res && !retryable(res->status)) throw ProviderError(res->status, res->body);
        if (last) {
            if (res) throw ProviderError(res->status, res->body);
            throw TransportError("POST " + url + " failed: " + httplib::to_string(res.error()),
                                 attempt);
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
        delay_ms *= 2;
    }
}

}  // namespace kgrag::detail
