#pragma once

#include <chrono>
#include <cstdlib>
#include <string>
#include <string_view>
#include <utility>

#include <httplib.h>
#include <json.hpp>

#include "swiftmem/error.hpp"

namespace swiftmem::adapters {

enum class ProviderMode { Offline, Remote };

/// Connection settings shared by the remote tagger and embedder.
struct RemoteSpec {
    ProviderMode mode = ProviderMode::Offline;
    std::string endpoint; // full URL, e.g. http://127.0.0.1:8080/v1/embeddings
    std::string model;
    std::string api_key;
    int timeout_ms = 10'000;
};

inline std::string env_or(const char* name, std::string fallback = {}) {
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : std::move(fallback);
}

/// Splits "scheme://host[:port]/path" into ("scheme://host[:port]", "/path").
inline std::pair<std::string, std::string> split_url(std::string_view url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos)
        throw Error(ErrorCode::InvalidArgument, "endpoint '" + std::string(url) + "' has no scheme");
    const auto path_begin = url.find('/', scheme_end + 3);
    if (path_begin == std::string_view::npos) return {std::string(url), "/"};
    return {std::string(url.substr(0, path_begin)), std::string(url.substr(path_begin))};
}

/// POSTs a JSON body and returns the parsed JSON reply. Transport failures,
/// timeouts, non-2xx statuses and unparsable bodies raise RemoteUnavailable.
inline nlohmann::json post_json(const RemoteSpec& spec, const nlohmann::json& body) {
    if (spec.endpoint.empty()) throw Error(ErrorCode::InvalidArgument, "remote mode requires an endpoint");
    const auto [base, path] = split_url(spec.endpoint);
    httplib::Client client(base);
    const auto timeout = std::chrono::milliseconds(spec.timeout_ms);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers headers;
    if (!spec.api_key.empty()) headers.emplace("Authorization", "Bearer " + spec.api_key);

    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) throw Error(ErrorCode::RemoteUnavailable, spec.endpoint + ": " + httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300)
        throw Error(ErrorCode::RemoteUnavailable, spec.endpoint + ": HTTP " + std::to_string(res->status));
    try {
        return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::RemoteUnavailable, spec.endpoint + ": unparsable reply: " + e.what());
    }
}

} // namespace swiftmem::adapters
