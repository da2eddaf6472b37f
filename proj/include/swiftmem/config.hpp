#pragma once

#include <charconv>
#include <cstddef>
#include <fstream>
#include <string>
#include <string_view>

#include "swiftmem/error.hpp"

namespace swiftmem {

struct StoreConfig {
    std::size_t dim = 384;           // embedding dimension
    std::size_t route_k = 5;         // tags selected per query
    std::size_t max_depth = 2;       // tag expansion depth
    std::size_t top_k_results = 10;
    double consolidation_cohesion_min = 0.3;
    double consolidation_fragmentation_min = 0.25;
    bool expand_parents = false;     // add one level of parents of the seed tags
    std::size_t cooccur_min = 0;     // 0 disables co-occurrence edges when clustering
    double fallback_similarity_min = 0.5;

    void validate() const {
        auto bad = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); };
        if (dim < 1) bad("dim must be >= 1");
        if (route_k < 1) bad("k must be >= 1");
        if (consolidation_cohesion_min < 0.0 || consolidation_cohesion_min > 1.0)
            bad("consolidation_cohesion_min must be in [0,1]");
        if (consolidation_fragmentation_min < 0.0 || consolidation_fragmentation_min > 1.0)
            bad("consolidation_fragmentation_min must be in [0,1]");
        if (fallback_similarity_min < -1.0 || fallback_similarity_min > 1.0)
            bad("fallback_similarity_min must be in [-1,1]");
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::size_t parse_count(std::string_view key, std::string_view v) {
    std::size_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size())
        throw Error(ErrorCode::InvalidArgument, "bad integer for " + std::string(key) + ": " + std::string(v));
    return out;
}

inline double parse_real(std::string_view key, std::string_view v) {
    try {
        std::size_t used = 0;
        double out = std::stod(std::string(v), &used);
        if (used != v.size()) throw std::invalid_argument("trailing");
        return out;
    } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidArgument, "bad number for " + std::string(key) + ": " + std::string(v));
    }
}

inline bool parse_bool(std::string_view key, std::string_view v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw Error(ErrorCode::InvalidArgument, "bad boolean for " + std::string(key) + ": " + std::string(v));
}

} // namespace detail

/// Applies one `key = value` setting. Unknown keys are rejected.
inline void apply_config_entry(StoreConfig& cfg, std::string_view key, std::string_view value) {
    using namespace detail;
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (key == "d" || key == "dim") cfg.dim = parse_count(key, value);
    else if (key == "k") cfg.route_k = parse_count(key, value);
    else if (key == "d_max" || key == "max_depth" || key == "depth") cfg.max_depth = parse_count(key, value);
    else if (key == "top_k" || key == "top_k_results") cfg.top_k_results = parse_count(key, value);
    else if (key == "consolidation_cohesion_min") cfg.consolidation_cohesion_min = parse_real(key, value);
    else if (key == "consolidation_fragmentation_min") cfg.consolidation_fragmentation_min = parse_real(key, value);
    else if (key == "expand_parents") cfg.expand_parents = parse_bool(key, value);
    else if (key == "cooccur_min") cfg.cooccur_min = parse_count(key, value);
    else if (key == "fallback_similarity_min") cfg.fallback_similarity_min = parse_real(key, value);
    else throw Error(ErrorCode::InvalidArgument, "unknown config key '" + std::string(key) + "'");
}

/// Calls `fn(key, value)` for every `key = value` line of a flat config file
/// (TOML subset: `#` comments, optional quotes, `[section]` headers ignored).
template <class Fn>
void for_each_config_entry(const std::string& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open config " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view sv = line;
        if (auto hash = sv.find('#'); hash != std::string_view::npos) sv = sv.substr(0, hash);
        sv = detail::trim(sv);
        if (sv.empty() || sv.front() == '[') continue;
        auto eq = sv.find('=');
        if (eq == std::string_view::npos)
            throw Error(ErrorCode::InvalidArgument, "config line " + std::to_string(lineno) + " has no '='");
        std::string_view value = detail::trim(sv.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
        fn(detail::trim(sv.substr(0, eq)), value);
    }
}

inline StoreConfig load_config_file(const std::string& path, StoreConfig base = {}) {
    for_each_config_entry(path, [&](std::string_view k, std::string_view v) { apply_config_entry(base, k, v); });
    base.validate();
    return base;
}

} // namespace swiftmem
