#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "swiftmem/error.hpp"

namespace swiftmem {

/// Store-local episode identifier, assigned densely from 0 at ingestion.
struct EpisodeId {
    std::uint64_t value = 0;

    constexpr EpisodeId() = default;
    constexpr explicit EpisodeId(std::uint64_t v) : value(v) {}

    friend constexpr auto operator<=>(EpisodeId, EpisodeId) = default;
    friend std::ostream& operator<<(std::ostream& os, EpisodeId id) { return os << id.value; }
};

/// Milliseconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

using UserId = std::string;

/// Embeddings are stored single precision; all similarity math runs in double.
using Embedding = std::vector<float>;

inline constexpr Timestamp kMillisPerDay = 86'400'000;

/// Half-open time range [start, end).
struct TimeInterval {
    Timestamp start = 0;
    Timestamp end = 0;

    constexpr TimeInterval() = default;
    TimeInterval(Timestamp s, Timestamp e) : start(s), end(e) {
        if (!(s < e)) {
            throw Error(ErrorCode::InvalidArgument,
                        "interval start must precede end (" + std::to_string(s) + " >= " + std::to_string(e) + ")");
        }
    }

    bool contains(Timestamp t) const noexcept { return start <= t && t < end; }

    friend bool operator==(const TimeInterval&, const TimeInterval&) = default;
    friend std::ostream& operator<<(std::ostream& os, const TimeInterval& iv) {
        return os << '[' << iv.start << ',' << iv.end << ')';
    }
};

/// One (episode, cosine score) pair as produced by ranking.
struct ScoredEpisode {
    EpisodeId id;
    double score = 0.0;

    friend bool operator==(const ScoredEpisode&, const ScoredEpisode&) = default;
};

/// Descending score, ascending id on ties.
inline bool ranks_before(const ScoredEpisode& a, const ScoredEpisode& b) noexcept {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
}

} // namespace swiftmem

template <>
struct std::hash<swiftmem::EpisodeId> {
    std::size_t operator()(swiftmem::EpisodeId id) const noexcept { return std::hash<std::uint64_t>{}(id.value); }
};
