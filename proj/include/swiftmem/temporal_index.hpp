#pragma once

#include <algorithm>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "swiftmem/error.hpp"
#include "swiftmem/types.hpp"

namespace swiftmem {

/// Per-user timelines sorted by (timestamp, id) plus a global id -> (user, timestamp) map.
///
/// Timelines are contiguous sorted vectors. Lookups are two binary searches;
/// inserts binary-search the position and shift the tail, which is O(1)
/// amortised for the usual in-order arrival and O(n) in the worst case.
class TemporalIndex {
public:
    struct Entry {
        Timestamp ts = 0;
        EpisodeId id;

        friend bool operator==(const Entry&, const Entry&) = default;
        friend auto operator<=>(const Entry& a, const Entry& b) {
            if (auto c = a.ts <=> b.ts; c != 0) return c;
            return a.id <=> b.id;
        }
    };

    struct Location {
        UserId user;
        Timestamp ts = 0;
    };

    /// Optional instrumentation for complexity checks.
    struct Counters {
        std::size_t comparisons = 0;
    };

    void insert(const UserId& user, Timestamp ts, EpisodeId id) {
        auto [it, fresh] = lookup_.try_emplace(id, Location{user, ts});
        if (!fresh) throw Error(ErrorCode::DuplicateEpisode, "episode " + std::to_string(id.value) + " already indexed");
        auto& line = timelines_[user];
        const Entry e{ts, id};
        line.insert(std::upper_bound(line.begin(), line.end(), e), e);
    }

    /// Ids with start <= ts < end, ascending by (timestamp, id). Unknown users yield [].
    std::vector<EpisodeId> range_query(const UserId& user, const TimeInterval& iv, Counters* counters = nullptr) const {
        std::vector<EpisodeId> out;
        auto line = timeline(user);
        append_range(line, iv, out, counters);
        return out;
    }

    /// Minimal sorted set of disjoint, non-adjacent intervals covering the same points.
    static std::vector<TimeInterval> merge_intervals(std::vector<TimeInterval> intervals) {
        std::sort(intervals.begin(), intervals.end(),
                  [](const TimeInterval& a, const TimeInterval& b) {
                      return a.start != b.start ? a.start < b.start : a.end < b.end;
                  });
        std::vector<TimeInterval> merged;
        for (const auto& iv : intervals) {
            if (!merged.empty() && iv.start <= merged.back().end) {
                merged.back().end = std::max(merged.back().end, iv.end);
            } else {
                merged.push_back(iv);
            }
        }
        return merged;
    }

    /// Union of range queries over the merged intervals; ascending, no duplicates.
    std::vector<EpisodeId> multi_range_query(const UserId& user, const std::vector<TimeInterval>& intervals,
                                             Counters* counters = nullptr) const {
        std::vector<EpisodeId> out;
        auto line = timeline(user);
        if (line.empty()) return out;
        for (const auto& iv : merge_intervals(intervals)) append_range(line, iv, out, counters);
        return out;
    }

    /// Up to n most recent ids, newest first.
    std::vector<EpisodeId> recent(const UserId& user, std::size_t n) const {
        auto line = timeline(user);
        n = std::min(n, line.size());
        std::vector<EpisodeId> out;
        out.reserve(n);
        for (std::size_t i = 0; i < n; ++i) out.push_back(line[line.size() - 1 - i].id);
        return out;
    }

    std::span<const Entry> timeline(const UserId& user) const {
        auto it = timelines_.find(user);
        if (it == timelines_.end()) return {};
        return it->second;
    }

    std::optional<Location> lookup(EpisodeId id) const {
        auto it = lookup_.find(id);
        if (it == lookup_.end()) return std::nullopt;
        return it->second;
    }

    std::vector<UserId> users() const {
        std::vector<UserId> out;
        out.reserve(timelines_.size());
        for (const auto& [u, _] : timelines_) out.push_back(u);
        std::sort(out.begin(), out.end());
        return out;
    }

    std::size_t size() const noexcept { return lookup_.size(); }

private:
    static void append_range(std::span<const Entry> line, const TimeInterval& iv, std::vector<EpisodeId>& out,
                             Counters* counters) {
        std::size_t cmp = 0;
        auto ts_less = [&cmp](const Entry& e, Timestamp t) {
            ++cmp;
            return e.ts < t;
        };
        auto lo = std::lower_bound(line.begin(), line.end(), iv.start, ts_less);
        auto hi = std::lower_bound(lo, line.end(), iv.end, ts_less);
        if (counters) counters->comparisons += cmp;
        for (auto it = lo; it != hi; ++it) out.push_back(it->id);
    }

    std::unordered_map<UserId, std::vector<Entry>> timelines_;
    std::unordered_map<EpisodeId, Location> lookup_;
};

} // namespace swiftmem
