#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "swiftmem/config.hpp"
#include "swiftmem/error.hpp"
#include "swiftmem/tag.hpp"
#include "swiftmem/types.hpp"
#include "swiftmem/vector_math.hpp"

namespace swiftmem {

/// One conversational exchange (user utterance plus agent response).
struct Episode {
    EpisodeId id;
    UserId user;
    std::string content;
    Timestamp timestamp = 0;
    Embedding embedding;
    std::vector<TagId> tags; // sorted, unique

    friend bool operator==(const Episode&, const Episode&) = default;
};

/// Canonical append-only episode store. Ids are dense: after n stores the
/// stored ids are exactly 0..n-1, so the backing vector is indexed by id.
class MemoryStore {
public:
    explicit MemoryStore(StoreConfig config = {}) : config_(std::move(config)) { config_.validate(); }

    const StoreConfig& config() const noexcept { return config_; }
    StoreConfig& mutable_config() noexcept { return config_; }

    std::size_t size() const noexcept { return episodes_.size(); }
    bool empty() const noexcept { return episodes_.empty(); }
    EpisodeId next_id() const noexcept { return EpisodeId{episodes_.size()}; }

    EpisodeId store_episode(UserId user, std::string content, Timestamp timestamp, Embedding embedding,
                            std::vector<TagId> tags) {
        validate_embedding(embedding);
        if (timestamp < 0)
            throw Error(ErrorCode::InvalidArgument, "negative timestamp " + std::to_string(timestamp));
        std::sort(tags.begin(), tags.end());
        tags.erase(std::unique(tags.begin(), tags.end()), tags.end());

        Episode e;
        e.id = next_id();
        e.user = std::move(user);
        e.content = std::move(content);
        e.timestamp = timestamp;
        e.embedding = std::move(embedding);
        e.tags = std::move(tags);
        episodes_.push_back(std::move(e));
        return episodes_.back().id;
    }

    const Episode& get_episode(EpisodeId id) const {
        if (id.value >= episodes_.size())
            throw Error(ErrorCode::NotFound, "episode " + std::to_string(id.value));
        return episodes_[id.value];
    }

    bool contains(EpisodeId id) const noexcept { return id.value < episodes_.size(); }

    std::span<const Episode> episodes() const noexcept { return episodes_; }

    void validate_embedding(std::span<const float> embedding) const {
        if (embedding.size() != config_.dim)
            throw Error(ErrorCode::DimensionMismatch, "embedding length " + std::to_string(embedding.size()) +
                                                          ", expected " + std::to_string(config_.dim));
        const double n = l2_norm(embedding);
        if (!(n > 0.0) || !std::isfinite(n)) throw Error(ErrorCode::ZeroNorm, "episode embedding has no direction");
    }

private:
    StoreConfig config_;
    std::vector<Episode> episodes_;
};

} // namespace swiftmem
