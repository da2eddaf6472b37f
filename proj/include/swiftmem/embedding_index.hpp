#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "swiftmem/config.hpp"
#include "swiftmem/error.hpp"
#include "swiftmem/tag_dag.hpp"
#include "swiftmem/types.hpp"
#include "swiftmem/vector_math.hpp"

namespace swiftmem {

/// Bounded selection of the best `k` scored episodes under `ranks_before`.
class TopK {
public:
    explicit TopK(std::size_t k) : k_(k) { heap_.reserve(k); }

    void push(const ScoredEpisode& s) {
        if (k_ == 0) return;
        // heap_.front() is the weakest retained entry
        auto weaker_on_top = [](const ScoredEpisode& a, const ScoredEpisode& b) { return ranks_before(a, b); };
        if (heap_.size() < k_) {
            heap_.push_back(s);
            std::push_heap(heap_.begin(), heap_.end(), weaker_on_top);
        } else if (ranks_before(s, heap_.front())) {
            std::pop_heap(heap_.begin(), heap_.end(), weaker_on_top);
            heap_.back() = s;
            std::push_heap(heap_.begin(), heap_.end(), weaker_on_top);
        }
    }

    std::vector<ScoredEpisode> take() && {
        std::sort(heap_.begin(), heap_.end(), ranks_before);
        return std::move(heap_);
    }

private:
    std::size_t k_;
    std::vector<ScoredEpisode> heap_;
};

/// Semantic tag cluster: a weakly connected group of tags.
struct TagCluster {
    std::uint32_t id = 0;
    std::vector<TagId> members; // sorted
    TagId centroid;
    double cohesion = 1.0;
};

/// Physical extent of one tag's embeddings after consolidation.
struct LayoutEntry {
    TagId tag;
    std::size_t o_start = 0;
    std::size_t o_end = 0;
    std::uint32_t cluster = 0;
    std::size_t count = 0;
};

struct ConsolidationReport {
    std::vector<LayoutEntry> layout;
    std::size_t moved = 0;
    std::size_t clusters = 0;
    double fragmentation_before = 0.0;
    double fragmentation_after = 0.0;
    bool performed = true;
};

/// Snapshot of how well the current layout matches the tag clusters.
struct LayoutHealth {
    double fragmentation = 0.0;
    double weighted_cohesion = 0.0;
    double score = 0.0;
};

/// Contiguous store of episode embeddings with exact cosine ranking.
class EmbeddingIndex {
public:
    static constexpr std::uint32_t kNoSlot = std::numeric_limits<std::uint32_t>::max();

    /// Everything that moves on consolidation lives here so a rebuilt arena
    /// can be prepared aside and swapped in one move.
    struct Arena {
        std::vector<float> data;              // size() * dim values, row per slot
        std::vector<double> norms;            // L2 norm per slot
        std::vector<EpisodeId> slot_to_episode;
        std::vector<std::uint32_t> episode_to_slot; // indexed by EpisodeId::value
    };

    struct PreparedLayout {
        Arena arena;
        ConsolidationReport report;
    };

    explicit EmbeddingIndex(std::size_t dim) : dim_(dim) {}

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return arena_.slot_to_episode.size(); }

    void reserve(std::size_t n) {
        arena_.data.reserve(n * dim_);
        arena_.norms.reserve(n);
        arena_.slot_to_episode.reserve(n);
        arena_.episode_to_slot.reserve(n);
    }

    /// Appends at the end of the arena and returns the slot.
    std::size_t add(EpisodeId id, std::span<const float> embedding) {
        if (embedding.size() != dim_)
            throw Error(ErrorCode::DimensionMismatch, "embedding length " + std::to_string(embedding.size()) +
                                                          ", expected " + std::to_string(dim_));
        if (slot_of(id)) throw Error(ErrorCode::DuplicateEpisode, "episode " + std::to_string(id.value));
        const auto slot = static_cast<std::uint32_t>(size());
        arena_.data.insert(arena_.data.end(), embedding.begin(), embedding.end());
        arena_.norms.push_back(l2_norm(embedding));
        arena_.slot_to_episode.push_back(id);
        if (arena_.episode_to_slot.size() <= id.value) arena_.episode_to_slot.resize(id.value + 1, kNoSlot);
        arena_.episode_to_slot[id.value] = slot;
        return slot;
    }

    std::optional<std::size_t> slot_of(EpisodeId id) const noexcept {
        if (id.value >= arena_.episode_to_slot.size()) return std::nullopt;
        const auto s = arena_.episode_to_slot[id.value];
        if (s == kNoSlot) return std::nullopt;
        return s;
    }

    EpisodeId episode_at(std::size_t slot) const { return arena_.slot_to_episode.at(slot); }

    std::span<const float> row(std::size_t slot) const noexcept {
        return {arena_.data.data() + slot * dim_, dim_};
    }

    std::span<const float> embedding(EpisodeId id) const {
        auto s = slot_of(id);
        if (!s) throw Error(ErrorCode::NotFound, "episode " + std::to_string(id.value) + " has no embedding");
        return row(*s);
    }

    /// Top `top_k` of `candidates` by cosine to `query`; descending score, ascending id on ties.
    std::vector<ScoredEpisode> rank(std::span<const float> query, std::span<const EpisodeId> candidates,
                                    std::size_t top_k) const {
        query_norm(query);
        std::vector<std::uint32_t> slots;
        slots.reserve(candidates.size());
        for (EpisodeId id : candidates) {
            auto s = slot_of(id);
            if (!s) throw Error(ErrorCode::NotFound, "candidate episode " + std::to_string(id.value));
            slots.push_back(static_cast<std::uint32_t>(*s));
        }
        std::sort(slots.begin(), slots.end());
        slots.erase(std::unique(slots.begin(), slots.end()), slots.end());
        return rank_slots(query, slots, top_k);
    }

    /// Ranks the given slots, which must be sorted and unique. Visiting in slot
    /// order turns a consolidated layout into sequential reads.
    std::vector<ScoredEpisode> rank_slots(std::span<const float> query, std::span<const std::uint32_t> slots,
                                          std::size_t top_k) const {
        const double qn = query_norm(query);
        TopK best(top_k);
        constexpr std::size_t kAhead = 2;
        for (std::size_t i = 0; i < slots.size(); ++i) {
            if (i + kAhead < slots.size()) prefetch_row(slots[i + kAhead]);
            best.push(score_slot(query, qn, slots[i]));
        }
        return std::move(best).take();
    }

    /// Slot list for a set of episodes: sorted, duplicates removed, unknown ids skipped.
    std::vector<std::uint32_t> slots_for(std::span<const EpisodeId> ids) const {
        std::vector<std::uint32_t> slots;
        slots.reserve(ids.size());
        for (EpisodeId id : ids)
            if (id.value < arena_.episode_to_slot.size() && arena_.episode_to_slot[id.value] != kNoSlot)
                slots.push_back(arena_.episode_to_slot[id.value]);
        std::sort(slots.begin(), slots.end());
        slots.erase(std::unique(slots.begin(), slots.end()), slots.end());
        return slots;
    }

    /// Exhaustive ranking over every stored embedding.
    std::vector<ScoredEpisode> rank_all(std::span<const float> query, std::size_t top_k) const {
        return rank_where(query, [](EpisodeId) { return true; }, top_k);
    }

    /// Exhaustive scan in slot order, scoring only episodes accepted by `keep`.
    template <class Pred>
    std::vector<ScoredEpisode> rank_where(std::span<const float> query, Pred&& keep, std::size_t top_k,
                                          std::size_t* examined = nullptr) const {
        const double qn = query_norm(query);
        TopK best(top_k);
        std::size_t n = 0;
        for (std::size_t s = 0; s < size(); ++s) {
            if (!keep(arena_.slot_to_episode[s])) continue;
            ++n;
            best.push(score_slot(query, qn, s));
        }
        if (examined) *examined = n;
        return std::move(best).take();
    }

    /// Builds the cluster-ordered arena without touching the live one.
    PreparedLayout prepare_consolidation(const TagDag& dag, const std::vector<TagCluster>& clusters) const;

    void install(Arena&& arena) noexcept { arena_ = std::move(arena); }

    /// A copy of the arena with slots in the given episode order, which must be
    /// a permutation of the stored ids.
    Arena arranged(std::span<const EpisodeId> order) const {
        if (order.size() != size())
            throw Error(ErrorCode::InvalidArgument, "layout lists " + std::to_string(order.size()) +
                                                        " episodes, arena holds " + std::to_string(size()));
        Arena fresh;
        fresh.data.resize(arena_.data.size());
        fresh.norms.resize(arena_.norms.size());
        fresh.slot_to_episode.assign(order.begin(), order.end());
        fresh.episode_to_slot.assign(arena_.episode_to_slot.size(), kNoSlot);
        for (std::uint32_t to = 0; to < order.size(); ++to) {
            auto from = slot_of(order[to]);
            if (!from || fresh.episode_to_slot[order[to].value] != kNoSlot)
                throw Error(ErrorCode::InvalidArgument, "layout is not a permutation of the stored episodes");
            std::copy_n(row(*from).begin(), dim_, fresh.data.begin() + std::ptrdiff_t(std::size_t(to) * dim_));
            fresh.norms[to] = arena_.norms[*from];
            fresh.episode_to_slot[order[to].value] = to;
        }
        return fresh;
    }

    ConsolidationReport consolidate(const TagDag& dag, const std::vector<TagCluster>& clusters) {
        auto prepared = prepare_consolidation(dag, clusters);
        install(std::move(prepared.arena));
        return std::move(prepared.report);
    }

    const Arena& arena() const noexcept { return arena_; }

private:
    double query_norm(std::span<const float> query) const {
        if (query.size() != dim_)
            throw Error(ErrorCode::DimensionMismatch, "query length " + std::to_string(query.size()) + ", expected " +
                                                          std::to_string(dim_));
        const double qn = l2_norm(query);
        if (qn == 0.0) throw Error(ErrorCode::ZeroNorm, "query embedding is zero");
        return qn;
    }

    void prefetch_row(std::size_t slot) const noexcept {
#if defined(__GNUC__)
        const char* p = reinterpret_cast<const char*>(arena_.data.data() + slot * dim_);
        for (std::size_t off = 0; off < dim_ * sizeof(float); off += 64) __builtin_prefetch(p + off);
#else
        (void)slot;
#endif
    }

    ScoredEpisode score_slot(std::span<const float> query, double qn, std::size_t slot) const {
        return {arena_.slot_to_episode[slot], dot(query, row(slot)) / (qn * arena_.norms[slot])};
    }

    std::size_t dim_;
    Arena arena_;
};

// ---------------------------------------------------------------------------
// Clustering and layout accounting

namespace detail {

struct DisjointSets {
    std::vector<std::uint32_t> parent;
    explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0u); }
    std::uint32_t find(std::uint32_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(std::uint32_t a, std::uint32_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

inline std::uint64_t pair_key(std::uint32_t a, std::uint32_t b) {
    if (a > b) std::swap(a, b);
    return (std::uint64_t(a) << 32) | b;
}

} // namespace detail

/// Undirected edges of the clustering graph: every DAG edge, plus an edge
/// between tags sharing at least `cooccur_min` episodes when that is nonzero.
inline std::vector<std::uint64_t> clustering_edges(const TagDag& dag, std::size_t cooccur_min) {
    std::vector<std::uint64_t> edges;
    for (const auto& [p, c] : dag.edges()) edges.push_back(detail::pair_key(p, c));
    if (cooccur_min > 0) {
        std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> tags_of_episode;
        for (std::uint32_t i = 0; i < dag.size(); ++i)
            for (EpisodeId e : dag.node(i).episodes) tags_of_episode[e.value].push_back(i);
        std::unordered_map<std::uint64_t, std::size_t> shared;
        for (const auto& [_, tags] : tags_of_episode)
            for (std::size_t a = 0; a < tags.size(); ++a)
                for (std::size_t b = a + 1; b < tags.size(); ++b) ++shared[detail::pair_key(tags[a], tags[b])];
        for (const auto& [key, n] : shared)
            if (n >= cooccur_min) edges.push_back(key);
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return edges;
}

/// Weakly connected components of the tag graph. Clusters are numbered in
/// order of their lexicographically smallest member. Cohesion is the share of
/// possible undirected member pairs that are linked (1.0 for singletons); the
/// centroid is the member with the most episodes, ties to the smaller tag.
inline std::vector<TagCluster> cluster_tags(const TagDag& dag, std::size_t cooccur_min = 0) {
    const std::size_t n = dag.size();
    if (n == 0) return {};
    const auto edges = clustering_edges(dag, cooccur_min);
    detail::DisjointSets sets(n);
    for (auto key : edges) sets.unite(static_cast<std::uint32_t>(key >> 32), static_cast<std::uint32_t>(key));

    std::map<std::uint32_t, std::vector<std::uint32_t>> groups;
    for (std::uint32_t i = 0; i < n; ++i) groups[sets.find(i)].push_back(i);
    std::unordered_map<std::uint32_t, std::size_t> internal_edges;
    for (auto key : edges) ++internal_edges[sets.find(static_cast<std::uint32_t>(key >> 32))];

    std::vector<TagCluster> clusters;
    clusters.reserve(groups.size());
    for (auto& [root, members] : groups) {
        TagCluster c;
        std::sort(members.begin(), members.end(),
                  [&](std::uint32_t a, std::uint32_t b) { return dag.node(a).tag < dag.node(b).tag; });
        std::uint32_t centroid = members.front();
        for (auto m : members)
            if (dag.node(m).episodes.size() > dag.node(centroid).episodes.size()) centroid = m;
        c.centroid = dag.node(centroid).tag;
        const double m = double(members.size());
        c.cohesion = members.size() < 2 ? 1.0 : double(internal_edges[root]) / (m * (m - 1.0) / 2.0);
        for (auto i : members) c.members.push_back(dag.node(i).tag);
        clusters.push_back(std::move(c));
    }
    std::sort(clusters.begin(), clusters.end(),
              [](const TagCluster& a, const TagCluster& b) { return a.members.front() < b.members.front(); });
    for (std::uint32_t i = 0; i < clusters.size(); ++i) clusters[i].id = i;
    return clusters;
}

/// Each tagged episode is owned by the lexicographically smallest tag it
/// carries. Returns, per DAG node index, the owned episode ids in ascending order.
inline std::vector<std::vector<EpisodeId>> owned_episodes(const TagDag& dag) {
    std::vector<std::uint32_t> by_name(dag.size());
    std::iota(by_name.begin(), by_name.end(), 0u);
    std::sort(by_name.begin(), by_name.end(),
              [&](std::uint32_t a, std::uint32_t b) { return dag.node(a).tag < dag.node(b).tag; });
    std::unordered_map<std::uint64_t, char> claimed;
    std::vector<std::vector<EpisodeId>> owned(dag.size());
    for (auto i : by_name)
        for (EpisodeId e : dag.node(i).episodes)
            if (claimed.emplace(e.value, 1).second) owned[i].push_back(e);
    return owned;
}

/// 1 - mean over tags of (longest run of consecutive slots / owned slot count),
/// over tags owning at least one stored embedding.
template <class SlotOf>
double fragmentation_by(SlotOf&& slot_of, const std::vector<std::vector<EpisodeId>>& owned) {
    double sum = 0.0;
    std::size_t tags = 0;
    std::vector<std::size_t> slots;
    for (const auto& eps : owned) {
        slots.clear();
        for (EpisodeId e : eps)
            if (std::optional<std::size_t> s = slot_of(e)) slots.push_back(*s);
        if (slots.empty()) continue;
        std::sort(slots.begin(), slots.end());
        std::size_t best = 1, run = 1;
        for (std::size_t i = 1; i < slots.size(); ++i) {
            run = (slots[i] == slots[i - 1] + 1) ? run + 1 : 1;
            best = std::max(best, run);
        }
        sum += double(best) / double(slots.size());
        ++tags;
    }
    return tags == 0 ? 0.0 : 1.0 - sum / double(tags);
}

inline double fragmentation(const EmbeddingIndex& index, const std::vector<std::vector<EpisodeId>>& owned) {
    return fragmentation_by([&](EpisodeId e) { return index.slot_of(e); }, owned);
}

inline double fragmentation(const EmbeddingIndex& index, const TagDag& dag) {
    return fragmentation(index, owned_episodes(dag));
}

/// Mean cluster cohesion weighted by the number of episodes each cluster owns.
/// Falls back to the plain mean when no cluster owns anything.
inline double weighted_cohesion(const TagDag& dag, const std::vector<TagCluster>& clusters,
                                const std::vector<std::vector<EpisodeId>>& owned) {
    if (clusters.empty()) return 0.0;
    double num = 0.0, den = 0.0, plain = 0.0;
    for (const auto& c : clusters) {
        std::size_t w = 0;
        for (const auto& t : c.members) w += owned[*dag.index_of(t)].size();
        num += c.cohesion * double(w);
        den += double(w);
        plain += c.cohesion;
    }
    return den > 0.0 ? num / den : plain / double(clusters.size());
}

inline double consolidation_score(double weighted_cohesion_value, double fragmentation_value) noexcept {
    return (weighted_cohesion_value + fragmentation_value) / 2.0;
}

inline LayoutHealth assess_layout(const EmbeddingIndex& index, const TagDag& dag,
                                  const std::vector<TagCluster>& clusters) {
    const auto owned = owned_episodes(dag);
    LayoutHealth h;
    h.fragmentation = fragmentation(index, owned);
    h.weighted_cohesion = weighted_cohesion(dag, clusters, owned);
    h.score = consolidation_score(h.weighted_cohesion, h.fragmentation);
    return h;
}

/// Both thresholds are inclusive.
inline bool should_consolidate(const LayoutHealth& h, const StoreConfig& cfg) noexcept {
    return h.fragmentation >= cfg.consolidation_fragmentation_min &&
           h.weighted_cohesion >= cfg.consolidation_cohesion_min;
}

inline EmbeddingIndex::PreparedLayout EmbeddingIndex::prepare_consolidation(
    const TagDag& dag, const std::vector<TagCluster>& clusters) const {
    const auto owned = owned_episodes(dag);
    PreparedLayout out;
    out.report.clusters = clusters.size();
    out.report.fragmentation_before = fragmentation(*this, owned);

    std::vector<std::uint32_t> order; // old slots in their new order
    order.reserve(size());
    std::vector<char> placed(size(), 0);
    for (const auto& c : clusters) {
        for (const auto& tag : c.members) {
            const auto node = *dag.index_of(tag);
            LayoutEntry entry{tag, order.size(), order.size(), c.id, 0};
            for (EpisodeId e : owned[node]) {
                auto s = slot_of(e);
                if (!s || placed[*s]) continue;
                placed[*s] = 1;
                order.push_back(static_cast<std::uint32_t>(*s));
            }
            entry.o_end = order.size();
            entry.count = entry.o_end - entry.o_start;
            out.report.layout.push_back(std::move(entry));
        }
    }
    // untagged episodes go last, in id order
    std::vector<std::uint32_t> rest;
    for (std::uint32_t s = 0; s < size(); ++s)
        if (!placed[s]) rest.push_back(s);
    std::sort(rest.begin(), rest.end(), [&](std::uint32_t a, std::uint32_t b) {
        return arena_.slot_to_episode[a] < arena_.slot_to_episode[b];
    });
    order.insert(order.end(), rest.begin(), rest.end());

    Arena& fresh = out.arena;
    fresh.data.resize(arena_.data.size());
    fresh.norms.resize(arena_.norms.size());
    fresh.slot_to_episode.resize(order.size());
    fresh.episode_to_slot.assign(arena_.episode_to_slot.size(), kNoSlot);
    for (std::uint32_t to = 0; to < order.size(); ++to) {
        const std::uint32_t from = order[to];
        std::copy_n(arena_.data.begin() + std::ptrdiff_t(from * dim_), dim_,
                    fresh.data.begin() + std::ptrdiff_t(to * dim_));
        fresh.norms[to] = arena_.norms[from];
        const EpisodeId id = arena_.slot_to_episode[from];
        fresh.slot_to_episode[to] = id;
        fresh.episode_to_slot[id.value] = to;
        if (from != to) ++out.report.moved;
    }

    out.report.fragmentation_after = fragmentation_by(
        [&](EpisodeId e) -> std::optional<std::size_t> {
            if (e.value >= fresh.episode_to_slot.size() || fresh.episode_to_slot[e.value] == kNoSlot) return std::nullopt;
            return fresh.episode_to_slot[e.value];
        },
        owned);
    return out;
}

} // namespace swiftmem
