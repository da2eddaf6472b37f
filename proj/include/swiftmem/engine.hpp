#pragma once

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "swiftmem/adapters/embedder.hpp"
#include "swiftmem/adapters/tagger.hpp"
#include "swiftmem/config.hpp"
#include "swiftmem/embedding_index.hpp"
#include "swiftmem/memory_store.hpp"
#include "swiftmem/query_engine.hpp"
#include "swiftmem/tag_dag.hpp"
#include "swiftmem/temporal_index.hpp"
#include "swiftmem/temporal_parser.hpp"

namespace swiftmem {

struct IngestResult {
    EpisodeId id;
    std::vector<TagId> tags;
    std::size_t relations_accepted = 0;
    std::size_t relations_rejected = 0; // cycle rejections only; repeats are not counted
};

struct EngineStats {
    std::size_t episodes = 0;
    std::size_t tags = 0;
    std::size_t edges = 0;
    double avg_parents = 0.0;
    double avg_children = 0.0;
    double fragmentation = 0.0;
    double weighted_cohesion = 0.0;
    std::size_t clusters = 0;
    std::size_t rejected_relations = 0;
    std::size_t fallback_queries = 0;
    std::size_t tagger_fallbacks = 0;
    std::map<UserId, std::size_t> users;
};

/// The store plus its three indexes behind one ingestion path.
///
/// One writer at a time (writer_mutex_); queries take the state lock shared
/// and the writer takes it exclusively only for the short publish step, so a
/// reader sees an episode in every index or in none.
class MemoryEngine {
public:
    using Clock = std::chrono::steady_clock;

    explicit MemoryEngine(StoreConfig config, std::shared_ptr<const adapters::Embedder> embedder = nullptr,
                          std::unique_ptr<adapters::Tagger> tagger = nullptr)
        : store_(config), dag_(config.dim), embeddings_(config.dim), embedder_(std::move(embedder)),
          tagger_(std::move(tagger)) {
        if (embedder_ && embedder_->dim() != config.dim)
            throw Error(ErrorCode::DimensionMismatch, "embedder dimension " + std::to_string(embedder_->dim()) +
                                                          ", store dimension " + std::to_string(config.dim));
    }

    MemoryEngine(const MemoryEngine&) = delete;
    MemoryEngine& operator=(const MemoryEngine&) = delete;

    const StoreConfig& config() const noexcept { return store_.config(); }
    std::size_t dim() const noexcept { return store_.config().dim; }
    const adapters::Embedder* embedder() const noexcept { return embedder_.get(); }
    adapters::Tagger* tagger() noexcept { return tagger_.get(); }
    void set_tagger(std::unique_ptr<adapters::Tagger> tagger) {
        std::scoped_lock w(writer_mutex_);
        tagger_ = std::move(tagger);
    }

    // Read-only views. Callers must not hold them across concurrent writes.
    const MemoryStore& store() const noexcept { return store_; }
    const TagDag& dag() const noexcept { return dag_; }
    const TemporalIndex& temporal() const noexcept { return temporal_; }
    const EmbeddingIndex& embeddings() const noexcept { return embeddings_; }

    std::size_t size() const {
        std::shared_lock r(state_mutex_);
        return store_.size();
    }

    /// Runs `f(*this)` under the read lock. `f` may use the view accessors only.
    template <class F>
    decltype(auto) read(F&& f) const {
        std::shared_lock r(state_mutex_);
        return f(*this);
    }

    // ---- writes ------------------------------------------------------------

    void upsert_tag(const TagId& tag, Embedding embedding) {
        std::scoped_lock w(writer_mutex_);
        std::unique_lock s(state_mutex_);
        dag_.upsert_tag(tag, std::move(embedding));
    }

    /// Creates `tag` with an embedding of its phrase if it is new.
    void ensure_tag(const TagId& tag) {
        std::scoped_lock w(writer_mutex_);
        ensure_tag_locked(tag);
    }

    TagDag::RelationResult add_relation(const TagId& parent, const TagId& child) {
        std::scoped_lock w(writer_mutex_);
        std::unique_lock s(state_mutex_);
        auto r = dag_.add_relation(parent, child);
        if (r.status == TagDag::RelationStatus::RejectedCycle) ++rejected_relations_;
        return r;
    }

    /// Stores one episode with precomputed embedding and tags. Unknown tags are
    /// created (embedding their phrase); relations go through the DAG's cycle
    /// check and rejected ones are counted, never fatal.
    IngestResult ingest(const UserId& user, std::string content, Timestamp ts, Embedding embedding,
                        const adapters::TagProposal& proposal) {
        std::scoped_lock w(writer_mutex_);
        return ingest_locked(user, std::move(content), ts, std::move(embedding), proposal);
    }

    /// Embeds and tags `content` with the configured providers, then ingests it.
    /// `tag_text`, when given, is what the tagger sees instead of the content.
    IngestResult ingest_text(const UserId& user, std::string content, Timestamp ts,
                             std::optional<std::string_view> tag_text = std::nullopt) {
        if (content.empty()) throw Error(ErrorCode::EmptyContent, "episode content is empty");
        const std::string_view to_tag = tag_text && !tag_text->empty() ? *tag_text : std::string_view(content);
        std::scoped_lock w(writer_mutex_);
        auto emb = embed_checked(content);
        adapters::TagProposal proposal;
        if (tagger_) {
            proposal = tagger_->generate_tags(to_tag);
        } else {
            adapters::EmbeddingFallbackTagger fallback(embedder_.get(), &dag_, config().fallback_similarity_min);
            proposal = fallback.generate_tags(to_tag);
        }
        return ingest_locked(user, std::move(content), ts, std::move(emb), proposal);
    }

    /// Re-inserts an episode read back from a snapshot. The id must be the next one.
    void restore(const Episode& e) {
        std::scoped_lock w(writer_mutex_);
        if (e.id != store_.next_id())
            throw Error(ErrorCode::CorruptSnapshot, "episode id " + std::to_string(e.id.value) + " out of sequence");
        for (const auto& t : e.tags)
            if (!dag_.contains(t)) ensure_tag_locked(t);
        publish(e.user, e.content, e.timestamp, e.embedding, e.tags);
    }

    /// Reorders the embedding arena to the given slot order (a permutation of all ids).
    void restore_layout(std::span<const EpisodeId> order) {
        std::scoped_lock w(writer_mutex_);
        auto arena = embeddings_.arranged(order);
        std::unique_lock s(state_mutex_);
        embeddings_.install(std::move(arena));
    }

    /// Clusters the tags and rewrites the embedding arena in cluster order when
    /// the layout is unhealthy enough, or unconditionally with `force`.
    ConsolidationReport consolidate(bool force = false) {
        std::scoped_lock w(writer_mutex_);
        // Only the writer mutates, so reading without the state lock is safe here.
        const auto clusters = cluster_tags(dag_, config().cooccur_min);
        const auto health = assess_layout(embeddings_, dag_, clusters);
        if (!force && !should_consolidate(health, config())) {
            ConsolidationReport skipped;
            skipped.performed = false;
            skipped.clusters = clusters.size();
            skipped.fragmentation_before = skipped.fragmentation_after = health.fragmentation;
            return skipped;
        }
        auto prepared = embeddings_.prepare_consolidation(dag_, clusters);
        {
            std::unique_lock s(state_mutex_);
            embeddings_.install(std::move(prepared.arena));
        }
        return std::move(prepared.report);
    }

    // ---- reads -------------------------------------------------------------

    LayoutHealth layout_health() const {
        std::shared_lock r(state_mutex_);
        return assess_layout(embeddings_, dag_, cluster_tags(dag_, config().cooccur_min));
    }

    std::vector<TagCluster> clusters() const {
        std::shared_lock r(state_mutex_);
        return cluster_tags(dag_, config().cooccur_min);
    }

    EngineStats stats() const {
        std::shared_lock r(state_mutex_);
        EngineStats s;
        s.episodes = store_.size();
        s.tags = dag_.size();
        s.edges = dag_.edge_count();
        s.avg_parents = dag_.avg_parents();
        s.avg_children = dag_.avg_children();
        const auto cl = cluster_tags(dag_, config().cooccur_min);
        const auto h = assess_layout(embeddings_, dag_, cl);
        s.fragmentation = h.fragmentation;
        s.weighted_cohesion = h.weighted_cohesion;
        s.clusters = cl.size();
        s.rejected_relations = rejected_relations_;
        s.fallback_queries = fallback_queries_.load();
        if (auto* http = dynamic_cast<const adapters::HttpTagger*>(tagger_.get())) s.tagger_fallbacks = http->fallbacks();
        for (std::size_t i = 0; i < user_names_.size(); ++i) s.users[user_names_[i]] = user_counts_[i];
        return s;
    }

    Embedding embed_query(std::string_view text) const {
        if (text.empty()) throw Error(ErrorCode::EmptyText, "query is empty");
        return embed_checked(text);
    }

    /// Embeds the query, extracts time references (unless overridden), routes and expands tags.
    QueryPlan plan(std::string_view query, const UserId& user, Timestamp reference_now,
                   const QueryOptions& opts = {}) const {
        auto emb = embed_query(query);
        auto intervals = opts.intervals ? *opts.intervals : parse_temporal(query, reference_now);
        return plan_for_embedding(std::string(query), user, std::move(emb), std::move(intervals), opts);
    }

    QueryPlan plan_for_embedding(std::string raw, const UserId& user, Embedding embedding,
                                 std::vector<TimeInterval> intervals, const QueryOptions& opts = {},
                                 StageTimings* timings = nullptr) const {
        std::shared_lock r(state_mutex_);
        return plan_locked(std::move(raw), user, std::move(embedding), std::move(intervals), opts, timings);
    }

    /// Three-tier retrieval over the plan's candidates.
    ///
    /// Candidates are the user's episodes under the expanded tags. With time
    /// intervals they are intersected with the interval hits, or are the
    /// interval hits alone when no tag matched. Without intervals and without
    /// tag matches, the user's whole episode set is scanned (counted as a fallback).
    RetrievalResult retrieve(const QueryPlan& plan, std::optional<std::size_t> top_k = std::nullopt) const {
        std::shared_lock r(state_mutex_);
        return retrieve_locked(plan, top_k.value_or(config().top_k_results), {});
    }

    /// plan + retrieve under one read lock, timing every stage.
    RetrievalResult search(std::string raw, const UserId& user, Embedding embedding,
                           std::vector<TimeInterval> intervals, std::optional<std::size_t> top_k = std::nullopt,
                           const QueryOptions& opts = {}) const {
        const auto t0 = Clock::now();
        std::shared_lock r(state_mutex_);
        StageTimings timings;
        auto plan = plan_locked(std::move(raw), user, std::move(embedding), std::move(intervals), opts, &timings);
        auto result = retrieve_locked(std::move(plan), top_k.value_or(config().top_k_results), timings);
        result.timings.total_us = micros_since(t0);
        return result;
    }

    RetrievalResult query(std::string_view text, const UserId& user, Timestamp reference_now,
                          std::optional<std::size_t> top_k = std::nullopt, const QueryOptions& opts = {}) const {
        const auto t0 = Clock::now();
        auto emb = embed_query(text);
        auto intervals = opts.intervals ? *opts.intervals : parse_temporal(text, reference_now);
        auto result = search(std::string(text), user, std::move(emb), std::move(intervals), top_k, opts);
        result.timings.total_us = micros_since(t0);
        return result;
    }

    /// Baseline: cosine against every episode of `user`.
    RetrievalResult retrieve_exhaustive(const UserId& user, Embedding embedding,
                                        std::optional<std::size_t> top_k = std::nullopt, std::string raw = {}) const {
        const auto t0 = Clock::now();
        std::shared_lock r(state_mutex_);
        RetrievalResult out;
        out.plan.raw = std::move(raw);
        out.plan.user = user;
        out.plan.embedding = std::move(embedding);
        const auto uid = user_index(user);
        if (uid && store_.size() > 0) {
            const auto k = top_k.value_or(config().top_k_results);
            const auto t1 = Clock::now();
            if (user_names_.size() == 1) {
                out.hits = embeddings_.rank_where(out.plan.embedding, [](EpisodeId) { return true; }, k,
                                                  &out.candidates_examined);
            } else {
                const auto u = *uid;
                out.hits = embeddings_.rank_where(
                    out.plan.embedding, [this, u](EpisodeId e) { return episode_user_[e.value] == u; }, k,
                    &out.candidates_examined);
            }
            out.timings.rank_us = micros_since(t1);
        }
        out.timings.total_us = micros_since(t0);
        return out;
    }

    RetrievalResult retrieve_exhaustive(std::string_view text, const UserId& user,
                                        std::optional<std::size_t> top_k = std::nullopt) const {
        return retrieve_exhaustive(user, embed_query(text), top_k, std::string(text));
    }

    std::size_t user_episode_count(const UserId& user) const {
        std::shared_lock r(state_mutex_);
        auto u = user_index(user);
        return u ? user_counts_[*u] : 0;
    }

    std::size_t fallback_queries() const noexcept { return fallback_queries_.load(); }
    std::size_t rejected_relations() const noexcept { return rejected_relations_; }

private:
    static double micros_since(Clock::time_point t) {
        return std::chrono::duration<double, std::micro>(Clock::now() - t).count();
    }

    Embedding embed_checked(std::string_view text) const {
        if (!embedder_) throw Error(ErrorCode::EmbedderFailure, "no embedder configured");
        try {
            return embedder_->embed(text);
        } catch (const Error&) {
            throw;
        } catch (const std::exception& e) {
            throw Error(ErrorCode::EmbedderFailure, e.what());
        }
    }

    void ensure_tag_locked(const TagId& tag) {
        if (dag_.contains(tag)) return;
        auto emb = embed_checked(tag.as_phrase());
        std::unique_lock s(state_mutex_);
        dag_.upsert_tag(tag, std::move(emb));
    }

    IngestResult ingest_locked(const UserId& user, std::string content, Timestamp ts, Embedding embedding,
                               const adapters::TagProposal& proposal) {
        store_.validate_embedding(embedding);
        if (ts < 0) throw Error(ErrorCode::InvalidArgument, "negative timestamp " + std::to_string(ts));
        for (const auto& t : proposal.tags) ensure_tag_locked(t);

        IngestResult res;
        {
            std::unique_lock s(state_mutex_);
            for (const auto& rel : proposal.relations) {
                if (rel.parent == rel.child || !dag_.contains(rel.parent) || !dag_.contains(rel.child)) continue;
                auto r = dag_.add_relation(rel.parent, rel.child);
                if (r.accepted()) {
                    ++res.relations_accepted;
                } else if (r.status == TagDag::RelationStatus::RejectedCycle) {
                    ++res.relations_rejected;
                    ++rejected_relations_;
                }
            }
        }
        res.tags = proposal.tags;
        std::sort(res.tags.begin(), res.tags.end());
        res.tags.erase(std::unique(res.tags.begin(), res.tags.end()), res.tags.end());
        res.id = publish(user, std::move(content), ts, std::move(embedding), res.tags);
        return res;
    }

    EpisodeId publish(const UserId& user, std::string content, Timestamp ts, Embedding embedding,
                      const std::vector<TagId>& tags) {
        std::unique_lock s(state_mutex_);
        const EpisodeId id = store_.store_episode(user, std::move(content), ts, std::move(embedding), tags);
        const auto& ep = store_.get_episode(id);
        embeddings_.add(id, ep.embedding);
        temporal_.insert(user, ts, id);
        for (const auto& t : ep.tags) dag_.attach_episode(t, id);
        auto [it, fresh] = user_ids_.try_emplace(user, static_cast<std::uint32_t>(user_names_.size()));
        if (fresh) {
            user_names_.push_back(user);
            user_counts_.push_back(0);
        }
        ++user_counts_[it->second];
        episode_user_.push_back(it->second);
        return id;
    }

    std::optional<std::uint32_t> user_index(const UserId& user) const {
        auto it = user_ids_.find(user);
        if (it == user_ids_.end()) return std::nullopt;
        return it->second;
    }

    QueryPlan plan_locked(std::string raw, const UserId& user, Embedding embedding, std::vector<TimeInterval> intervals,
                          const QueryOptions& opts, StageTimings* timings) const {
        QueryPlan p;
        p.raw = std::move(raw);
        p.user = user;
        p.embedding = std::move(embedding);
        p.intervals = TemporalIndex::merge_intervals(std::move(intervals));
        const auto t0 = Clock::now();
        p.seed_tags = route_tags(p.embedding, dag_, opts.route_k.value_or(config().route_k));
        const auto t1 = Clock::now();
        std::vector<TagId> seeds;
        seeds.reserve(p.seed_tags.size());
        for (const auto& s : p.seed_tags) seeds.push_back(s.tag);
        p.expanded_tags = dag_.expand_tags(seeds, opts.max_depth.value_or(config().max_depth),
                                           opts.expand_parents.value_or(config().expand_parents));
        if (timings) {
            timings->route_us = std::chrono::duration<double, std::micro>(t1 - t0).count();
            timings->expand_us = micros_since(t1);
        }
        return p;
    }

    RetrievalResult retrieve_locked(QueryPlan plan, std::size_t top_k, StageTimings timings) const {
        RetrievalResult out;
        out.timings = timings;
        const auto t0 = Clock::now();
        const auto uid = user_index(plan.user);
        std::vector<std::uint32_t> slots;
        if (uid) {
            const bool single_user = user_names_.size() == 1;
            auto mine = [&](EpisodeId e) { return single_user || episode_user_[e.value] == *uid; };
            if (!plan.intervals.empty()) {
                std::vector<EpisodeId> tagged = dag_.episodes_for(plan.expanded_tags);
                std::erase_if(tagged, [&](EpisodeId e) { return !mine(e); });
                auto timed = temporal_.multi_range_query(plan.user, plan.intervals);
                std::sort(timed.begin(), timed.end());
                if (tagged.empty()) {
                    slots = embeddings_.slots_for(timed);
                } else {
                    std::vector<EpisodeId> both;
                    std::set_intersection(tagged.begin(), tagged.end(), timed.begin(), timed.end(),
                                          std::back_inserter(both));
                    slots = embeddings_.slots_for(both);
                }
            } else {
                // Tag postings straight to arena slots. A slot bitmap removes
                // duplicates and yields ascending order without a sort.
                const auto& e2s = embeddings_.arena().episode_to_slot;
                std::vector<std::uint64_t> bits((embeddings_.size() + 63) / 64, 0);
                std::size_t marked = 0;
                for (const auto& t : plan.expanded_tags) {
                    auto node = dag_.index_of(t);
                    if (!node) continue;
                    for (EpisodeId e : dag_.node(*node).episodes) {
                        if (!mine(e)) continue;
                        const auto slot = e2s[e.value];
                        bits[slot >> 6] |= std::uint64_t{1} << (slot & 63);
                        ++marked;
                    }
                }
                slots.reserve(marked);
                for (std::size_t w = 0; w < bits.size(); ++w)
                    for (auto word = bits[w]; word; word &= word - 1)
                        slots.push_back(static_cast<std::uint32_t>(w * 64 + std::size_t(std::countr_zero(word))));
                if (slots.empty()) {
                    out.fell_back = true;
                    ++fallback_queries_;
                }
            }
        }
        out.timings.candidates_us = micros_since(t0);

        const auto t1 = Clock::now();
        if (out.fell_back) {
            const auto u = *uid;
            out.hits = embeddings_.rank_where(
                plan.embedding, [this, u](EpisodeId e) { return episode_user_[e.value] == u; }, top_k,
                &out.candidates_examined);
        } else if (!slots.empty()) {
            out.candidates_examined = slots.size();
            out.hits = embeddings_.rank_slots(plan.embedding, slots, top_k);
        }
        out.timings.rank_us = micros_since(t1);
        out.plan = std::move(plan);
        return out;
    }

    std::mutex writer_mutex_;
    mutable std::shared_mutex state_mutex_;

    MemoryStore store_;
    TagDag dag_;
    TemporalIndex temporal_;
    EmbeddingIndex embeddings_;
    std::shared_ptr<const adapters::Embedder> embedder_;
    std::unique_ptr<adapters::Tagger> tagger_;

    std::unordered_map<UserId, std::uint32_t> user_ids_;
    std::vector<UserId> user_names_;
    std::vector<std::size_t> user_counts_;
    std::vector<std::uint32_t> episode_user_; // indexed by EpisodeId::value

    std::size_t rejected_relations_ = 0;
    mutable std::atomic<std::size_t> fallback_queries_{0};
};

} // namespace swiftmem
