#include <gtest/gtest.h>

#include "support.hpp"

using namespace swiftmem;

namespace {

Embedding random_vec(std::mt19937_64& rng, std::size_t dim) {
    std::normal_distribution<float> g;
    Embedding v(dim);
    for (auto& x : v) x = g(rng);
    return v;
}

std::vector<oracle::Scored> plain(const std::vector<ScoredEpisode>& v) {
    std::vector<oracle::Scored> out;
    for (const auto& s : v) out.push_back({s.id.value, s.score});
    return out;
}

void expect_same(const std::vector<ScoredEpisode>& got, const std::vector<oracle::Scored>& want) {
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
        EXPECT_EQ(got[i].id.value, want[i].id) << "rank " << i;
        EXPECT_NEAR(got[i].score, want[i].score, 1e-12) << "rank " << i;
    }
}

} // namespace

TEST(EmbeddingIndex, SlotsAreSequential) {
    EmbeddingIndex idx(4);
    EXPECT_EQ(idx.add(EpisodeId{0}, Embedding{1, 0, 0, 0}), 0u);
    for (std::uint64_t i = 1; i < 100; ++i) EXPECT_EQ(idx.add(EpisodeId{i}, Embedding{1, 2, 3, float(i)}), i);
    EXPECT_EQ(idx.size(), 100u);
    try {
        idx.add(EpisodeId{5}, Embedding{1, 1, 1, 1});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DuplicateEpisode);
    }
    EXPECT_THROW(idx.add(EpisodeId{100}, Embedding{1, 1}), Error);
}

TEST(EmbeddingIndex, RankExamples) {
    std::mt19937_64 rng(5);
    EmbeddingIndex idx(16);
    std::vector<Embedding> rows;
    for (std::uint64_t i = 0; i < 50; ++i) {
        rows.push_back(random_vec(rng, 16));
        idx.add(EpisodeId{i}, rows.back());
    }
    EXPECT_TRUE(idx.rank(rows[0], {}, 10).empty());
    const std::vector<EpisodeId> all = [] {
        std::vector<EpisodeId> v;
        for (std::uint64_t i = 0; i < 50; ++i) v.emplace_back(i);
        return v;
    }();
    const auto hits = idx.rank(rows[17], all, 5);
    ASSERT_FALSE(hits.empty());
    EXPECT_EQ(hits[0].id, EpisodeId{17});
    EXPECT_NEAR(hits[0].score, 1.0, 1e-12);
    EXPECT_EQ(idx.rank_all(rows[3], 7), idx.rank(rows[3], all, 7));
    EmbeddingIndex empty(16);
    EXPECT_TRUE(empty.rank_all(rows[0], 10).empty());
}

TEST(EmbeddingIndex, RankEqualsFullSortOracle) {
    std::mt19937_64 rng(6);
    const std::size_t dim = 32;
    EmbeddingIndex idx(dim);
    std::vector<Embedding> rows;
    for (std::uint64_t i = 0; i < 3000; ++i) {
        // every fifth row repeats an earlier one so ties are exercised
        rows.push_back(i % 5 == 4 ? rows[rng() % i] : random_vec(rng, dim));
        idx.add(EpisodeId{i}, rows.back());
    }
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<EpisodeId> cand;
        for (int i = 0; i < 1000; ++i) cand.emplace_back(rng() % rows.size());
        const auto q = trial % 3 == 0 ? rows[rng() % rows.size()] : random_vec(rng, dim);
        std::set<std::uint64_t> uniq;
        for (auto c : cand) uniq.insert(c.value);
        std::vector<oracle::Scored> want;
        for (auto id : uniq) want.push_back({id, oracle::cosine(q, rows[id])});
        oracle::sort_scored(want);
        want.resize(std::min<std::size_t>(10, want.size()));
        expect_same(idx.rank(q, cand, 10), want);
    }
}

TEST(EmbeddingIndex, QueryValidation) {
    EmbeddingIndex idx(3);
    idx.add(EpisodeId{0}, Embedding{1, 0, 0});
    const std::vector<EpisodeId> c{EpisodeId{0}};
    EXPECT_THROW(idx.rank(Embedding{1, 0}, c, 1), Error);
    EXPECT_THROW(idx.rank(Embedding{0, 0, 0}, c, 1), Error);
    const std::vector<EpisodeId> missing{EpisodeId{9}};
    EXPECT_THROW(idx.rank(Embedding{1, 0, 0}, missing, 1), Error);
}

TEST(Clustering, Examples) {
    TagDag empty(2);
    EXPECT_TRUE(cluster_tags(empty).empty());

    TagDag one(2);
    one.upsert_tag(TagId("solo"), {1, 0});
    const auto c1 = cluster_tags(one);
    ASSERT_EQ(c1.size(), 1u);
    EXPECT_DOUBLE_EQ(c1[0].cohesion, 1.0);

    TagDag three(2);
    for (auto t : {"a", "b", "c"}) three.upsert_tag(TagId(t), {1, 0});
    three.add_relation(TagId("a"), TagId("b"));
    three.add_relation(TagId("a"), TagId("c"));
    const auto c3 = cluster_tags(three);
    ASSERT_EQ(c3.size(), 1u);
    EXPECT_NEAR(c3[0].cohesion, 2.0 / 3.0, 1e-12);
    EXPECT_EQ(c3[0].members.size(), 3u);
}

TEST(Clustering, CooccurrenceEdges) {
    TagDag g(2);
    for (auto t : {"a", "b"}) g.upsert_tag(TagId(t), {1, 0});
    for (std::uint64_t i = 0; i < 3; ++i) {
        g.attach_episode(TagId("a"), EpisodeId{i});
        g.attach_episode(TagId("b"), EpisodeId{i});
    }
    EXPECT_EQ(cluster_tags(g, 0).size(), 2u);
    EXPECT_EQ(cluster_tags(g, 3).size(), 1u);
    EXPECT_EQ(cluster_tags(g, 4).size(), 2u);
}

TEST(Layout, FragmentationRunLength) {
    TagDag g(2);
    g.upsert_tag(TagId("a"), {1, 0});
    EmbeddingIndex idx(2);
    for (std::uint64_t i = 0; i < 6; ++i) idx.add(EpisodeId{i}, Embedding{1, float(i)});
    g.attach_episode(TagId("a"), EpisodeId{0});
    g.attach_episode(TagId("a"), EpisodeId{5});
    EXPECT_DOUBLE_EQ(fragmentation(idx, g), 0.5);

    auto clusters = cluster_tags(g);
    idx.consolidate(g, clusters);
    EXPECT_DOUBLE_EQ(fragmentation(idx, g), 0.0);
}

TEST(Layout, ScoreAndThresholds) {
    TagDag g(2);
    for (auto t : {"x", "y"}) g.upsert_tag(TagId(t), {1, 0});
    EmbeddingIndex idx(2);
    idx.add(EpisodeId{0}, Embedding{1, 0});
    idx.add(EpisodeId{1}, Embedding{0, 1});
    g.attach_episode(TagId("x"), EpisodeId{0});
    g.attach_episode(TagId("y"), EpisodeId{1});
    const auto h = assess_layout(idx, g, cluster_tags(g));
    EXPECT_DOUBLE_EQ(h.weighted_cohesion, 1.0);
    EXPECT_DOUBLE_EQ(h.fragmentation, 0.0);
    EXPECT_DOUBLE_EQ(h.score, 0.5);

    StoreConfig cfg;
    EXPECT_FALSE(should_consolidate({0.0, 1.0, 0.5}, cfg));
    EXPECT_TRUE(should_consolidate({0.5, 0.6, 0.55}, cfg));
    EXPECT_TRUE(should_consolidate({cfg.consolidation_fragmentation_min, cfg.consolidation_cohesion_min, 0}, cfg));
    EXPECT_FALSE(should_consolidate({0.5, 0.29, 0}, cfg));
}

TEST(Layout, ConsolidationPreservesRankingAndIsIdempotent) {
    std::mt19937_64 rng(8);
    const std::size_t dim = 16;
    TagDag g(dim);
    EmbeddingIndex idx(dim);
    for (int t = 0; t < 12; ++t) g.upsert_tag(TagId("t" + std::to_string(t)), random_vec(rng, dim));
    for (int e = 0; e < 8; ++e) {
        const auto p = rng() % 12, c = rng() % 12;
        if (p != c) g.add_relation(g.node(std::uint32_t(p)).tag, g.node(std::uint32_t(c)).tag);
    }
    std::vector<EpisodeId> all;
    for (std::uint64_t i = 0; i < 400; ++i) {
        idx.add(EpisodeId{i}, random_vec(rng, dim));
        all.emplace_back(i);
        if (rng() % 10) g.attach_episode(g.node(std::uint32_t(rng() % 12)).tag, EpisodeId{i});
    }
    std::vector<Embedding> queries;
    std::vector<std::vector<ScoredEpisode>> before;
    for (int q = 0; q < 100; ++q) {
        queries.push_back(random_vec(rng, dim));
        before.push_back(idx.rank(queries.back(), all, 10));
    }
    const auto clusters = cluster_tags(g);
    const auto r1 = idx.consolidate(g, clusters);
    EXPECT_LE(r1.fragmentation_after, r1.fragmentation_before);
    EXPECT_DOUBLE_EQ(r1.fragmentation_after, fragmentation(idx, g));
    for (int q = 0; q < 100; ++q) EXPECT_EQ(idx.rank(queries[q], all, 10), before[q]);
    const auto r2 = idx.consolidate(g, clusters);
    EXPECT_EQ(r2.moved, 0u);

    // every tag's owned episodes occupy [o_start, o_end)
    const auto owned = owned_episodes(g);
    for (const auto& e : r1.layout) {
        const auto& mine = owned[*g.index_of(e.tag)];
        EXPECT_EQ(e.count, mine.size());
        for (auto id : mine) {
            const auto s = *idx.slot_of(id);
            EXPECT_TRUE(s >= e.o_start && s < e.o_end);
        }
    }
}

TEST(Layout, ArrangedRejectsNonPermutation) {
    EmbeddingIndex idx(2);
    idx.add(EpisodeId{0}, Embedding{1, 0});
    idx.add(EpisodeId{1}, Embedding{0, 1});
    const std::vector<EpisodeId> dup{EpisodeId{0}, EpisodeId{0}};
    EXPECT_THROW(idx.arranged(dup), Error);
    const std::vector<EpisodeId> swap{EpisodeId{1}, EpisodeId{0}};
    idx.install(idx.arranged(swap));
    EXPECT_EQ(idx.slot_of(EpisodeId{1}), 0u);
    EXPECT_EQ(idx.embedding(EpisodeId{1})[1], 1.0f);
}

TEST(TopK, KeepsBestUnderTieBreak) {
    TopK k(3);
    for (std::uint64_t i = 10; i > 0; --i) k.push({EpisodeId{i}, i % 2 ? 0.5 : 0.25});
    const auto out = std::move(k).take();
    ASSERT_EQ(out.size(), 3u);
    EXPECT_EQ(plain(out)[0].id, 1u);
    EXPECT_EQ(plain(out)[1].id, 3u);
    EXPECT_EQ(plain(out)[2].id, 5u);
}
