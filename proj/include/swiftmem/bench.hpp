#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "swiftmem/engine.hpp"
#include "swiftmem/temporal_parser.hpp"

namespace swiftmem::bench {

struct BenchConfig {
    std::size_t n = 10'000;
    std::size_t tags = 0; // 0: one tag per 200 episodes, at least 13
    std::size_t users = 1;
    std::size_t queries = 200;
    std::uint64_t seed = 42;
    std::size_t dim = 384;
    std::size_t top_k = 10;
    std::size_t route_k = 5;
    std::size_t max_depth = 2;
    std::size_t branching = 3;     // children per tag inside a topic family
    double parent_tag_rate = 0.3;  // share of episodes that also carry their topic's parent tag
    double episode_noise = 1.0;    // noise norm relative to the unit topic vector
    double child_noise = 0.6;
    double query_noise = 0.5;
    bool consolidation = true;     // measure a forced consolidation afterwards
};

inline std::size_t effective_tags(const BenchConfig& c) {
    return c.tags ? c.tags : std::max<std::size_t>(13, c.n / 200);
}

/// Seeded synthetic workload: tag families (a root, `branching` children,
/// `branching`^2 grandchildren) whose vectors drift from parent to child,
/// Zipf-popular topics, episodes scattered around their topic vector and
/// spread uniformly over 2023.
struct Corpus {
    std::size_t dim = 0;
    std::vector<TagId> tags;
    std::vector<Embedding> tag_vectors;
    std::vector<std::pair<std::size_t, std::size_t>> relations; // indices into tags
    std::vector<std::ptrdiff_t> parent;                           // -1 for roots

    struct Item {
        UserId user;
        Timestamp ts = 0;
        Embedding embedding;
        std::vector<std::size_t> tags; // first entry is the topic
    };
    std::vector<Item> episodes;

    struct Query {
        std::size_t target = 0; // episode index the query was derived from
        UserId user;
        Embedding embedding;
    };
    std::vector<Query> queries;
};

inline constexpr Timestamp kCorpusStart = 1'672'531'200'000; // 2023-01-01T00:00Z
inline constexpr Timestamp kCorpusSpan = 365 * kMillisPerDay;

namespace detail {

inline Embedding gaussian(std::mt19937_64& rng, std::size_t dim, double scale) {
    std::normal_distribution<double> g(0.0, scale / std::sqrt(double(dim)));
    Embedding v(dim);
    for (auto& x : v) x = static_cast<float>(g(rng));
    return v;
}

inline Embedding noisy(const Embedding& base, std::mt19937_64& rng, double scale) {
    auto v = gaussian(rng, base.size(), scale);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += base[i];
    if (!l2_normalize(v)) v = base;
    return v;
}

} // namespace detail

inline Corpus make_corpus(const BenchConfig& c) {
    Corpus corpus;
    corpus.dim = c.dim;
    std::mt19937_64 rng(c.seed);
    const std::size_t t_count = effective_tags(c);
    const std::size_t b = std::max<std::size_t>(1, c.branching);

    // families filled breadth-first so a partial last family is still a tree
    for (std::size_t fam = 0; corpus.tags.size() < t_count; ++fam) {
        const std::string root = "topic" + std::to_string(fam);
        auto add = [&](std::string name, std::ptrdiff_t parent) {
            corpus.tags.emplace_back(std::move(name));
            corpus.parent.push_back(parent);
            if (parent < 0) {
                auto v = detail::gaussian(rng, c.dim, 1.0);
                l2_normalize(v);
                corpus.tag_vectors.push_back(std::move(v));
            } else {
                corpus.tag_vectors.push_back(detail::noisy(corpus.tag_vectors[std::size_t(parent)], rng, c.child_noise));
                corpus.relations.emplace_back(std::size_t(parent), corpus.tags.size() - 1);
            }
            return std::ptrdiff_t(corpus.tags.size() - 1);
        };
        const auto r = add(root, -1);
        std::vector<std::ptrdiff_t> kids;
        for (std::size_t i = 0; i < b && corpus.tags.size() < t_count; ++i)
            kids.push_back(add(root + "_c" + std::to_string(i), r));
        for (std::size_t i = 0; i < kids.size(); ++i)
            for (std::size_t j = 0; j < b && corpus.tags.size() < t_count; ++j)
                add(root + "_c" + std::to_string(i) + "_g" + std::to_string(j), kids[i]);
    }

    // Zipf(1) popularity over a random permutation of the tags
    std::vector<std::size_t> perm(t_count);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> cdf(t_count);
    double acc = 0.0;
    for (std::size_t r = 0; r < t_count; ++r) cdf[r] = acc += 1.0 / double(r + 1);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::uniform_int_distribution<Timestamp> when(0, kCorpusSpan - 1);
    std::uniform_int_distribution<std::size_t> pick_user(0, std::max<std::size_t>(1, c.users) - 1);

    corpus.episodes.reserve(c.n);
    for (std::size_t i = 0; i < c.n; ++i) {
        const double x = u01(rng) * acc;
        const auto rank = std::size_t(std::lower_bound(cdf.begin(), cdf.end(), x) - cdf.begin());
        const std::size_t topic = perm[std::min(rank, t_count - 1)];
        Corpus::Item item;
        item.user = "user" + std::to_string(pick_user(rng));
        item.ts = kCorpusStart + when(rng);
        item.embedding = detail::noisy(corpus.tag_vectors[topic], rng, c.episode_noise);
        item.tags.push_back(topic);
        if (corpus.parent[topic] >= 0 && u01(rng) < c.parent_tag_rate) item.tags.push_back(std::size_t(corpus.parent[topic]));
        corpus.episodes.push_back(std::move(item));
    }

    // a query targets a topic drawn uniformly among populated topics, then one of its episodes
    std::vector<std::vector<std::size_t>> by_topic(t_count);
    for (std::size_t i = 0; i < corpus.episodes.size(); ++i) by_topic[corpus.episodes[i].tags.front()].push_back(i);
    std::erase_if(by_topic, [](const auto& v) { return v.empty(); });
    if (!by_topic.empty()) {
        std::uniform_int_distribution<std::size_t> pick_topic(0, by_topic.size() - 1);
        for (std::size_t q = 0; q < c.queries; ++q) {
            const auto& members = by_topic[pick_topic(rng)];
            std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
            Corpus::Query query;
            query.target = members[pick(rng)];
            query.user = corpus.episodes[query.target].user;
            query.embedding = detail::noisy(corpus.episodes[query.target].embedding, rng, c.query_noise);
            corpus.queries.push_back(std::move(query));
        }
    }
    return corpus;
}

inline std::unique_ptr<MemoryEngine> load_corpus(const Corpus& corpus, const BenchConfig& c) {
    StoreConfig cfg;
    cfg.dim = corpus.dim;
    cfg.route_k = c.route_k;
    cfg.max_depth = c.max_depth;
    cfg.top_k_results = c.top_k;
    auto engine = std::make_unique<MemoryEngine>(cfg);
    for (std::size_t i = 0; i < corpus.tags.size(); ++i) engine->upsert_tag(corpus.tags[i], corpus.tag_vectors[i]);
    for (const auto& [p, ch] : corpus.relations) engine->add_relation(corpus.tags[p], corpus.tags[ch]);
    for (std::size_t i = 0; i < corpus.episodes.size(); ++i) {
        const auto& e = corpus.episodes[i];
        adapters::TagProposal proposal;
        for (auto t : e.tags) proposal.tags.push_back(corpus.tags[t]);
        engine->ingest(e.user, "synthetic episode " + std::to_string(i), e.ts, e.embedding, proposal);
    }
    return engine;
}

struct LatencyStats {
    double mean_us = 0.0;
    double p50_us = 0.0;
    double p95_us = 0.0;
};

/// Nearest-rank percentile.
inline double percentile(std::vector<double> v, double p) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const auto rank = std::size_t(std::ceil(p / 100.0 * double(v.size())));
    return v[std::clamp<std::size_t>(rank, 1, v.size()) - 1];
}

inline LatencyStats latency_stats(const std::vector<double>& v) {
    LatencyStats s;
    if (v.empty()) return s;
    double sum = 0.0;
    for (double x : v) sum += x;
    s.mean_us = sum / double(v.size());
    s.p50_us = percentile(v, 50);
    s.p95_us = percentile(v, 95);
    return s;
}

struct CountStats {
    double mean = 0.0;
    double p50 = 0.0;
    std::size_t min = 0;
    std::size_t max = 0;
};

inline CountStats count_stats(const std::vector<std::size_t>& v) {
    CountStats s;
    if (v.empty()) return s;
    std::vector<double> d(v.begin(), v.end());
    double sum = 0.0;
    for (double x : d) sum += x;
    s.mean = sum / double(d.size());
    s.p50 = percentile(d, 50);
    s.min = *std::min_element(v.begin(), v.end());
    s.max = *std::max_element(v.begin(), v.end());
    return s;
}

/// |a ∩ b| / |b| over episode ids (1 when b is empty).
inline double overlap(const std::vector<ScoredEpisode>& a, const std::vector<ScoredEpisode>& b) {
    if (b.empty()) return 1.0;
    std::size_t hit = 0;
    for (const auto& x : b)
        if (std::any_of(a.begin(), a.end(), [&](const ScoredEpisode& y) { return y.id == x.id; })) ++hit;
    return double(hit) / double(b.size());
}

inline bool contains_id(const std::vector<ScoredEpisode>& hits, EpisodeId id) {
    return std::any_of(hits.begin(), hits.end(), [&](const ScoredEpisode& h) { return h.id == id; });
}

struct ConsolidationBlock {
    bool performed = false;
    std::size_t moved = 0;
    std::size_t clusters = 0;
    double fragmentation_before = 0.0;
    double fragmentation_after = 0.0;
    double pre_mean_us = 0.0;
    double post_mean_us = 0.0;
    bool hits_identical = true;
};

struct BenchReport {
    BenchConfig config;
    std::size_t n = 0;
    std::size_t tags = 0;
    std::size_t edges = 0;
    std::size_t queries = 0;
    LatencyStats indexed;
    LatencyStats exhaustive;
    CountStats candidates;
    double candidate_fraction = 0.0; // mean candidates / N
    double speedup = 0.0;            // exhaustive mean / indexed mean
    double recall_vs_exhaustive = 0.0;
    double evidence_recall_indexed = 0.0;
    double evidence_recall_exhaustive = 0.0;
    std::size_t fallbacks = 0;
    std::vector<std::size_t> candidates_per_query;
    std::vector<std::vector<ScoredEpisode>> indexed_hits;
    ConsolidationBlock consolidation;
};

/// One pass of the query set. Each indexed query is followed by its exhaustive
/// counterpart so both see the same cache conditions.
struct QueryPass {
    std::vector<double> indexed_us;
    std::vector<double> exhaustive_us;
    std::vector<std::size_t> candidates;
    std::vector<std::vector<ScoredEpisode>> indexed_hits;
    std::vector<std::vector<ScoredEpisode>> exhaustive_hits;
    std::size_t fallbacks = 0;
};

using IntervalFn = std::function<std::vector<TimeInterval>(std::size_t query_index)>;

inline QueryPass run_queries(const MemoryEngine& engine, const Corpus& corpus, std::size_t top_k, bool exhaustive,
                             const IntervalFn& intervals = {}) {
    using Clock = std::chrono::steady_clock;
    QueryPass pass;
    for (std::size_t qi = 0; qi < corpus.queries.size(); ++qi) {
        const auto& q = corpus.queries[qi];
        auto ivs = intervals ? intervals(qi) : std::vector<TimeInterval>{};
        const auto t0 = Clock::now();
        auto res = engine.search({}, q.user, q.embedding, std::move(ivs), top_k);
        const auto t1 = Clock::now();
        pass.indexed_us.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
        pass.candidates.push_back(res.candidates_examined);
        if (res.fell_back) ++pass.fallbacks;
        pass.indexed_hits.push_back(std::move(res.hits));
        if (exhaustive) {
            const auto t2 = Clock::now();
            auto ex = engine.retrieve_exhaustive(q.user, q.embedding, top_k);
            const auto t3 = Clock::now();
            pass.exhaustive_us.push_back(std::chrono::duration<double, std::micro>(t3 - t2).count());
            pass.exhaustive_hits.push_back(std::move(ex.hits));
        }
    }
    return pass;
}

inline void warm_up(const MemoryEngine& engine, const Corpus& corpus, std::size_t top_k) {
    const std::size_t n = std::min<std::size_t>(corpus.queries.size(), 10);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& q = corpus.queries[i];
        (void)engine.search({}, q.user, q.embedding, {}, top_k);
        (void)engine.retrieve_exhaustive(q.user, q.embedding, top_k);
    }
}

inline BenchReport run_bench(const Corpus& corpus, MemoryEngine& engine, const BenchConfig& c) {
    BenchReport r;
    r.config = c;
    r.n = corpus.episodes.size();
    r.tags = engine.dag().size();
    r.edges = engine.dag().edge_count();
    r.queries = corpus.queries.size();
    if (corpus.queries.empty()) return r;

    warm_up(engine, corpus, c.top_k);
    auto pass = run_queries(engine, corpus, c.top_k, true);
    r.indexed = latency_stats(pass.indexed_us);
    r.exhaustive = latency_stats(pass.exhaustive_us);
    r.candidates = count_stats(pass.candidates);
    r.candidate_fraction = r.n ? r.candidates.mean / double(r.n) : 0.0;
    r.speedup = r.indexed.mean_us > 0 ? r.exhaustive.mean_us / r.indexed.mean_us : 0.0;
    r.fallbacks = pass.fallbacks;
    double rec = 0.0, ev_i = 0.0, ev_e = 0.0;
    for (std::size_t i = 0; i < corpus.queries.size(); ++i) {
        const EpisodeId target{corpus.queries[i].target};
        rec += overlap(pass.indexed_hits[i], pass.exhaustive_hits[i]);
        ev_i += contains_id(pass.indexed_hits[i], target) ? 1.0 : 0.0;
        ev_e += contains_id(pass.exhaustive_hits[i], target) ? 1.0 : 0.0;
    }
    const double nq = double(corpus.queries.size());
    r.recall_vs_exhaustive = rec / nq;
    r.evidence_recall_indexed = ev_i / nq;
    r.evidence_recall_exhaustive = ev_e / nq;
    r.candidates_per_query = std::move(pass.candidates);
    r.indexed_hits = std::move(pass.indexed_hits);

    if (c.consolidation) {
        auto& block = r.consolidation;
        const auto pre = run_queries(engine, corpus, c.top_k, true);
        const auto report = engine.consolidate(true);
        const auto post = run_queries(engine, corpus, c.top_k, true);
        block.performed = report.performed;
        block.moved = report.moved;
        block.clusters = report.clusters;
        block.fragmentation_before = report.fragmentation_before;
        block.fragmentation_after = report.fragmentation_after;
        block.pre_mean_us = latency_stats(pre.indexed_us).mean_us;
        block.post_mean_us = latency_stats(post.indexed_us).mean_us;
        for (std::size_t i = 0; i < pre.indexed_hits.size(); ++i) {
            const auto& a = pre.indexed_hits[i];
            const auto& b = post.indexed_hits[i];
            if (a.size() != b.size()) block.hits_identical = false;
            for (std::size_t j = 0; block.hits_identical && j < a.size(); ++j)
                if (a[j].id != b[j].id || a[j].score != b[j].score) block.hits_identical = false;
        }
    }
    return r;
}

inline BenchReport run_bench(const BenchConfig& c) {
    const auto corpus = make_corpus(c);
    auto engine = load_corpus(corpus, c);
    return run_bench(corpus, *engine, c);
}

// ---------------------------------------------------------------------------
// Temporal hint ablation

struct AblationRow {
    double ratio = 0.0;
    std::size_t hinted = 0;
    LatencyStats latency;
    CountStats candidates;
    double recall_vs_exhaustive = 0.0;
    double evidence_recall = 0.0;
};

struct AblationReport {
    BenchConfig config;
    std::size_t n = 0;
    std::size_t queries = 0;
    std::vector<AblationRow> rows;
};

/// The week around a timestamp: from three days before its day to four days after.
inline TimeInterval week_around(Timestamp ts) {
    const Timestamp day = calendar::floor_day(ts);
    return {day - 3 * kMillisPerDay, day + 4 * kMillisPerDay};
}

/// For every ratio, queries whose per-query uniform draw falls below it carry
/// two intervals: the week containing the answer and a random distractor
/// week. Draws are fixed per query, so hinted sets grow with the ratio.
inline AblationReport ablate_temporal(const Corpus& corpus, MemoryEngine& engine, const BenchConfig& c,
                                      const std::vector<double>& ratios) {
    AblationReport rep;
    rep.config = c;
    rep.n = corpus.episodes.size();
    rep.queries = corpus.queries.size();
    std::mt19937_64 rng(c.seed ^ 0xab1a7e5ULL);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::uniform_int_distribution<Timestamp> when(0, kCorpusSpan - 1);
    std::vector<double> draw;
    std::vector<TimeInterval> target_week, distractor_week;
    for (const auto& q : corpus.queries) {
        draw.push_back(u01(rng));
        target_week.push_back(week_around(corpus.episodes[q.target].ts));
        distractor_week.push_back(week_around(kCorpusStart + when(rng)));
    }

    std::vector<std::vector<ScoredEpisode>> exhaustive_hits;
    for (const auto& q : corpus.queries) exhaustive_hits.push_back(engine.retrieve_exhaustive(q.user, q.embedding, c.top_k).hits);
    if (!corpus.queries.empty()) warm_up(engine, corpus, c.top_k);

    for (double ratio : ratios) {
        AblationRow row;
        row.ratio = ratio;
        auto intervals = [&](std::size_t qi) -> std::vector<TimeInterval> {
            if (!(draw[qi] < ratio)) return {};
            return {target_week[qi], distractor_week[qi]};
        };
        for (double d : draw) row.hinted += d < ratio ? 1 : 0;
        auto pass = run_queries(engine, corpus, c.top_k, false, intervals);
        row.latency = latency_stats(pass.indexed_us);
        row.candidates = count_stats(pass.candidates);
        double rec = 0.0, ev = 0.0;
        for (std::size_t i = 0; i < corpus.queries.size(); ++i) {
            rec += overlap(pass.indexed_hits[i], exhaustive_hits[i]);
            ev += contains_id(pass.indexed_hits[i], EpisodeId{corpus.queries[i].target}) ? 1.0 : 0.0;
        }
        const double nq = std::max<double>(1.0, double(corpus.queries.size()));
        row.recall_vs_exhaustive = rec / nq;
        row.evidence_recall = ev / nq;
        rep.rows.push_back(row);
    }
    return rep;
}

inline AblationReport ablate_temporal(const BenchConfig& c, const std::vector<double>& ratios) {
    const auto corpus = make_corpus(c);
    auto engine = load_corpus(corpus, c);
    return ablate_temporal(corpus, *engine, c, ratios);
}

} // namespace swiftmem::bench
