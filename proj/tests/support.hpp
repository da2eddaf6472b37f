#pragma once

// Reference implementations used as test oracles. They are written
// independently of the library: plain loops, full sorts, linear scans.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "swiftmem/swiftmem.hpp"

namespace oracle {

using swiftmem::Embedding;
using swiftmem::EpisodeId;
using swiftmem::Timestamp;

// Same summation order the library documents: lane = index mod 4, lanes
// combined pairwise. Needed so scores can be compared to 1e-9 or better.
inline double dot(const Embedding& a, const Embedding& b) {
    double lane[4] = {0, 0, 0, 0};
    for (std::size_t i = 0; i < a.size(); ++i) lane[i % 4] += double(a[i]) * double(b[i]);
    return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

inline double cosine(const Embedding& a, const Embedding& b) {
    return dot(a, b) / (std::sqrt(dot(a, a)) * std::sqrt(dot(b, b)));
}

struct Scored {
    std::uint64_t id;
    double score;
};

inline void sort_scored(std::vector<Scored>& v) {
    std::sort(v.begin(), v.end(), [](const Scored& a, const Scored& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    });
}

/// Tags within `depth` child steps of any seed (seeds included).
inline std::set<std::string> reachable(const std::vector<std::string>& seeds,
                                       const std::vector<std::pair<std::string, std::string>>& edges,
                                       std::size_t depth) {
    std::map<std::string, std::size_t> dist;
    for (const auto& s : seeds) dist[s] = 0;
    for (std::size_t round = 0; round < depth; ++round) {
        auto next = dist;
        for (const auto& [p, c] : edges) {
            auto it = dist.find(p);
            if (it == dist.end() || it->second != round) continue;
            if (!next.count(c)) next[c] = round + 1;
        }
        dist = std::move(next);
    }
    std::set<std::string> out;
    for (const auto& [t, _] : dist) out.insert(t);
    return out;
}

/// True when `to` is reachable from `from` following the edges.
inline bool path_exists(const std::vector<std::pair<std::string, std::string>>& edges, const std::string& from,
                        const std::string& to) {
    std::set<std::string> seen{from};
    std::vector<std::string> todo{from};
    while (!todo.empty()) {
        auto n = todo.back();
        todo.pop_back();
        if (n == to) return true;
        for (const auto& [p, c] : edges)
            if (p == n && seen.insert(c).second) todo.push_back(c);
    }
    return false;
}

/// Kahn's algorithm; true iff the graph has a topological order.
inline bool acyclic(std::size_t n, const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges) {
    std::vector<std::size_t> indeg(n, 0);
    std::vector<std::vector<std::uint32_t>> out(n);
    for (auto [p, c] : edges) {
        out[p].push_back(c);
        ++indeg[c];
    }
    std::vector<std::uint32_t> ready;
    for (std::uint32_t i = 0; i < n; ++i)
        if (indeg[i] == 0) ready.push_back(i);
    std::size_t done = 0;
    while (!ready.empty()) {
        auto v = ready.back();
        ready.pop_back();
        ++done;
        for (auto c : out[v])
            if (--indeg[c] == 0) ready.push_back(c);
    }
    return done == n;
}

/// Every parent list mirrors a child list and vice versa, with no repeats.
inline bool reciprocal(const swiftmem::TagDag& dag) {
    std::multiset<std::pair<std::uint32_t, std::uint32_t>> down, up;
    for (std::uint32_t i = 0; i < dag.size(); ++i) {
        for (auto c : dag.node(i).children) down.insert({i, c});
        for (auto p : dag.node(i).parents) up.insert({p, i});
    }
    if (down != up) return false;
    std::set<std::pair<std::uint32_t, std::uint32_t>> unique(down.begin(), down.end());
    return unique.size() == down.size() && down.size() == dag.edge_count();
}

// A self-contained description of a store, built without the library so the
// retrieval oracle never reads engine state.
struct Doc {
    std::string user;
    std::string text;
    Timestamp ts = 0;
    std::vector<std::string> tags;
    Embedding emb;
};

struct World {
    std::size_t dim = 0;
    std::vector<Doc> docs;                                          // id = index
    std::vector<std::pair<std::string, Embedding>> tags;            // creation order
    std::vector<std::pair<std::string, std::string>> edges;         // accepted, in order
};

/// Brute-force pipeline: linear time filter, linear tag-membership filter,
/// exact cosine, full sort, truncate.
inline std::vector<Scored> retrieve(const World& w, const std::string& user, const Embedding& q,
                                    const std::vector<swiftmem::TimeInterval>& intervals, std::size_t k,
                                    std::size_t depth, std::size_t top_k, std::vector<std::string>* seeds_out = nullptr) {
    std::vector<std::pair<double, std::string>> routed;
    for (const auto& [t, e] : w.tags) {
        double n = std::sqrt(dot(e, e));
        if (n == 0.0) continue;
        routed.emplace_back(dot(q, e) / (std::sqrt(dot(q, q)) * n), t);
    }
    std::sort(routed.begin(), routed.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    std::vector<std::string> seeds;
    for (std::size_t i = 0; i < routed.size() && i < k; ++i) seeds.push_back(routed[i].second);
    if (seeds_out) *seeds_out = seeds;
    const auto expanded = reachable(seeds, w.edges, depth);

    std::vector<std::uint64_t> tagged, timed, mine;
    for (std::uint64_t id = 0; id < w.docs.size(); ++id) {
        const auto& d = w.docs[id];
        if (d.user != user) continue;
        mine.push_back(id);
        for (const auto& t : d.tags)
            if (expanded.count(t)) {
                tagged.push_back(id);
                break;
            }
        for (const auto& iv : intervals)
            if (iv.start <= d.ts && d.ts < iv.end) {
                timed.push_back(id);
                break;
            }
    }
    std::vector<std::uint64_t> cand;
    if (!intervals.empty()) {
        if (tagged.empty()) cand = timed;
        else
            for (auto id : tagged)
                if (std::find(timed.begin(), timed.end(), id) != timed.end()) cand.push_back(id);
    } else {
        cand = tagged.empty() ? mine : tagged;
    }
    std::vector<Scored> all;
    for (auto id : cand) all.push_back({id, cosine(q, w.docs[id].emb)});
    sort_scored(all);
    if (all.size() > top_k) all.resize(top_k);
    return all;
}

/// Random small store with an offline embedder: shared vocabulary so tags
/// and texts overlap, repeated texts so score ties occur.
inline World random_world(std::mt19937_64& rng, std::size_t dim) {
    static const std::vector<std::string> vocab = {
        "dog",    "cat",   "park",   "walk",  "paris", "train", "coffee", "python", "code",  "guitar",
        "music",  "beach", "camp",   "tent",  "hike",  "bread", "bake",   "garden", "rose",  "chess",
        "movie",  "book",  "novel",  "tax",   "bank",  "loan",  "doctor", "flu",    "yoga",  "swim"};
    std::uniform_int_distribution<std::size_t> word(0, vocab.size() - 1);
    World w;
    w.dim = dim;
    swiftmem::adapters::OfflineEmbedder emb(dim);

    const std::size_t n_tags = std::uniform_int_distribution<std::size_t>(1, 15)(rng);
    std::set<std::string> names;
    while (names.size() < n_tags) {
        std::string t = vocab[word(rng)];
        if (rng() % 3 == 0) t += "_" + vocab[word(rng)];
        names.insert(t);
    }
    std::vector<std::string> tag_list(names.begin(), names.end());
    std::shuffle(tag_list.begin(), tag_list.end(), rng);
    for (const auto& t : tag_list) {
        std::string phrase = t;
        std::replace(phrase.begin(), phrase.end(), '_', ' ');
        w.tags.emplace_back(t, emb.embed(phrase));
    }
    const std::size_t n_rel = std::uniform_int_distribution<std::size_t>(0, 2 * n_tags)(rng);
    std::uniform_int_distribution<std::size_t> pick_tag(0, n_tags - 1);
    for (std::size_t i = 0; i < n_rel; ++i) {
        const auto& p = tag_list[pick_tag(rng)];
        const auto& c = tag_list[pick_tag(rng)];
        if (p == c) continue;
        if (std::find(w.edges.begin(), w.edges.end(), std::make_pair(p, c)) != w.edges.end()) continue;
        if (path_exists(w.edges, c, p)) continue;
        w.edges.emplace_back(p, c);
    }

    const std::size_t n_docs = std::uniform_int_distribution<std::size_t>(0, 120)(rng);
    const Timestamp base = 1'640'995'200'000; // 2022-01-01
    std::uniform_int_distribution<Timestamp> when(0, 60 * swiftmem::kMillisPerDay);
    for (std::size_t i = 0; i < n_docs; ++i) {
        Doc d;
        d.user = rng() % 4 == 0 ? "bob" : "alice";
        if (i > 0 && rng() % 8 == 0) {
            d.text = w.docs[rng() % i].text; // exact repeat: equal scores
        } else {
            const std::size_t words = 1 + rng() % 6;
            for (std::size_t j = 0; j < words; ++j) d.text += (j ? " " : "") + vocab[word(rng)];
        }
        d.ts = base + when(rng);
        const std::size_t n = rng() % 3;
        for (std::size_t j = 0; j < n; ++j) {
            const auto& t = tag_list[pick_tag(rng)];
            if (std::find(d.tags.begin(), d.tags.end(), t) == d.tags.end()) d.tags.push_back(t);
        }
        d.emb = emb.embed(d.text);
        w.docs.push_back(std::move(d));
    }
    return w;
}

/// Loads a World into an engine through the public write path.
inline std::unique_ptr<swiftmem::MemoryEngine> load(const World& w) {
    swiftmem::StoreConfig cfg;
    cfg.dim = w.dim;
    auto engine = std::make_unique<swiftmem::MemoryEngine>(
        cfg, std::make_shared<swiftmem::adapters::OfflineEmbedder>(w.dim));
    for (const auto& [t, e] : w.tags) engine->upsert_tag(swiftmem::TagId(t), e);
    for (const auto& [p, c] : w.edges) engine->add_relation(swiftmem::TagId(p), swiftmem::TagId(c));
    for (const auto& d : w.docs) {
        swiftmem::adapters::TagProposal prop;
        for (const auto& t : d.tags) prop.tags.emplace_back(t);
        engine->ingest(d.user, d.text, d.ts, d.emb, prop);
    }
    return engine;
}

inline std::vector<swiftmem::TimeInterval> random_intervals(std::mt19937_64& rng) {
    std::vector<swiftmem::TimeInterval> out;
    const Timestamp base = 1'640'995'200'000;
    const std::size_t n = rng() % 4; // 0 means "no time reference"
    std::uniform_int_distribution<Timestamp> at(-5 * swiftmem::kMillisPerDay, 65 * swiftmem::kMillisPerDay);
    std::uniform_int_distribution<Timestamp> len(1, 20 * swiftmem::kMillisPerDay);
    for (std::size_t i = 0; i < n; ++i) {
        const Timestamp s = base + at(rng);
        out.emplace_back(s, s + len(rng));
    }
    return out;
}

inline std::filesystem::path temp_path(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "swiftmem-tests";
    std::filesystem::create_directories(dir);
    return dir / (name + "-" + std::to_string(std::random_device{}()));
}

} // namespace oracle
