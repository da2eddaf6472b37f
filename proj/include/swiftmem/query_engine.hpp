#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "swiftmem/tag_dag.hpp"
#include "swiftmem/types.hpp"
#include "swiftmem/vector_math.hpp"

namespace swiftmem {

struct RoutedTag {
    TagId tag;
    double similarity = 0.0;

    friend bool operator==(const RoutedTag&, const RoutedTag&) = default;
};

/// Parsed query: what to search (tags), when (intervals) and against what (embedding).
struct QueryPlan {
    std::string raw;
    UserId user;
    Embedding embedding;
    std::vector<TimeInterval> intervals;  // merged; empty when the query has no time reference
    std::vector<RoutedTag> seed_tags;     // descending similarity, tag ascending on ties
    std::vector<TagId> expanded_tags;     // seeds first, then descendants in BFS order

    friend bool operator==(const QueryPlan&, const QueryPlan&) = default;
};

/// Microsecond timings per retrieval stage.
struct StageTimings {
    double route_us = 0.0;
    double expand_us = 0.0;
    double candidates_us = 0.0;
    double rank_us = 0.0;
    double total_us = 0.0;
};

struct RetrievalResult {
    std::vector<ScoredEpisode> hits;
    std::size_t candidates_examined = 0;
    QueryPlan plan;
    StageTimings timings;
    bool fell_back = false; // neither tags nor time narrowed anything; the user's full set was scanned
};

/// Per-query overrides of the store configuration.
struct QueryOptions {
    std::optional<std::size_t> route_k;
    std::optional<std::size_t> max_depth;
    std::optional<bool> expand_parents;
    /// When set, replaces whatever the temporal parser would extract.
    std::optional<std::vector<TimeInterval>> intervals;
};

/// The k tags with the highest cosine similarity to the query. Because the
/// objective "maximise the summed similarity of a k-subset" is separable,
/// taking the k individually best tags is exact. Tags with a zero embedding
/// are never selected. `similarity_count`, when given, receives the number
/// of similarity evaluations (always |V|).
inline std::vector<RoutedTag> route_tags(std::span<const float> query, const TagDag& dag, std::size_t k,
                                         std::size_t* similarity_count = nullptr) {
    if (similarity_count) *similarity_count = 0;
    if (dag.size() == 0 || k == 0) return {};
    if (query.size() != dag.dim())
        throw Error(ErrorCode::DimensionMismatch, "query length " + std::to_string(query.size()) + ", expected " +
                                                      std::to_string(dag.dim()));
    const double qn = l2_norm(query);
    if (qn == 0.0) throw Error(ErrorCode::ZeroNorm, "query embedding is zero");

    struct Scored {
        double sim;
        TagDag::NodeIndex node;
    };
    std::vector<Scored> scored;
    scored.reserve(dag.size());
    for (TagDag::NodeIndex i = 0; i < dag.size(); ++i) {
        const auto& node = dag.node(i);
        if (similarity_count) ++*similarity_count;
        if (node.norm == 0.0) continue;
        scored.push_back({dot(query, node.embedding) / (qn * node.norm), i});
    }
    auto better = [&](const Scored& a, const Scored& b) {
        if (a.sim != b.sim) return a.sim > b.sim;
        return dag.node(a.node).tag < dag.node(b.node).tag;
    };
    const std::size_t take = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + std::ptrdiff_t(take), scored.end(), better);
    std::vector<RoutedTag> out;
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i) out.push_back({dag.node(scored[i].node).tag, scored[i].sim});
    return out;
}

} // namespace swiftmem
