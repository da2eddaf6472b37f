#pragma once

#include <json.hpp>

#include "swiftmem/bench.hpp"
#include "swiftmem/engine.hpp"
#include "swiftmem/ingest.hpp"
#include "swiftmem/temporal_parser.hpp"

namespace swiftmem {

using ojson = nlohmann::ordered_json;

/// "2022-03-16T00:00:00Z" for whole seconds, with ".mmm" otherwise.
inline std::string format_iso8601(Timestamp ms) {
    const auto day = calendar::floor_day(ms);
    const auto c = calendar::civil_from(ms);
    const auto rem = ms - day;
    const auto h = rem / 3'600'000, m = rem / 60'000 % 60, s = rem / 1000 % 60, f = rem % 1000;
    char buf[64];
    if (f)
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lld.%03lldZ", c.year, c.month, c.day,
                      (long long)h, (long long)m, (long long)s, (long long)f);
    else
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", c.year, c.month, c.day, (long long)h,
                      (long long)m, (long long)s);
    return buf;
}

inline ojson to_json(const TimeInterval& iv) {
    return {{"start", iv.start}, {"end", iv.end}, {"start_iso", format_iso8601(iv.start)},
            {"end_iso", format_iso8601(iv.end)}};
}

inline ojson to_json(const std::vector<ScoredEpisode>& hits) {
    auto arr = ojson::array();
    for (const auto& h : hits) arr.push_back({{"id", h.id.value}, {"score", h.score}});
    return arr;
}

inline ojson to_json(const QueryPlan& p) {
    ojson j;
    j["raw"] = p.raw;
    j["user"] = p.user;
    j["intervals"] = ojson::array();
    for (const auto& iv : p.intervals) j["intervals"].push_back(to_json(iv));
    j["seed_tags"] = ojson::array();
    for (const auto& s : p.seed_tags) j["seed_tags"].push_back({{"tag", s.tag.str()}, {"similarity", s.similarity}});
    j["expanded_tags"] = ojson::array();
    for (const auto& t : p.expanded_tags) j["expanded_tags"].push_back(t.str());
    return j;
}

inline ojson to_json(const StageTimings& t) {
    return {{"route_us", t.route_us},
            {"expand_us", t.expand_us},
            {"candidates_us", t.candidates_us},
            {"rank_us", t.rank_us},
            {"total_us", t.total_us}};
}

inline ojson to_json(const RetrievalResult& r) {
    return {{"hits", to_json(r.hits)},
            {"candidates_examined", r.candidates_examined},
            {"fell_back", r.fell_back},
            {"plan", to_json(r.plan)},
            {"timings", to_json(r.timings)}};
}

inline ojson to_json(const ConsolidationReport& r) {
    ojson j;
    j["performed"] = r.performed;
    j["moved"] = r.moved;
    j["clusters"] = r.clusters;
    j["fragmentation_before"] = r.fragmentation_before;
    j["fragmentation_after"] = r.fragmentation_after;
    j["layout"] = ojson::array();
    for (const auto& e : r.layout)
        j["layout"].push_back(
            {{"tag", e.tag.str()}, {"o_start", e.o_start}, {"o_end", e.o_end}, {"cluster", e.cluster}, {"count", e.count}});
    return j;
}

inline ojson to_json(const EngineStats& s) {
    ojson users = ojson::object();
    for (const auto& [u, n] : s.users) users[u] = n;
    return {{"episodes", s.episodes},
            {"tags", s.tags},
            {"edges", s.edges},
            {"avg_parents", s.avg_parents},
            {"avg_children", s.avg_children},
            {"fragmentation", s.fragmentation},
            {"weighted_cohesion", s.weighted_cohesion},
            {"clusters", s.clusters},
            {"rejected_relations", s.rejected_relations},
            {"users", std::move(users)}};
}

inline ojson to_json(const IngestSummary& s) {
    auto errors = ojson::array();
    for (const auto& e : s.errors) errors.push_back({{"line", e.line}, {"message", e.message}});
    return {{"lines", s.lines},
            {"records", s.records},
            {"episodes", s.episodes},
            {"skipped", s.skipped},
            {"tags", s.tags},
            {"edges", s.edges},
            {"relations_accepted", s.relations_accepted},
            {"rejected_cycles", s.relations_rejected},
            {"errors", std::move(errors)}};
}

inline ojson to_json(const Episode& e) {
    auto tags = ojson::array();
    for (const auto& t : e.tags) tags.push_back(t.str());
    return {{"id", e.id.value}, {"user", e.user}, {"content", e.content}, {"ts", e.timestamp},
            {"ts_iso", format_iso8601(e.timestamp)}, {"tags", std::move(tags)}};
}

namespace bench {

inline ojson to_json(const LatencyStats& s) {
    return {{"mean_us", s.mean_us}, {"p50_us", s.p50_us}, {"p95_us", s.p95_us}};
}

inline ojson to_json(const CountStats& s) {
    return {{"mean", s.mean}, {"p50", s.p50}, {"min", s.min}, {"max", s.max}};
}

inline ojson config_json(const BenchConfig& c) {
    return {{"n", c.n},         {"tags", effective_tags(c)}, {"users", c.users},         {"queries", c.queries},
            {"seed", c.seed},   {"dim", c.dim},              {"top_k", c.top_k},         {"k", c.route_k},
            {"depth", c.max_depth}};
}

inline ojson to_json(const BenchReport& r) {
    ojson j;
    j["config"] = config_json(r.config);
    j["n"] = r.n;
    j["tags"] = r.tags;
    j["edges"] = r.edges;
    j["queries"] = r.queries;
    j["indexed"] = to_json(r.indexed);
    j["exhaustive"] = to_json(r.exhaustive);
    j["candidates_examined"] = to_json(r.candidates);
    j["candidate_fraction"] = r.candidate_fraction;
    j["speedup"] = r.speedup;
    j["recall_vs_exhaustive"] = r.recall_vs_exhaustive;
    j["evidence_recall"] = {{"indexed", r.evidence_recall_indexed}, {"exhaustive", r.evidence_recall_exhaustive}};
    j["fallbacks"] = r.fallbacks;
    const auto& c = r.consolidation;
    j["consolidation"] = {{"performed", c.performed},
                          {"moved", c.moved},
                          {"clusters", c.clusters},
                          {"fragmentation_before", c.fragmentation_before},
                          {"fragmentation_after", c.fragmentation_after},
                          {"pre_mean_us", c.pre_mean_us},
                          {"post_mean_us", c.post_mean_us},
                          {"hits_identical", c.hits_identical}};
    j["baseline"] = "in-process exhaustive cosine scan over the querying user's episodes";
    return j;
}

inline ojson to_json(const AblationReport& r) {
    ojson j;
    j["config"] = config_json(r.config);
    j["n"] = r.n;
    j["queries"] = r.queries;
    j["rows"] = ojson::array();
    for (const auto& row : r.rows)
        j["rows"].push_back({{"hint_ratio", row.ratio},
                             {"hinted", row.hinted},
                             {"latency", to_json(row.latency)},
                             {"candidates_examined", to_json(row.candidates)},
                             {"recall_vs_exhaustive", row.recall_vs_exhaustive},
                             {"evidence_recall", row.evidence_recall}});
    return j;
}

} // namespace bench

} // namespace swiftmem
