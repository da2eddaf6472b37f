// swiftmem command-line front end.
//
// Exit codes: 0 success, 1 usage error, 2 data error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "swiftmem/swiftmem.hpp"

namespace fs = std::filesystem;
using namespace swiftmem;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Providers {
    std::string tagger = "offline";
    std::string embedder = "offline";
    std::string llm_endpoint = adapters::env_or("SWIFTMEM_LLM_ENDPOINT");
    std::string embed_endpoint = adapters::env_or("SWIFTMEM_EMBED_ENDPOINT");
    std::string api_key = adapters::env_or("SWIFTMEM_API_KEY");
    std::string llm_model = "gpt-4o-mini";
    std::string embed_model = "text-embedding-3-small";
    int timeout_ms = 10'000;
};

struct Common {
    std::string config_path;
    bool json = false;
    Providers providers;
    std::vector<std::pair<std::string, const CLI::Option*>> provider_flags; // config key, flag

    // a flag on the command line beats the same key in --config
    bool flag_given(std::string_view key) const {
        for (const auto& [k, opt] : provider_flags)
            if (k == key && opt->count() > 0) return true;
        return false;
    }
};

adapters::ProviderMode parse_mode(const std::string& s, const char* what) {
    if (s == "offline") return adapters::ProviderMode::Offline;
    if (s == "remote") return adapters::ProviderMode::Remote;
    throw UsageError(std::string("--") + what + " must be 'offline' or 'remote'");
}

/// Store settings from --config plus provider keys the store does not know about.
StoreConfig resolve_config(Common& c) {
    StoreConfig cfg;
    if (c.config_path.empty()) return cfg;
    auto& p = c.providers;
    for_each_config_entry(c.config_path, [&](std::string_view k, std::string_view v) {
        const std::string val(v);
        if (c.flag_given(k)) return;
        if (k == "tagger") p.tagger = val;
        else if (k == "embedder") p.embedder = val;
        else if (k == "llm_endpoint") p.llm_endpoint = val;
        else if (k == "embed_endpoint") p.embed_endpoint = val;
        else if (k == "llm_model") p.llm_model = val;
        else if (k == "embed_model") p.embed_model = val;
        else if (k == "timeout_ms") p.timeout_ms = int(detail::parse_count(k, v));
        else apply_config_entry(cfg, k, v);
    });
    cfg.validate();
    return cfg;
}

adapters::RemoteSpec embed_spec(const Providers& p) {
    return {parse_mode(p.embedder, "embedder"), p.embed_endpoint, p.embed_model, p.api_key, p.timeout_ms};
}

adapters::RemoteSpec tag_spec(const Providers& p) {
    return {parse_mode(p.tagger, "tagger"), p.llm_endpoint, p.llm_model, p.api_key, p.timeout_ms};
}

std::shared_ptr<const adapters::Embedder> make_embedder(const Providers& p, std::size_t dim) {
    const auto spec = embed_spec(p);
    if (spec.mode == adapters::ProviderMode::Remote && spec.endpoint.empty())
        throw UsageError("remote embedder needs SWIFTMEM_EMBED_ENDPOINT or --embed-endpoint");
    return adapters::make_embedder(spec, dim);
}

void install_tagger(MemoryEngine& engine, const Providers& p) {
    const auto spec = tag_spec(p);
    if (spec.mode == adapters::ProviderMode::Offline) {
        engine.set_tagger(std::make_unique<adapters::OfflineTagger>());
        return;
    }
    if (spec.endpoint.empty()) throw UsageError("remote tagger needs SWIFTMEM_LLM_ENDPOINT or --llm-endpoint");
    auto fallback = std::make_unique<adapters::EmbeddingFallbackTagger>(engine.embedder(), &engine.dag(),
                                                                         engine.config().fallback_similarity_min);
    engine.set_tagger(std::make_unique<adapters::HttpTagger>(spec, std::move(fallback)));
}

std::unique_ptr<MemoryEngine> open_store(const std::string& path, StoreConfig cfg, const Providers& p) {
    if (!fs::exists(path)) throw Error(ErrorCode::IoError, "store '" + path + "' does not exist");
    auto data = read_snapshot(path);
    return build_engine(data, cfg, make_embedder(p, data.dim));
}

Timestamp parse_time_flag(const std::string& flag, const std::string& v) {
    if (!v.empty() && v.find_first_not_of("0123456789") == std::string::npos) return std::stoll(v);
    if (auto t = calendar::parse_iso8601(v)) return *t;
    throw UsageError(flag + ": expected epoch milliseconds or an ISO-8601 date, got '" + v + "'");
}

Timestamp now_ms() {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

void print_json(const ojson& j) { std::cout << j.dump(2) << '\n'; }

std::string shorten(const std::string& s, std::size_t n) {
    std::string out;
    for (char c : s) out += (c == '\n' ? ' ' : c);
    if (out.size() > n) out = out.substr(0, n - 3) + "...";
    return out;
}

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config_path, "key=value settings file")->check(CLI::ExistingFile);
    cmd->add_flag("--json", c.json, "machine-readable output");
}

void add_providers(CLI::App* cmd, Common& c) {
    auto& p = c.providers;
    auto& f = c.provider_flags;
    f.emplace_back("tagger", cmd->add_option("--tagger", p.tagger, "offline | remote"));
    f.emplace_back("embedder", cmd->add_option("--embedder", p.embedder, "offline | remote"));
    f.emplace_back("llm_endpoint", cmd->add_option("--llm-endpoint", p.llm_endpoint, "chat completion URL"));
    f.emplace_back("embed_endpoint", cmd->add_option("--embed-endpoint", p.embed_endpoint, "embedding URL"));
    f.emplace_back("llm_model", cmd->add_option("--llm-model", p.llm_model));
    f.emplace_back("embed_model", cmd->add_option("--embed-model", p.embed_model));
    f.emplace_back("timeout_ms", cmd->add_option("--timeout-ms", p.timeout_ms));
}

// ---- ingest ----------------------------------------------------------------

struct IngestArgs {
    std::string input, store;
    std::optional<std::size_t> dim;
};

int cmd_ingest(Common& c, const IngestArgs& a) {
    auto cfg = resolve_config(c);
    if (a.dim) cfg.dim = *a.dim;
    cfg.validate();
    std::unique_ptr<MemoryEngine> engine;
    if (fs::exists(a.store)) {
        auto data = read_snapshot(a.store);
        engine = build_engine(data, cfg, make_embedder(c.providers, data.dim));
    } else {
        engine = std::make_unique<MemoryEngine>(cfg, make_embedder(c.providers, cfg.dim));
    }
    install_tagger(*engine, c.providers);

    std::ifstream in(a.input);
    if (!in) throw Error(ErrorCode::IoError, "cannot open input '" + a.input + "'");
    const auto parsed = parse_conversations(in);
    const auto before = engine->size();
    auto summary = ingest_conversations(*engine, parsed);
    write_snapshot(*engine, a.store);

    for (const auto& e : summary.errors) std::cerr << a.input << ":" << e.line << ": " << e.message << '\n';
    if (c.json) {
        auto j = to_json(summary);
        j["store_episodes"] = engine->size();
        print_json(j);
    } else {
        std::cout << "ingested " << summary.episodes << " episodes from " << summary.records << " conversations";
        if (before) std::cout << " (store now holds " << engine->size() << ")";
        std::cout << "\n";
        std::cout << "tags: " << summary.tags << "  edges: " << summary.edges
                  << "  rejected cycles: " << summary.relations_rejected << "  skipped lines: " << summary.skipped
                  << "\n";
    }
    return 0;
}

// ---- query -----------------------------------------------------------------

struct QueryArgs {
    std::string store, text, user, since, until, now;
    std::optional<std::size_t> top_k, k, depth;
    bool exhaustive = false;
    bool parents = false;
};

int cmd_query(Common& c, const QueryArgs& a) {
    auto cfg = resolve_config(c);
    auto engine = open_store(a.store, cfg, c.providers);

    std::string user = a.user;
    if (user.empty()) {
        const auto users = engine->temporal().users();
        if (users.size() > 1) throw UsageError("store holds several users; pass --user");
        if (users.size() == 1) user = users.front();
    }

    QueryOptions opts;
    opts.route_k = a.k;
    opts.max_depth = a.depth;
    if (a.parents) opts.expand_parents = true;
    if (!a.since.empty() || !a.until.empty()) {
        const Timestamp lo = a.since.empty() ? 0 : parse_time_flag("--since", a.since);
        const Timestamp hi =
            a.until.empty() ? std::numeric_limits<Timestamp>::max() : parse_time_flag("--until", a.until);
        if (!(lo < hi)) throw UsageError("--since must be before --until");
        opts.intervals = std::vector<TimeInterval>{TimeInterval(lo, hi)};
    }
    const Timestamp now = a.now.empty() ? now_ms() : parse_time_flag("--now", a.now);

    RetrievalResult res;
    if (engine->size() == 0) {
        res.plan.raw = a.text;
        res.plan.user = user;
    } else if (a.exhaustive) {
        res = engine->retrieve_exhaustive(a.text, user, a.top_k);
    } else {
        res = engine->query(a.text, user, now, a.top_k, opts);
    }

    if (c.json) {
        auto j = to_json(res);
        j["mode"] = a.exhaustive ? "exhaustive" : "indexed";
        auto& hits = j["hits"];
        for (std::size_t i = 0; i < res.hits.size(); ++i) {
            const auto& ep = engine->store().get_episode(res.hits[i].id);
            hits[i]["ts"] = ep.timestamp;
            hits[i]["content"] = ep.content;
        }
        print_json(j);
        return 0;
    }
    if (!a.exhaustive) {
        std::cout << "intervals:";
        if (res.plan.intervals.empty()) std::cout << " (none)";
        for (const auto& iv : res.plan.intervals)
            std::cout << " [" << format_iso8601(iv.start) << ", " << format_iso8601(iv.end) << ")";
        std::cout << "\nseed tags:";
        for (const auto& s : res.plan.seed_tags) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.4f", s.similarity);
            std::cout << ' ' << s.tag << " (" << buf << ")";
        }
        std::cout << "\nexpanded tags:";
        for (const auto& t : res.plan.expanded_tags) std::cout << ' ' << t;
        std::cout << '\n';
    }
    std::cout << res.hits.size() << " hits (" << res.candidates_examined << " candidates examined"
              << (res.fell_back ? ", full scan fallback" : "") << ")\n";
    for (std::size_t i = 0; i < res.hits.size(); ++i) {
        const auto& ep = engine->store().get_episode(res.hits[i].id);
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6f", res.hits[i].score);
        std::cout << "  " << i + 1 << ". #" << ep.id << "  " << buf << "  " << format_iso8601(ep.timestamp) << "  "
                  << shorten(ep.content, 72) << '\n';
    }
    const auto& t = res.timings;
    std::cout << "timings (us): route " << t.route_us << "  expand " << t.expand_us << "  candidates "
              << t.candidates_us << "  rank " << t.rank_us << "  total " << t.total_us << '\n';
    return 0;
}

// ---- consolidate -----------------------------------------------------------

int cmd_consolidate(Common& c, const std::string& store, bool force) {
    auto cfg = resolve_config(c);
    auto engine = open_store(store, cfg, c.providers);
    const auto report = engine->consolidate(force);
    if (report.performed) write_snapshot(*engine, store);
    if (c.json) {
        print_json(to_json(report));
        return 0;
    }
    if (!report.performed) {
        const auto h = engine->layout_health();
        std::cout << "skipped: fragmentation " << h.fragmentation << " (min " << cfg.consolidation_fragmentation_min
                  << "), cohesion " << h.weighted_cohesion << " (min " << cfg.consolidation_cohesion_min
                  << "); use --force to consolidate anyway\n";
        return 0;
    }
    std::cout << "consolidated " << report.clusters << " clusters, moved " << report.moved << " embeddings\n"
              << "fragmentation " << report.fragmentation_before << " -> " << report.fragmentation_after << '\n';
    return 0;
}

// ---- bench / ablate --------------------------------------------------------

struct BenchArgs {
    bench::BenchConfig cfg;
    std::optional<std::size_t> dim, top_k, k, depth;
    bool no_consolidation = false;
    std::vector<double> ratios{0.0, 0.5, 1.0};
};

void add_bench_options(CLI::App* cmd, BenchArgs& b) {
    cmd->add_option("--n", b.cfg.n, "episodes")->capture_default_str();
    cmd->add_option("--tags", b.cfg.tags, "topic tags (0 = n/200)")->capture_default_str();
    cmd->add_option("--users", b.cfg.users)->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--queries", b.cfg.queries)->capture_default_str();
    cmd->add_option("--seed", b.cfg.seed)->capture_default_str();
    cmd->add_option("--dim", b.dim, "embedding dimension");
    cmd->add_option("--top-k", b.top_k);
    cmd->add_option("--k", b.k, "tags routed per query");
    cmd->add_option("--depth", b.depth, "tag expansion depth");
}

bench::BenchConfig resolve_bench(Common& c, const BenchArgs& a) {
    const auto store = resolve_config(c);
    auto cfg = a.cfg;
    cfg.dim = a.dim.value_or(store.dim);
    cfg.top_k = a.top_k.value_or(store.top_k_results);
    cfg.route_k = a.k.value_or(store.route_k);
    cfg.max_depth = a.depth.value_or(store.max_depth);
    cfg.consolidation = !a.no_consolidation;
    if (cfg.dim == 0 || cfg.route_k == 0) throw UsageError("--dim and --k must be positive");
    return cfg;
}

void print_latency(const char* name, const bench::LatencyStats& s) {
    std::printf("  %-11s mean %10.1f us   p50 %10.1f us   p95 %10.1f us\n", name, s.mean_us, s.p50_us, s.p95_us);
}

int cmd_bench(Common& c, const BenchArgs& a) {
    const auto cfg = resolve_bench(c, a);
    const auto r = bench::run_bench(cfg);
    if (c.json) {
        print_json(bench::to_json(r));
        return 0;
    }
    std::printf("corpus: %zu episodes, %zu tags, %zu edges, %zu queries (seed %llu)\n", r.n, r.tags, r.edges,
                r.queries, static_cast<unsigned long long>(cfg.seed));
    if (r.queries == 0) {
        std::printf("nothing to measure\n");
        return 0;
    }
    print_latency("indexed", r.indexed);
    print_latency("exhaustive", r.exhaustive);
    std::printf("  speedup %.2fx   candidates mean %.1f (%.2f%% of N), p50 %.0f, max %zu\n", r.speedup,
                r.candidates.mean, 100.0 * r.candidate_fraction, r.candidates.p50, r.candidates.max);
    std::printf("  recall vs exhaustive@%zu %.3f   evidence recall indexed %.3f / exhaustive %.3f   fallbacks %zu\n",
                cfg.top_k, r.recall_vs_exhaustive, r.evidence_recall_indexed, r.evidence_recall_exhaustive,
                r.fallbacks);
    if (cfg.consolidation) {
        const auto& b = r.consolidation;
        std::printf("  consolidation: moved %zu, fragmentation %.3f -> %.3f, indexed mean %.1f -> %.1f us, hits %s\n",
                    b.moved, b.fragmentation_before, b.fragmentation_after, b.pre_mean_us, b.post_mean_us,
                    b.hits_identical ? "identical" : "DIFFER");
    }
    std::printf("  baseline: in-process exhaustive scan (external systems not rerun)\n");
    return 0;
}

int cmd_ablate(Common& c, const BenchArgs& a) {
    auto cfg = resolve_bench(c, a);
    cfg.consolidation = false;
    for (double r : a.ratios)
        if (r < 0.0 || r > 1.0) throw UsageError("--hint-ratio values must lie in [0,1]");
    const auto rep = bench::ablate_temporal(cfg, a.ratios);
    if (c.json) {
        print_json(bench::to_json(rep));
        return 0;
    }
    std::printf("corpus: %zu episodes, %zu queries\n", rep.n, rep.queries);
    std::printf("%8s %8s %12s %12s %12s %10s %10s\n", "ratio", "hinted", "mean_us", "p50_us", "candidates",
                "recall@k", "evidence");
    for (const auto& row : rep.rows)
        std::printf("%8.2f %8zu %12.1f %12.1f %12.1f %10.3f %10.3f\n", row.ratio, row.hinted, row.latency.mean_us,
                    row.latency.p50_us, row.candidates.mean, row.recall_vs_exhaustive, row.evidence_recall);
    return 0;
}

// ---- stats / dump-dag ------------------------------------------------------

int cmd_stats(Common& c, const std::string& store) {
    auto cfg = resolve_config(c);
    auto engine = open_store(store, cfg, c.providers);
    const auto s = engine->stats();
    if (c.json) {
        print_json(to_json(s));
        return 0;
    }
    std::printf("episodes      %zu\ntags          %zu\nedges         %zu\navg parents   %.4f\navg children  %.4f\n"
                "fragmentation %.4f\ncohesion      %.4f\nclusters      %zu\n",
                s.episodes, s.tags, s.edges, s.avg_parents, s.avg_children, s.fragmentation, s.weighted_cohesion,
                s.clusters);
    for (const auto& [u, n] : s.users) std::printf("user %-20s %zu\n", u.c_str(), n);
    return 0;
}

int cmd_dump_dag(Common& c, const std::string& store) {
    auto cfg = resolve_config(c);
    auto engine = open_store(store, cfg, c.providers);
    const auto& dag = engine->dag();
    if (!c.json) {
        std::cout << dag.to_dot();
        return 0;
    }
    ojson j;
    j["nodes"] = ojson::array();
    for (const auto& n : dag.nodes()) {
        auto parents = ojson::array(), children = ojson::array();
        for (auto p : n.parents) parents.push_back(dag.node(p).tag.str());
        for (auto ch : n.children) children.push_back(dag.node(ch).tag.str());
        j["nodes"].push_back({{"tag", n.tag.str()},
                              {"episodes", n.episodes.size()},
                              {"parents", std::move(parents)},
                              {"children", std::move(children)}});
    }
    j["edges"] = ojson::array();
    for (const auto& [p, ch] : dag.edges())
        j["edges"].push_back({{"parent", dag.node(p).tag.str()}, {"child", dag.node(ch).tag.str()}});
    j["dot"] = dag.to_dot();
    print_json(j);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"swiftmem: indexed conversational memory"};
    app.require_subcommand(1);
    Common common;
    int rc = 0;

    IngestArgs ingest_args;
    auto* ingest = app.add_subcommand("ingest", "ingest conversations (JSONL) into a store");
    add_common(ingest, common);
    add_providers(ingest, common);
    ingest->add_option("--input", ingest_args.input, "conversation JSONL")->required();
    ingest->add_option("--store", ingest_args.store, "snapshot file (created if missing)")->required();
    ingest->add_option("--dim", ingest_args.dim, "embedding dimension for a new store");

    QueryArgs query_args;
    auto* query = app.add_subcommand("query", "retrieve episodes for a query");
    add_common(query, common);
    add_providers(query, common);
    query->add_option("--store", query_args.store)->required();
    query->add_option("text", query_args.text, "query text")->required();
    query->add_option("--user", query_args.user);
    query->add_option("--top-k", query_args.top_k);
    query->add_option("--k", query_args.k, "tags routed per query");
    query->add_option("--depth", query_args.depth, "tag expansion depth");
    query->add_option("--since", query_args.since, "interval start (ISO-8601 or epoch ms), overrides parsing");
    query->add_option("--until", query_args.until, "interval end, exclusive");
    query->add_option("--now", query_args.now, "reference time for relative expressions");
    query->add_flag("--exhaustive", query_args.exhaustive, "scan every episode of the user");
    query->add_flag("--parents", query_args.parents, "also expand to parents of the seed tags");

    std::string consolidate_store;
    bool force = false;
    auto* consolidate = app.add_subcommand("consolidate", "re-lay embeddings by tag cluster");
    add_common(consolidate, common);
    consolidate->add_option("--store", consolidate_store)->required();
    consolidate->add_flag("--force", force, "ignore the thresholds");

    BenchArgs bench_args;
    auto* bench_cmd = app.add_subcommand("bench", "synthetic latency benchmark");
    add_common(bench_cmd, common);
    add_bench_options(bench_cmd, bench_args);
    bench_cmd->add_flag("--no-consolidation", bench_args.no_consolidation, "skip the consolidation block");

    BenchArgs ablate_args;
    auto* ablate = app.add_subcommand("ablate-temporal", "latency and recall against temporal hint ratio");
    add_common(ablate, common);
    add_bench_options(ablate, ablate_args);
    ablate->add_option("--hint-ratio", ablate_args.ratios, "comma-separated ratios")->delimiter(',')->capture_default_str();

    std::string stats_store;
    auto* stats = app.add_subcommand("stats", "store summary");
    add_common(stats, common);
    stats->add_option("--store", stats_store)->required();

    std::string dag_store;
    auto* dump = app.add_subcommand("dump-dag", "tag DAG as Graphviz DOT");
    add_common(dump, common);
    dump->add_option("--store", dag_store)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*ingest) rc = cmd_ingest(common, ingest_args);
        else if (*query) rc = cmd_query(common, query_args);
        else if (*consolidate) rc = cmd_consolidate(common, consolidate_store, force);
        else if (*bench_cmd) rc = cmd_bench(common, bench_args);
        else if (*ablate) rc = cmd_ablate(common, ablate_args);
        else if (*stats) rc = cmd_stats(common, stats_store);
        else if (*dump) rc = cmd_dump_dag(common, dag_store);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.code() == ErrorCode::InvalidArgument ? kExitUsage : kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return rc;
}
