// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Heavy criteria share one 100k-episode engine.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "support.hpp"

using namespace swiftmem;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = true;
    std::string detail;
    void fail(const std::string& why) {
        if (pass) detail = why;
        pass = false;
    }
};

int failures = 0;

void report(const char* id, const char* what, Outcome o, double secs, double budget) {
    if (secs > budget) o.fail("took " + std::to_string(secs) + " s, budget " + std::to_string(budget) + " s");
    if (!o.pass) ++failures;
    std::printf("%s %s  %-46s %8.2f s  %s\n", id, o.pass ? "PASS" : "FAIL", what, secs, o.detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

// ---- A1 / A9 shared cases ---------------------------------------------------

struct Case {
    std::string user;
    Embedding q;
    std::vector<TimeInterval> intervals;
    std::vector<ScoredEpisode> got;
};

struct WorldRun {
    oracle::World world;
    std::unique_ptr<MemoryEngine> engine;
    std::vector<Case> cases;
};

std::vector<WorldRun> a1_runs;

Outcome a1() {
    Outcome o;
    std::mt19937_64 rng(1001);
    adapters::OfflineEmbedder emb(48);
    const char* questions[] = {"dog park walk", "python code",   "coffee and bread", "tax bank loan", "music",
                               "camp tent hike", "garden rose", "chess book novel", "doctor flu",   "swim beach"};
    std::size_t cases = 0;
    for (int w = 0; w < 300; ++w) {
        WorldRun run;
        run.world = oracle::random_world(rng, 48);
        run.engine = oracle::load(run.world);
        for (int qi = 0; qi < 4; ++qi) {
            Case c;
            c.user = rng() % 3 == 0 ? "bob" : "alice";
            c.q = emb.embed(questions[rng() % 10]);
            c.intervals = oracle::random_intervals(rng);
            const auto want =
                oracle::retrieve(run.world, c.user, c.q, TemporalIndex::merge_intervals(c.intervals), 5, 2, 10);
            c.got = run.engine->search("q", c.user, c.q, c.intervals).hits;
            ++cases;
            if (c.got.size() != want.size()) {
                o.fail("world " + std::to_string(w) + ": " + std::to_string(c.got.size()) + " hits, oracle " +
                       std::to_string(want.size()));
            } else {
                for (std::size_t i = 0; i < want.size(); ++i) {
                    if (c.got[i].id.value != want[i].id)
                        o.fail("world " + std::to_string(w) + ": id mismatch at rank " + std::to_string(i));
                    else if (std::abs(c.got[i].score - want[i].score) > 1e-9)
                        o.fail("world " + std::to_string(w) + ": score off at rank " + std::to_string(i));
                }
            }
            run.cases.push_back(std::move(c));
        }
        a1_runs.push_back(std::move(run));
    }
    if (o.pass) o.detail = std::to_string(cases) + " cases match the brute-force pipeline";
    return o;
}

// ---- A2 ---------------------------------------------------------------------

Outcome a2() {
    Outcome o;
    std::mt19937_64 rng(2002);
    TemporalIndex idx;
    struct Row {
        std::string user;
        Timestamp ts;
        std::uint64_t id;
    };
    std::vector<Row> rows;
    const char* users[] = {"u0", "u1", "u2"};
    std::uniform_int_distribution<Timestamp> when(0, 1'000'000);
    for (std::uint64_t i = 0; i < 10'000; ++i) {
        rows.push_back({users[rng() % 3], when(rng), i});
        idx.insert(rows.back().user, rows.back().ts, EpisodeId{i});
    }
    for (int q = 0; q < 1000; ++q) {
        const std::string user = users[rng() % 3];
        std::vector<TimeInterval> ivs;
        const std::size_t n = 1 + rng() % 3;
        for (std::size_t i = 0; i < n; ++i) {
            const Timestamp s = when(rng) - 50'000;
            ivs.emplace_back(s, s + 1 + Timestamp(rng() % 200'000));
        }
        std::vector<EpisodeId> want;
        for (const auto& r : rows) {
            if (r.user != user) continue;
            for (const auto& iv : ivs)
                if (iv.start <= r.ts && r.ts < iv.end) {
                    want.emplace_back(r.id);
                    break;
                }
        }
        std::sort(want.begin(), want.end());
        auto got = idx.multi_range_query(user, ivs);
        std::sort(got.begin(), got.end());
        if (got != want) o.fail("range query " + std::to_string(q) + " differs from linear scan");
        if (ivs.size() == 1) {
            auto single = idx.range_query(user, ivs[0]);
            std::sort(single.begin(), single.end());
            if (single != want) o.fail("single range " + std::to_string(q) + " differs");
        }
    }
    // merge property over random interval lists
    for (int t = 0; t < 10'000; ++t) {
        std::vector<TimeInterval> in;
        const std::size_t n = rng() % 10;
        for (std::size_t i = 0; i < n; ++i) {
            const Timestamp a = Timestamp(rng() % 100), len = 1 + Timestamp(rng() % 20);
            in.emplace_back(a, a + len);
        }
        const auto out = TemporalIndex::merge_intervals(in);
        for (std::size_t i = 1; i < out.size(); ++i)
            if (!(out[i - 1].end < out[i].start)) o.fail("merged intervals overlap or touch");
        for (Timestamp p = -1; p <= 121; ++p) {
            const bool a = std::any_of(in.begin(), in.end(), [&](const auto& iv) { return iv.contains(p); });
            const bool b = std::any_of(out.begin(), out.end(), [&](const auto& iv) { return iv.contains(p); });
            if (a != b) o.fail("merge changes membership of point " + std::to_string(p));
        }
    }
    if (o.pass) o.detail = "1000 queries + 10000 merge lists agree with linear scans";
    return o;
}

// ---- A3 / A5 / A6 on one 100k engine ----------------------------------------

struct Large {
    bench::BenchConfig cfg;
    bench::Corpus corpus;
    std::unique_ptr<MemoryEngine> engine;
    bench::BenchReport report;
};

Large* large = nullptr;

Outcome a3(Large& L) {
    Outcome o;
    const auto& r = L.report;
    if (r.n != 100'000 || r.tags != 500) o.fail("corpus is not 100k/500 tags");
    const double ratio = r.indexed.mean_us / r.exhaustive.mean_us;
    if (!(ratio <= 0.1)) o.fail(fmt("indexed/exhaustive mean %.3f > 0.1", ratio));
    if (!(r.candidate_fraction <= 0.2)) o.fail(fmt("candidates %.1f%% of N > 20%%", 100 * r.candidate_fraction));
    const auto d = fmt("indexed %.0f us, exhaustive %.0f us (%.1fx), candidates %.2f%% of N", r.indexed.mean_us,
                       r.exhaustive.mean_us, r.speedup, 100 * r.candidate_fraction);
    o.detail = o.pass ? d : o.detail + "; " + d;
    return o;
}

Outcome a4(const Large& L, double& secs_10k) {
    Outcome o;
    const auto t0 = Clock::now();
    auto c = L.cfg;
    c.n = 10'000;
    c.tags = 0; // one tag per 200 episodes
    c.consolidation = false;
    const auto small = bench::run_bench(c);
    secs_10k = seconds_since(t0);
    const double gi = L.report.indexed.mean_us / small.indexed.mean_us;
    const double ge = L.report.exhaustive.mean_us / small.exhaustive.mean_us;
    if (!(gi <= 3.0)) o.fail(fmt("indexed grew %.2fx (> 3x)", gi));
    if (!(ge >= 8.0)) o.fail(fmt("exhaustive grew %.2fx (< 8x)", ge));
    const auto d = fmt("10k->100k: indexed %.2fx, exhaustive %.2fx", gi, ge);
    o.detail = o.pass ? d : o.detail + "; " + d;
    return o;
}

Outcome a5(const Large& L) {
    Outcome o;
    const auto& b = L.report.consolidation;
    if (!b.performed) o.fail("consolidation not performed");
    if (!b.hits_identical) o.fail("hits changed after consolidation");
    if (!(b.fragmentation_after < b.fragmentation_before)) o.fail("fragmentation did not decrease");
    if (!(b.post_mean_us <= 1.1 * b.pre_mean_us)) o.fail(fmt("post mean %.0f us > 1.1 x pre %.0f us", b.post_mean_us, b.pre_mean_us));
    const auto d = fmt("fragmentation %.3f -> %.3f, mean %.0f -> %.0f us", b.fragmentation_before,
                       b.fragmentation_after, b.pre_mean_us, b.post_mean_us);
    o.detail = o.pass ? d : o.detail + "; " + d;
    return o;
}

Outcome a6(Large& L) {
    Outcome o;
    const auto rep = bench::ablate_temporal(L.corpus, *L.engine, L.cfg, {0.0, 0.5, 1.0});
    std::string d;
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        const auto& row = rep.rows[i];
        d += fmt("[%.1f: %.0f cand, %.0f us, ev %.3f] ", row.ratio, row.candidates.mean, row.latency.mean_us,
                 row.evidence_recall);
        if (i == 0) continue;
        const auto& prev = rep.rows[i - 1];
        if (row.candidates.mean > prev.candidates.mean) o.fail("candidates increased with hint ratio");
        if (row.latency.mean_us > prev.latency.mean_us) o.fail("latency increased with hint ratio");
        if (row.evidence_recall < prev.evidence_recall) o.fail("evidence recall decreased with hint ratio");
    }
    o.detail = o.pass ? d : o.detail + "; " + d;
    return o;
}

// ---- A7 ---------------------------------------------------------------------

Outcome a7() {
    Outcome o;
    std::mt19937_64 rng(7007);
    TagDag g(4);
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    std::size_t accepted = 0, cycles = 0;
    std::uint64_t next_episode = 0;
    for (int op = 0; op < 10'000; ++op) {
        const auto kind = rng() % 10;
        if (kind == 0 || g.size() < 2) {
            g.upsert_tag(TagId("t" + std::to_string(g.size())), Embedding{1, 0, 0, float(g.size())});
        } else if (kind == 1) {
            g.attach_episode(g.node(std::uint32_t(rng() % g.size())).tag, EpisodeId{next_episode++});
        } else {
            const auto p = std::uint32_t(rng() % g.size()), c = std::uint32_t(rng() % g.size());
            if (p == c) continue;
            const auto r = g.add_relation(g.node(p).tag, g.node(c).tag);
            if (r.accepted()) {
                ++accepted;
                edges.emplace_back(p, c);
                if (!oracle::acyclic(g.size(), edges)) o.fail("cycle after accepting op " + std::to_string(op));
            } else if (r.status == TagDag::RelationStatus::RejectedCycle) {
                ++cycles;
                auto with = edges;
                with.emplace_back(p, c);
                if (oracle::acyclic(g.size(), with)) o.fail("unjustified cycle rejection at op " + std::to_string(op));
            }
        }
        if (op % 500 == 0 && !oracle::reciprocal(g)) o.fail("parent/child lists diverged at op " + std::to_string(op));
    }
    if (!oracle::reciprocal(g)) o.fail("parent/child lists diverged");
    if (g.edge_count() != edges.size()) o.fail("edge count mismatch");
    if (o.pass)
        o.detail = std::to_string(g.size()) + " tags, " + std::to_string(accepted) + " edges accepted, " +
                   std::to_string(cycles) + " cycles rejected";
    return o;
}

// ---- A8 ---------------------------------------------------------------------

Outcome a8() {
    Outcome o;
    std::mt19937_64 rng(8008);
    std::normal_distribution<float> gauss;
    const std::size_t dim = 32;
    auto vec = [&] {
        Embedding v(dim);
        for (auto& x : v) x = gauss(rng);
        return v;
    };
    std::size_t checked = 0;
    for (int set = 0; set < 500; ++set) {
        TagDag g(dim);
        std::vector<std::pair<std::string, Embedding>> tags;
        const std::size_t n = 1 + rng() % 200;
        for (std::size_t i = 0; i < n; ++i) {
            Embedding e = (i > 0 && rng() % 10 == 0) ? tags[rng() % i].second : vec();
            if (rng() % 50 == 0) e.assign(dim, 0.0f);
            tags.emplace_back("tag" + std::to_string(rng() % 100000) + "_" + std::to_string(i), e);
            g.upsert_tag(TagId(tags.back().first), e);
        }
        for (int q = 0; q < 100; ++q) {
            const auto query = (q % 5 == 0) ? tags[rng() % n].second : vec();
            if (oracle::dot(query, query) == 0.0) continue;
            const std::size_t k = 1 + rng() % 10;
            std::vector<std::pair<double, std::string>> all;
            for (const auto& [t, e] : tags)
                if (oracle::dot(e, e) > 0.0) all.emplace_back(oracle::cosine(query, e), t);
            std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
                return a.first != b.first ? a.first > b.first : a.second < b.second;
            });
            if (all.size() > k) all.resize(k);
            const auto got = route_tags(query, g, k);
            ++checked;
            if (got.size() != all.size()) {
                o.fail("set " + std::to_string(set) + ": size mismatch");
                continue;
            }
            for (std::size_t i = 0; i < all.size(); ++i)
                if (got[i].tag.str() != all[i].second || std::abs(got[i].similarity - all[i].first) > 1e-12)
                    o.fail("set " + std::to_string(set) + ": rank " + std::to_string(i) + " differs");
        }
    }
    if (o.pass) o.detail = std::to_string(checked) + " routings match the full-sort oracle";
    return o;
}

// ---- A9 ---------------------------------------------------------------------

Outcome a9() {
    Outcome o;
    const auto dir = oracle::temp_path("acceptance-a9");
    fs::create_directories(dir);
    std::size_t reran = 0;
    for (std::size_t w = 0; w < a1_runs.size(); ++w) {
        auto& run = a1_runs[w];
        const auto path = dir / ("w" + std::to_string(w) + ".smem");
        write_snapshot(*run.engine, path);
        auto back = load_snapshot(path, {}, std::make_shared<adapters::OfflineEmbedder>(48));
        for (const auto& c : run.cases) {
            ++reran;
            if (back->search("q", c.user, c.q, c.intervals).hits != c.got)
                o.fail("world " + std::to_string(w) + " answers differently after reload");
        }
    }

    // corruption must surface as CorruptSnapshot with a line number
    const auto body = encode_snapshot(capture(*a1_runs.back().engine));
    std::vector<std::pair<std::string, std::string>> broken;
    broken.emplace_back("truncated", body.substr(0, body.size() / 2));
    broken.emplace_back("no trailer", body.substr(0, body.rfind('{')));
    {
        auto flipped = body;
        flipped[flipped.find("\"user\"") + 9] ^= 0x01;
        broken.emplace_back("flipped byte", flipped);
    }
    {
        auto garbage = body;
        garbage.insert(garbage.find('\n') + 1, "%%% not json %%%\n");
        broken.emplace_back("garbage line", garbage);
    }
    broken.emplace_back("empty", "");
    broken.emplace_back("foreign", "{\"format\":\"other\"}\n");
    for (const auto& [name, text] : broken) {
        try {
            decode_snapshot(text);
            o.fail(name + " accepted");
        } catch (const Error& e) {
            if (e.code() != ErrorCode::CorruptSnapshot || e.line() == 0) o.fail(name + ": wrong error " + e.what());
        }
    }
    fs::remove_all(dir);
    if (o.pass)
        o.detail = std::to_string(reran) + " queries identical after reload, " + std::to_string(broken.size()) +
                   " corruptions rejected";
    return o;
}

template <class F>
void timed(const char* id, const char* what, double budget, F f) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
        o = f();
    } catch (const std::exception& e) {
        o.fail(std::string("exception: ") + e.what());
    }
    report(id, what, o, seconds_since(t0), budget);
}

} // namespace

int main() {
    timed("A1", "retrieval equals brute-force pipeline", 120, a1);
    timed("A2", "temporal index equals linear scan", 30, a2);

    // 100k corpus: build, bench (with consolidation), then ablation
    Large L;
    L.cfg.n = 100'000;
    L.cfg.tags = 500;
    L.cfg.queries = 200;
    L.cfg.route_k = 5;
    L.cfg.max_depth = 2;
    L.cfg.consolidation = true;
    const auto t0 = Clock::now();
    bool built = true;
    try {
        L.corpus = bench::make_corpus(L.cfg);
        L.engine = bench::load_corpus(L.corpus, L.cfg);
        L.report = bench::run_bench(L.corpus, *L.engine, L.cfg);
        large = &L;
    } catch (const std::exception& e) {
        std::printf("100k corpus failed: %s\n", e.what());
        built = false;
    }
    const double bench_secs = seconds_since(t0);
    if (built) {
        report("A3", "indexed retrieval cost at 100k", a3(L), bench_secs, 300);
        double secs_10k = 0;
        const auto t4 = Clock::now();
        Outcome o4;
        try {
            o4 = a4(L, secs_10k);
        } catch (const std::exception& e) {
            o4.fail(e.what());
        }
        report("A4", "scaling 10k -> 100k", o4, bench_secs + seconds_since(t4), 600);
        report("A5", "consolidation preserves results", a5(L), bench_secs, 300);
        timed("A6", "temporal hints shrink work", 300, [&] { return a6(L); });
    } else {
        for (const char* id : {"A3", "A4", "A5", "A6"}) report(id, "100k corpus", Outcome{false, "not built"}, 0, 1);
    }
    L.engine.reset();

    timed("A7", "DAG stays acyclic under random edits", 30, a7);
    timed("A8", "tag routing equals full sort", 10, a8);
    timed("A9", "snapshot round trip and corruption", 60, a9);

    std::printf("%s: %d criteria failed\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
