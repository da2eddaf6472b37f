#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "swiftmem/adapters/text.hpp"
#include "swiftmem/engine.hpp"

namespace swiftmem {

/// Line-delimited JSON persistence.
///
///   line 1        {"format":"swiftmem-snapshot","version":1,"d":D,"count":N,"tags":T,"relations":R}
///   N lines       {"id":..,"user":..,"content":..,"ts":..,"tags":[..],"emb":[..]}
///   T lines       {"tag":..,"emb":[..]}              (DAG node order)
///   R lines       {"parent":..,"child":..}           (edge acceptance order)
///   1 line        {"slots":[id,..]}                   (embedding arena order)
///   last line     {"checksum":"<16 hex>","lines":L}  (hash of every preceding byte)
///
/// Floats are written as the shortest decimal that reads back to the same
/// value, so embeddings survive bit-exactly.
struct SnapshotData {
    std::size_t dim = 0;
    std::vector<Episode> episodes;
    std::vector<std::pair<TagId, Embedding>> tags;
    std::vector<std::pair<TagId, TagId>> relations;
    std::vector<EpisodeId> slots; // embedding arena order; empty means id order
};

inline constexpr std::string_view kSnapshotFormat = "swiftmem-snapshot";
inline constexpr int kSnapshotVersion = 1;

namespace detail {

inline std::string hex16(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline nlohmann::ordered_json floats_json(std::span<const float> v) {
    auto arr = nlohmann::ordered_json::array();
    for (float x : v) arr.push_back(static_cast<double>(x));
    return arr;
}

[[noreturn]] inline void corrupt(std::size_t line, const std::string& msg) {
    throw Error(ErrorCode::CorruptSnapshot, msg, line);
}

inline Embedding floats_from(const nlohmann::json& arr, std::size_t dim, std::size_t line) {
    if (!arr.is_array()) corrupt(line, "\"emb\" is not an array");
    if (arr.size() != dim)
        corrupt(line, "embedding length " + std::to_string(arr.size()) + ", expected " + std::to_string(dim));
    Embedding out;
    out.reserve(dim);
    for (const auto& x : arr) {
        if (!x.is_number()) corrupt(line, "non-numeric embedding component");
        out.push_back(static_cast<float>(x.get<double>()));
    }
    return out;
}

inline TagId tag_from(const nlohmann::json& v, std::size_t line) {
    if (!v.is_string() || !is_valid_tag(v.get<std::string>())) corrupt(line, "invalid tag " + v.dump());
    return TagId(v.get<std::string>());
}

} // namespace detail

/// Current contents of `engine` as plain data.
inline SnapshotData capture(const MemoryEngine& engine) {
    return engine.read([](const MemoryEngine& e) {
        SnapshotData d;
        d.dim = e.dim();
        d.episodes.assign(e.store().episodes().begin(), e.store().episodes().end());
        for (const auto& n : e.dag().nodes()) d.tags.emplace_back(n.tag, n.embedding);
        for (const auto& [p, c] : e.dag().edges()) d.relations.emplace_back(e.dag().node(p).tag, e.dag().node(c).tag);
        d.slots = e.embeddings().arena().slot_to_episode;
        return d;
    });
}

inline std::string encode_snapshot(const SnapshotData& d) {
    std::string out;
    std::size_t lines = 0;
    auto emit = [&](const nlohmann::ordered_json& j) {
        out += j.dump();
        out += '\n';
        ++lines;
    };
    emit({{"format", kSnapshotFormat},
          {"version", kSnapshotVersion},
          {"d", d.dim},
          {"count", d.episodes.size()},
          {"tags", d.tags.size()},
          {"relations", d.relations.size()}});
    for (const auto& e : d.episodes) {
        auto tags = nlohmann::ordered_json::array();
        for (const auto& t : e.tags) tags.push_back(t.str());
        emit({{"id", e.id.value},
              {"user", e.user},
              {"content", e.content},
              {"ts", e.timestamp},
              {"tags", std::move(tags)},
              {"emb", detail::floats_json(e.embedding)}});
    }
    for (const auto& [t, emb] : d.tags) emit({{"tag", t.str()}, {"emb", detail::floats_json(emb)}});
    for (const auto& [p, c] : d.relations) emit({{"parent", p.str()}, {"child", c.str()}});
    auto slots = nlohmann::ordered_json::array();
    for (auto id : d.slots) slots.push_back(id.value);
    emit({{"slots", std::move(slots)}});
    const auto sum = text::hash64(out);
    emit({{"checksum", detail::hex16(sum)}, {"lines", lines}});
    return out;
}

/// Writes atomically (temporary file + rename). Returns the number of episode records.
inline std::size_t write_snapshot(const MemoryEngine& engine, const std::filesystem::path& path) {
    const auto data = capture(engine);
    const auto body = encode_snapshot(data);
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
        out.write(body.data(), std::streamsize(body.size()));
        if (!out) throw Error(ErrorCode::IoError, "write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot move snapshot into place at " + path.string() + ": " + ec.message());
    return data.episodes.size();
}

inline SnapshotData decode_snapshot(std::string_view body) {
    using nlohmann::json;
    SnapshotData d;
    swiftmem::text::Hasher hasher;
    std::size_t line_no = 0, pos = 0;
    std::size_t count = 0, tag_count = 0, rel_count = 0;
    bool trailer_seen = false;

    while (pos < body.size()) {
        const auto nl = body.find('\n', pos);
        if (nl == std::string_view::npos) detail::corrupt(line_no + 1, "truncated record (no line terminator)");
        const auto line = body.substr(pos, nl - pos);
        ++line_no;
        if (trailer_seen) detail::corrupt(line_no, "data after checksum trailer");
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            detail::corrupt(line_no, std::string("unparsable JSON: ") + e.what());
        }
        if (!j.is_object()) detail::corrupt(line_no, "record is not an object");
        try {
            if (line_no == 1) {
                if (j.value("format", "") != kSnapshotFormat) detail::corrupt(1, "not a swiftmem snapshot");
                if (j.value("version", 0) != kSnapshotVersion)
                    detail::corrupt(1, "unsupported version " + j.value("version", json()).dump());
                d.dim = j.at("d").get<std::size_t>();
                count = j.at("count").get<std::size_t>();
                tag_count = j.value("tags", std::size_t{0});
                rel_count = j.value("relations", std::size_t{0});
                if (d.dim == 0) detail::corrupt(1, "dimension 0");
            } else if (j.contains("checksum")) {
                const auto expected = j.at("checksum").get<std::string>();
                if (expected != detail::hex16(hasher.digest())) detail::corrupt(line_no, "checksum mismatch");
                if (j.at("lines").get<std::size_t>() != line_no - 1) detail::corrupt(line_no, "line count mismatch");
                trailer_seen = true;
            } else if (d.episodes.size() < count) {
                Episode e;
                e.id = EpisodeId{j.at("id").get<std::uint64_t>()};
                if (e.id.value != d.episodes.size())
                    detail::corrupt(line_no, "episode id " + std::to_string(e.id.value) + ", expected " +
                                                 std::to_string(d.episodes.size()));
                e.user = j.at("user").get<std::string>();
                e.content = j.at("content").get<std::string>();
                e.timestamp = j.at("ts").get<Timestamp>();
                if (e.timestamp < 0) detail::corrupt(line_no, "negative timestamp");
                for (const auto& t : j.at("tags")) e.tags.push_back(detail::tag_from(t, line_no));
                e.embedding = detail::floats_from(j.at("emb"), d.dim, line_no);
                d.episodes.push_back(std::move(e));
            } else if (d.tags.size() < tag_count) {
                d.tags.emplace_back(detail::tag_from(j.at("tag"), line_no),
                                    detail::floats_from(j.at("emb"), d.dim, line_no));
            } else if (d.relations.size() < rel_count) {
                d.relations.emplace_back(detail::tag_from(j.at("parent"), line_no),
                                         detail::tag_from(j.at("child"), line_no));
            } else if (j.contains("slots") && d.slots.empty()) {
                for (const auto& id : j.at("slots")) d.slots.emplace_back(id.get<std::uint64_t>());
                if (d.slots.size() != count) detail::corrupt(line_no, "slot list does not cover every episode");
            } else {
                detail::corrupt(line_no, "unexpected record");
            }
        } catch (const json::exception& e) {
            detail::corrupt(line_no, std::string("malformed record: ") + e.what());
        }
        hasher.update(body.substr(pos, nl - pos + 1));
        pos = nl + 1;
    }
    if (line_no == 0) detail::corrupt(1, "empty file");
    if (!trailer_seen) detail::corrupt(line_no + 1, "missing checksum trailer (file truncated?)");
    if (d.episodes.size() != count || d.tags.size() != tag_count || d.relations.size() != rel_count)
        detail::corrupt(line_no, "record counts disagree with header");
    return d;
}

inline SnapshotData read_snapshot(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw Error(ErrorCode::IoError, "read failed for " + path.string());
    return decode_snapshot(buf.str());
}

/// Rebuilds every index from snapshot data: tags, then relations, then episodes in id order.
inline std::unique_ptr<MemoryEngine> build_engine(const SnapshotData& d, StoreConfig config,
                                                  std::shared_ptr<const adapters::Embedder> embedder = nullptr,
                                                  std::unique_ptr<adapters::Tagger> tagger = nullptr) {
    config.dim = d.dim;
    auto engine = std::make_unique<MemoryEngine>(config, std::move(embedder), std::move(tagger));
    for (const auto& [t, emb] : d.tags) engine->upsert_tag(t, emb);
    for (const auto& [p, c] : d.relations) {
        if (!engine->dag().contains(p) || !engine->dag().contains(c))
            throw Error(ErrorCode::CorruptSnapshot, "relation " + p.str() + " -> " + c.str() + " names an unknown tag");
        if (!engine->add_relation(p, c).accepted())
            throw Error(ErrorCode::CorruptSnapshot, "relation " + p.str() + " -> " + c.str() + " is not acyclic");
    }
    for (const auto& e : d.episodes) {
        for (const auto& t : e.tags)
            if (!engine->dag().contains(t))
                throw Error(ErrorCode::CorruptSnapshot,
                            "episode " + std::to_string(e.id.value) + " carries unknown tag " + t.str());
        engine->restore(e);
    }
    if (!d.slots.empty()) {
        try {
            engine->restore_layout(d.slots);
        } catch (const Error& e) {
            throw Error(ErrorCode::CorruptSnapshot, e.what());
        }
    }
    return engine;
}

inline std::unique_ptr<MemoryEngine> load_snapshot(const std::filesystem::path& path, StoreConfig config = {},
                                                   std::shared_ptr<const adapters::Embedder> embedder = nullptr) {
    return build_engine(read_snapshot(path), std::move(config), std::move(embedder));
}

} // namespace swiftmem
