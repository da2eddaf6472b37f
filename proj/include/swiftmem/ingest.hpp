#pragma once

#include <istream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "swiftmem/engine.hpp"
#include "swiftmem/temporal_parser.hpp"

namespace swiftmem {

struct Turn {
    std::string speaker;
    std::string text;
    Timestamp ts = 0;
};

/// One conversation session, as read from a JSONL input line:
/// {"user": "...", "session": "...", "turns": [{"speaker": "...", "text": "...", "ts": ms | "ISO-8601"}, ...]}
struct ConversationRecord {
    UserId user;
    std::string session;
    std::vector<Turn> turns;
};

struct LineError {
    std::size_t line = 0;
    std::string message;
};

struct ParsedConversations {
    std::vector<ConversationRecord> records;
    std::vector<std::size_t> record_lines; // source line of each record
    std::vector<LineError> errors;
    std::size_t lines = 0;                 // nonblank lines seen
};

inline Timestamp parse_turn_time(const nlohmann::json& v) {
    if (v.is_number_integer()) return v.get<Timestamp>();
    if (v.is_string()) {
        if (auto t = calendar::parse_iso8601(v.get<std::string>())) return *t;
        throw Error(ErrorCode::InvalidArgument, "unparsable timestamp '" + v.get<std::string>() + "'");
    }
    throw Error(ErrorCode::InvalidArgument, "timestamp must be integer milliseconds or an ISO-8601 string");
}

/// Validates one decoded record. Throws InvalidArgument describing the first problem.
inline ConversationRecord conversation_from_json(const nlohmann::json& j) {
    auto bad = [](const std::string& m) { throw Error(ErrorCode::InvalidArgument, m); };
    if (!j.is_object()) bad("record is not an object");
    ConversationRecord rec;
    if (!j.contains("user") || !j["user"].is_string() || j["user"].get<std::string>().empty()) bad("missing \"user\"");
    rec.user = j["user"].get<std::string>();
    if (j.contains("session")) {
        if (j["session"].is_string()) rec.session = j["session"].get<std::string>();
        else if (j["session"].is_number_integer()) rec.session = std::to_string(j["session"].get<long long>());
        else bad("\"session\" must be a string");
    }
    if (!j.contains("turns") || !j["turns"].is_array()) bad("missing \"turns\" array");
    for (const auto& t : j["turns"]) {
        if (!t.is_object()) bad("turn is not an object");
        Turn turn;
        turn.speaker = t.value("speaker", std::string{});
        if (!t.contains("text") || !t["text"].is_string()) bad("turn without \"text\"");
        turn.text = t["text"].get<std::string>();
        if (!t.contains("ts")) bad("turn without \"ts\"");
        turn.ts = parse_turn_time(t["ts"]);
        if (turn.ts < 0) bad("negative timestamp");
        if (!rec.turns.empty() && turn.ts < rec.turns.back().ts) bad("timestamps decrease within the session");
        rec.turns.push_back(std::move(turn));
    }
    return rec;
}

/// Reads JSONL. Blank lines are ignored; bad lines are skipped and reported.
inline ParsedConversations parse_conversations(std::istream& in) {
    ParsedConversations out;
    std::string line;
    for (std::size_t no = 1; std::getline(in, line); ++no) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        ++out.lines;
        try {
            out.records.push_back(conversation_from_json(nlohmann::json::parse(line)));
            out.record_lines.push_back(no);
        } catch (const nlohmann::json::exception& e) {
            out.errors.push_back({no, std::string("invalid JSON: ") + e.what()});
        } catch (const Error& e) {
            out.errors.push_back({no, e.what()});
        }
    }
    return out;
}

/// Episode text for a pair of consecutive turns: "speaker: text" lines.
inline std::string episode_content(const Turn& a, const Turn* b) {
    auto render = [](const Turn& t) { return t.speaker.empty() ? t.text : t.speaker + ": " + t.text; };
    std::string s = render(a);
    if (b) s += "\n" + render(*b);
    return s;
}

struct IngestSummary {
    std::size_t lines = 0;
    std::size_t records = 0;
    std::size_t episodes = 0;
    std::size_t skipped = 0;
    std::size_t relations_accepted = 0;
    std::size_t relations_rejected = 0;
    std::size_t tags = 0;
    std::size_t edges = 0;
    std::vector<LineError> errors;
};

/// Turns are paired in order (utterance + response); a trailing odd turn is
/// an episode on its own. The episode takes the first turn's timestamp.
inline IngestSummary ingest_conversations(MemoryEngine& engine, const ParsedConversations& parsed) {
    IngestSummary s;
    s.lines = parsed.lines;
    s.errors = parsed.errors;
    s.skipped = parsed.errors.size();
    for (std::size_t r = 0; r < parsed.records.size(); ++r) {
        const auto& rec = parsed.records[r];
        ++s.records;
        for (std::size_t i = 0; i < rec.turns.size(); i += 2) {
            const Turn* second = i + 1 < rec.turns.size() ? &rec.turns[i + 1] : nullptr;
            const auto content = episode_content(rec.turns[i], second);
            // speaker labels would otherwise become tags on every episode
            const auto spoken = second ? rec.turns[i].text + "\n" + second->text : rec.turns[i].text;
            try {
                auto res = engine.ingest_text(rec.user, content, rec.turns[i].ts, spoken);
                ++s.episodes;
                s.relations_accepted += res.relations_accepted;
                s.relations_rejected += res.relations_rejected;
            } catch (const Error& e) {
                if (e.code() == ErrorCode::RemoteUnavailable || e.code() == ErrorCode::EmbedderFailure) throw;
                s.errors.push_back({parsed.record_lines[r], e.what()});
            }
        }
    }
    s.tags = engine.dag().size();
    s.edges = engine.dag().edge_count();
    return s;
}

} // namespace swiftmem
