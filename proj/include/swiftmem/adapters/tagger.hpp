#pragma once

#include <algorithm>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "swiftmem/adapters/embedder.hpp"
#include "swiftmem/adapters/http.hpp"
#include "swiftmem/adapters/text.hpp"
#include "swiftmem/tag.hpp"
#include "swiftmem/tag_dag.hpp"
#include "swiftmem/vector_math.hpp"

namespace swiftmem::adapters {

struct TagRelation {
    TagId parent;
    TagId child;

    friend bool operator==(const TagRelation&, const TagRelation&) = default;
};

struct TagProposal {
    std::vector<TagId> tags;
    std::vector<TagRelation> relations; // both endpoints always in `tags`

    friend bool operator==(const TagProposal&, const TagProposal&) = default;
};

/// System prompt sent to the chat endpoint. The model must answer with the
/// JSON object described at its end.
inline constexpr std::string_view kTagPrompt =
    R"(You are a semantic tag extraction assistant.
Your task is to:

1. Extract 3-8 meaningful tags that capture the main topics, themes, and contexts

2. Identify hierarchical relationships between these tags (parent-child)

Guidelines for tags:

- Tags should be lowercase, single words or short phrases (max 3 words)

- Focus on: topics, activities, locations, entities, emotions, intents

- Prioritize specific over generic (e.g., 'python_programming' over 'technology')

- Use underscores for multi-word tags (e.g., 'machine_learning')

- Avoid overly broad tags like 'conversation' or 'chat'

Guidelines for relations:

- parent tag = broader/more abstract concept

- child tag = more specific concept

- Only include relations that are clear from the conversation

- Examples:

  * parent: 'work', child: 'programming'

  * parent: 'lgbtq', child: 'transgender_story'

  * parent: 'food', child: 'italian_cuisine'

  * parent: 'identity', child: 'self_acceptance'

Return ONLY a JSON object:
{
  "tags": ["tag1", "tag2", "tag3", ...],
  "relations": [
    {"parent": "broader_tag", "child": "specific_tag"},
    ...
  ]
}
If no clear hierarchical relations exist, return an empty 'relations' array.)";

/// Validates a decoded {"tags": [...], "relations": [...]} object: tags are
/// normalised (dropping any that stay invalid, e.g. more than three words)
/// and deduplicated; relations with an endpoint outside the tag list, or
/// pointing at themselves, are dropped.
inline TagProposal validate_proposal(const nlohmann::json& obj) {
    TagProposal out;
    if (!obj.is_object()) return out;
    if (auto it = obj.find("tags"); it != obj.end() && it->is_array()) {
        for (const auto& t : *it) {
            if (!t.is_string()) continue;
            auto norm = normalize_tag(t.get<std::string>());
            if (!norm) continue;
            TagId id(*norm);
            if (std::find(out.tags.begin(), out.tags.end(), id) == out.tags.end()) out.tags.push_back(std::move(id));
        }
    }
    auto known = [&](const std::optional<std::string>& s) {
        return s && std::find(out.tags.begin(), out.tags.end(), TagId(*s)) != out.tags.end();
    };
    if (auto it = obj.find("relations"); it != obj.end() && it->is_array()) {
        for (const auto& r : *it) {
            if (!r.is_object() || !r.contains("parent") || !r.contains("child")) continue;
            if (!r["parent"].is_string() || !r["child"].is_string()) continue;
            auto p = normalize_tag(r["parent"].get<std::string>());
            auto c = normalize_tag(r["child"].get<std::string>());
            if (!known(p) || !known(c) || *p == *c) continue;
            TagRelation rel{TagId(*p), TagId(*c)};
            if (std::find(out.relations.begin(), out.relations.end(), rel) == out.relations.end())
                out.relations.push_back(std::move(rel));
        }
    }
    return out;
}

/// Pulls the first top-level JSON object out of model output (which may be
/// wrapped in a code fence or prose) and validates it.
inline TagProposal parse_tag_response(std::string_view reply) {
    const auto open = reply.find('{');
    const auto close = reply.rfind('}');
    if (open == std::string_view::npos || close == std::string_view::npos || close < open)
        throw Error(ErrorCode::InvalidArgument, "tagger reply contains no JSON object");
    try {
        return validate_proposal(nlohmann::json::parse(reply.substr(open, close - open + 1)));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("tagger reply is not valid JSON: ") + e.what());
    }
}

class Tagger {
public:
    virtual ~Tagger() = default;
    virtual TagProposal generate_tags(std::string_view content) = 0;
};

/// Frequency-based keyword tagger.
///
/// Tokens are lowercased alphanumeric runs with stopwords and one-letter
/// tokens removed. Candidates are those unigrams plus bigrams of two kept
/// tokens adjacent in the original text. The eight most frequent candidates
/// win (ties lexicographic); each selected bigram `a_b` whose head `a` is
/// also selected yields the relation a -> a_b.
class OfflineTagger final : public Tagger {
public:
    static constexpr std::size_t kMaxTags = 8;

    TagProposal generate_tags(std::string_view content) override {
        if (content.empty()) throw Error(ErrorCode::EmptyContent, "cannot tag empty content");
        return tag(content);
    }

    static TagProposal tag(std::string_view content) {
        const auto tokens = text::tokenize(content);
        auto keep = [](const std::string& t) { return t.size() >= 2 && !text::is_stopword(t); };
        std::map<std::string, std::size_t> counts;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (!keep(tokens[i])) continue;
            ++counts[tokens[i]];
            if (i + 1 < tokens.size() && keep(tokens[i + 1]) && tokens[i] != tokens[i + 1])
                ++counts[tokens[i] + "_" + tokens[i + 1]];
        }
        std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
        std::stable_sort(ranked.begin(), ranked.end(),
                         [](const auto& a, const auto& b) { return a.second > b.second; });
        if (ranked.size() > kMaxTags) ranked.resize(kMaxTags);

        TagProposal out;
        for (const auto& [t, _] : ranked) out.tags.emplace_back(t);
        for (const auto& tag : out.tags) {
            const auto us = tag.str().find('_');
            if (us == std::string::npos) continue;
            TagId head(tag.str().substr(0, us));
            if (std::find(out.tags.begin(), out.tags.end(), head) != out.tags.end())
                out.relations.push_back({head, tag});
        }
        return out;
    }
};

/// Used when the LLM path fails: offline keyword tags plus up to three
/// existing DAG tags whose embedding is at least `min_similarity` cosine to
/// the content embedding.
class EmbeddingFallbackTagger final : public Tagger {
public:
    static constexpr std::size_t kMaxNeighbours = 3;

    EmbeddingFallbackTagger(const Embedder* embedder, const TagDag* dag, double min_similarity)
        : embedder_(embedder), dag_(dag), min_similarity_(min_similarity) {}

    TagProposal generate_tags(std::string_view content) override {
        if (content.empty()) throw Error(ErrorCode::EmptyContent, "cannot tag empty content");
        TagProposal out = OfflineTagger::tag(content);
        if (!embedder_ || !dag_ || dag_->size() == 0) return out;
        const auto q = embedder_->embed(content);
        std::vector<std::pair<double, TagId>> near;
        for (const auto& node : dag_->nodes()) {
            const double s = cosine(q, node.embedding);
            if (s >= min_similarity_) near.emplace_back(s, node.tag);
        }
        std::sort(near.begin(), near.end(), [](const auto& a, const auto& b) {
            return a.first != b.first ? a.first > b.first : a.second < b.second;
        });
        for (std::size_t i = 0; i < near.size() && i < kMaxNeighbours; ++i)
            if (std::find(out.tags.begin(), out.tags.end(), near[i].second) == out.tags.end())
                out.tags.push_back(near[i].second);
        return out;
    }

    void bind(const Embedder* embedder, const TagDag* dag) {
        embedder_ = embedder;
        dag_ = dag;
    }

private:
    const Embedder* embedder_;
    const TagDag* dag_;
    double min_similarity_;
};

/// Chat-completion client. Any failure (transport, status, malformed reply)
/// is downgraded to a warning and the fallback tagger's answer.
class HttpTagger final : public Tagger {
public:
    using WarningSink = std::function<void(const std::string&)>;

    HttpTagger(RemoteSpec spec, std::unique_ptr<Tagger> fallback, WarningSink warn = default_warning_sink())
        : spec_(std::move(spec)), fallback_(std::move(fallback)), warn_(std::move(warn)) {
        if (spec_.endpoint.empty()) throw Error(ErrorCode::InvalidArgument, "remote tagger requires an endpoint");
        if (!fallback_) fallback_ = std::make_unique<OfflineTagger>();
    }

    static nlohmann::json build_request(const std::string& model, std::string_view content) {
        return {{"model", model},
                {"temperature", 0},
                {"messages",
                 nlohmann::json::array({{{"role", "system"}, {"content", std::string(kTagPrompt)}},
                                        {{"role", "user"}, {"content", std::string(content)}}})}};
    }

    TagProposal generate_tags(std::string_view content) override {
        if (content.empty()) throw Error(ErrorCode::EmptyContent, "cannot tag empty content");
        try {
            const auto reply = post_json(spec_, build_request(spec_.model, content));
            if (reply.contains("choices") && reply["choices"].is_array() && !reply["choices"].empty()) {
                const auto& msg = reply["choices"][0]["message"]["content"];
                if (msg.is_string()) return parse_tag_response(msg.get<std::string>());
            }
            if (reply.contains("tags")) return validate_proposal(reply);
            throw Error(ErrorCode::InvalidArgument, "reply has neither choices nor tags");
        } catch (const Error& e) {
            ++fallbacks_;
            warn_("tagger falling back: " + std::string(e.what()));
            return fallback_->generate_tags(content);
        } catch (const nlohmann::json::exception& e) {
            ++fallbacks_;
            warn_("tagger falling back: " + std::string(e.what()));
            return fallback_->generate_tags(content);
        }
    }

    std::size_t fallbacks() const noexcept { return fallbacks_; }
    Tagger& fallback() noexcept { return *fallback_; }

    static WarningSink default_warning_sink() {
        return [](const std::string& msg) { std::clog << "warning: " << msg << '\n'; };
    }

private:
    RemoteSpec spec_;
    std::unique_ptr<Tagger> fallback_;
    WarningSink warn_;
    std::size_t fallbacks_ = 0;
};

} // namespace swiftmem::adapters
