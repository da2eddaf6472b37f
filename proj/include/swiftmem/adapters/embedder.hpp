#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "swiftmem/adapters/http.hpp"
#include "swiftmem/adapters/text.hpp"
#include "swiftmem/error.hpp"
#include "swiftmem/types.hpp"
#include "swiftmem/vector_math.hpp"

namespace swiftmem::adapters {

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::size_t dim() const noexcept = 0;
    /// Unit-length embedding of nonempty `text`.
    virtual Embedding embed(std::string_view text) const = 0;
};

/// Signed feature hashing of token unigrams (weight 1) and adjacent bigrams
/// (weight 0.5) into `dim` buckets, then L2 normalisation. Pure and
/// platform-independent.
class OfflineEmbedder final : public Embedder {
public:
    static constexpr double kUnigramWeight = 1.0;
    static constexpr double kBigramWeight = 0.5;

    explicit OfflineEmbedder(std::size_t dim) : dim_(dim) {
        if (dim == 0) throw Error(ErrorCode::InvalidArgument, "embedding dimension must be >= 1");
    }

    std::size_t dim() const noexcept override { return dim_; }

    Embedding embed(std::string_view text) const override {
        if (text.empty()) throw Error(ErrorCode::EmptyText, "cannot embed empty text");
        std::vector<double> acc(dim_, 0.0);
        const auto tokens = text::tokenize(text);
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            add_feature(acc, "u:" + tokens[i], kUnigramWeight);
            if (i + 1 < tokens.size()) add_feature(acc, "b:" + tokens[i] + ' ' + tokens[i + 1], kBigramWeight);
        }
        Embedding out(acc.begin(), acc.end());
        if (!l2_normalize(out)) {
            // no tokens, or every feature cancelled: fall back to the raw bytes
            std::fill(acc.begin(), acc.end(), 0.0);
            add_feature(acc, "r:" + std::string(text), 1.0);
            out.assign(acc.begin(), acc.end());
            l2_normalize(out);
        }
        return out;
    }

private:
    void add_feature(std::vector<double>& acc, const std::string& feature, double weight) const {
        const auto h = text::hash64(feature);
        const auto bucket = static_cast<std::size_t>(h % dim_);
        acc[bucket] += (h >> 63) ? -weight : weight;
    }

    std::size_t dim_;
};

/// Embedding endpoint client. Sends {"model", "input"} and accepts either
/// {"data":[{"embedding":[...]}]} or {"embedding":[...]} back.
class HttpEmbedder final : public Embedder {
public:
    HttpEmbedder(RemoteSpec spec, std::size_t dim) : spec_(std::move(spec)), dim_(dim) {
        if (spec_.endpoint.empty()) throw Error(ErrorCode::InvalidArgument, "remote embedder requires an endpoint");
    }

    std::size_t dim() const noexcept override { return dim_; }

    Embedding embed(std::string_view text) const override {
        if (text.empty()) throw Error(ErrorCode::EmptyText, "cannot embed empty text");
        const auto reply = post_json(spec_, {{"model", spec_.model}, {"input", std::string(text)}});
        const nlohmann::json* vec = nullptr;
        if (reply.contains("data") && reply["data"].is_array() && !reply["data"].empty() &&
            reply["data"][0].contains("embedding"))
            vec = &reply["data"][0]["embedding"];
        else if (reply.contains("embedding"))
            vec = &reply["embedding"];
        if (!vec || !vec->is_array()) throw Error(ErrorCode::RemoteUnavailable, "reply carries no embedding");
        Embedding out;
        out.reserve(vec->size());
        for (const auto& x : *vec) {
            if (!x.is_number()) throw Error(ErrorCode::RemoteUnavailable, "non-numeric embedding component");
            out.push_back(x.get<float>());
        }
        if (out.size() != dim_)
            throw Error(ErrorCode::DimensionMismatch,
                        "remote embedding length " + std::to_string(out.size()) + ", expected " + std::to_string(dim_));
        if (!l2_normalize(out)) throw Error(ErrorCode::ZeroNorm, "remote embedding is zero");
        return out;
    }

private:
    RemoteSpec spec_;
    std::size_t dim_;
};

inline std::unique_ptr<Embedder> make_embedder(const RemoteSpec& spec, std::size_t dim) {
    if (spec.mode == ProviderMode::Remote) return std::make_unique<HttpEmbedder>(spec, dim);
    return std::make_unique<OfflineEmbedder>(dim);
}

} // namespace swiftmem::adapters
