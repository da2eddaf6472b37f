#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace swiftmem::text {

/// FNV-1a over a byte stream, started from a seeded offset basis and
/// finished with the splitmix64 mixer. Stable across platforms.
class Hasher {
public:
    static constexpr std::uint64_t kDefaultSeed = 0x5eed'5eed'0000'0001ULL;

    explicit Hasher(std::uint64_t seed = kDefaultSeed) noexcept : h_(0xcbf29ce484222325ULL ^ seed) {}

    void update(std::string_view bytes) noexcept {
        for (unsigned char c : bytes) {
            h_ ^= c;
            h_ *= 0x100000001b3ULL;
        }
    }

    std::uint64_t digest() const noexcept {
        std::uint64_t h = h_ + 0x9e3779b97f4a7c15ULL;
        h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
        h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
        return h ^ (h >> 31);
    }

private:
    std::uint64_t h_;
};

inline std::uint64_t hash64(std::string_view s, std::uint64_t seed = Hasher::kDefaultSeed) noexcept {
    Hasher h(seed);
    h.update(s);
    return h.digest();
}

/// Lowercased ASCII alphanumeric runs. Apostrophes are deleted ("dog's" ->
/// "dogs"); every other non-alphanumeric byte separates tokens.
inline std::vector<std::string> tokenize(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        const auto c = static_cast<unsigned char>(ch);
        if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) {
            cur.push_back(ch);
        } else if (c >= 'A' && c <= 'Z') {
            cur.push_back(static_cast<char>(c - 'A' + 'a'));
        } else if (c == '\'') {
            continue;
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

// Version 1 of the stopword list. Changing it changes offline tagger output,
// so bump the version and regenerate the golden fixtures together.
inline constexpr int kStopwordListVersion = 1;
inline constexpr std::string_view kStopwords[] = {
    "a",       "about",   "above",  "after",   "again",   "against", "all",    "also",    "am",     "an",
    "and",     "any",     "are",    "as",      "at",      "be",      "because", "been",   "before", "being",
    "below",   "between", "both",   "but",     "by",      "can",     "chat",    "conversation", "could", "did",
    "do",      "does",    "doing",  "dont",    "down",    "during",  "each",    "even",   "every",  "few",
    "for",     "from",    "further", "get",    "got",     "had",     "has",     "have",   "having", "he",
    "her",     "here",    "hers",   "herself", "him",     "himself", "his",     "how",    "i",      "if",
    "im",      "in",      "into",   "is",      "it",      "its",     "itself",  "ive",    "just",   "like",
    "me",      "more",    "most",   "my",      "myself",  "no",      "nor",     "not",    "now",    "of",
    "off",     "oh",      "on",     "once",    "only",    "or",      "other",   "our",    "ours",   "out",
    "over",    "own",     "really", "same",    "she",     "should",  "so",      "some",   "such",   "than",
    "that",    "thats",   "the",    "their",   "them",    "then",    "there",   "these",  "they",   "this",
    "those",   "through", "to",     "too",     "under",   "until",   "up",      "us",     "very",   "was",
    "we",      "well",    "were",   "what",    "when",    "where",   "which",   "while",  "who",    "why",
    "will",    "with",    "would",  "yeah",    "you",     "your",
};

inline bool is_stopword(std::string_view w) noexcept {
    for (auto s : kStopwords)
        if (s == w) return true;
    return false;
}

} // namespace swiftmem::text
