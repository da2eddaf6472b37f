#pragma once

#include <cctype>
#include <compare>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>

#include "swiftmem/error.hpp"

namespace swiftmem {

inline constexpr std::size_t kMaxTagWords = 3;

/// True iff `s` matches [a-z0-9]+(_[a-z0-9]+){0,2}.
inline bool is_valid_tag(std::string_view s) noexcept {
    if (s.empty()) return false;
    std::size_t words = 1;
    bool prev_underscore = true; // rejects a leading underscore
    for (char c : s) {
        if (c == '_') {
            if (prev_underscore) return false;
            prev_underscore = true;
            ++words;
        } else if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) {
            prev_underscore = false;
        } else {
            return false;
        }
    }
    return !prev_underscore && words <= kMaxTagWords;
}

/// Best-effort repair of free-form tag text: lowercases, maps whitespace and
/// hyphens to underscores, drops other punctuation. Returns nullopt when the
/// result is still not a valid tag (empty, or more than three words).
inline std::optional<std::string> normalize_tag(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (char ch : raw) {
        auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c) && c < 0x80) {
            out.push_back(static_cast<char>(std::tolower(c)));
        } else if (c == ' ' || c == '_' || c == '-' || c == '\t') {
            if (!out.empty() && out.back() != '_') out.push_back('_');
        }
    }
    while (!out.empty() && out.back() == '_') out.pop_back();
    if (!is_valid_tag(out)) return std::nullopt;
    return out;
}

/// A validated tag identifier.
class TagId {
public:
    TagId() = default;
    explicit TagId(std::string value) : value_(std::move(value)) {
        if (!is_valid_tag(value_)) throw Error(ErrorCode::InvalidTag, "'" + value_ + "'");
    }
    explicit TagId(std::string_view value) : TagId(std::string(value)) {}
    explicit TagId(const char* value) : TagId(std::string(value)) {}

    const std::string& str() const noexcept { return value_; }

    /// Tag text with underscores turned back into spaces, used to embed tags.
    std::string as_phrase() const {
        std::string s = value_;
        for (char& c : s)
            if (c == '_') c = ' ';
        return s;
    }

    friend auto operator<=>(const TagId&, const TagId&) = default;
    friend bool operator==(const TagId&, const TagId&) = default;
    friend std::ostream& operator<<(std::ostream& os, const TagId& t) { return os << t.value_; }

private:
    std::string value_;
};

} // namespace swiftmem

template <>
struct std::hash<swiftmem::TagId> {
    std::size_t operator()(const swiftmem::TagId& t) const noexcept { return std::hash<std::string>{}(t.str()); }
};
