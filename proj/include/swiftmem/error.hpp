#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace swiftmem {

enum class ErrorCode {
    DimensionMismatch,
    InvalidTag,
    NotFound,
    IoError,
    CorruptSnapshot,
    DuplicateEpisode,
    UnknownTag,
    SelfLoop,
    ZeroNorm,
    EmptyContent,
    EmptyText,
    RemoteUnavailable,
    EmbedderFailure,
    InvalidArgument,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidTag: return "InvalidTag";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::CorruptSnapshot: return "CorruptSnapshot";
    case ErrorCode::DuplicateEpisode: return "DuplicateEpisode";
    case ErrorCode::UnknownTag: return "UnknownTag";
    case ErrorCode::SelfLoop: return "SelfLoop";
    case ErrorCode::ZeroNorm: return "ZeroNorm";
    case ErrorCode::EmptyContent: return "EmptyContent";
    case ErrorCode::EmptyText: return "EmptyText";
    case ErrorCode::RemoteUnavailable: return "RemoteUnavailable";
    case ErrorCode::EmbedderFailure: return "EmbedderFailure";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
/// Snapshot parse failures also carry the 1-based line number.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    Error(ErrorCode code, const std::string& message, std::size_t line)
        : std::runtime_error(std::string(to_string(code)) + " at line " + std::to_string(line) + ": " +
                             message),
          code_(code), line_(line) {}

    ErrorCode code() const noexcept { return code_; }
    std::optional<std::size_t> line() const noexcept { return line_; }

private:
    ErrorCode code_;
    std::optional<std::size_t> line_;
};

} // namespace swiftmem
