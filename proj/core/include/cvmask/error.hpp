#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cvmask {

enum class ErrorCode {
    UnsupportedLanguage,
    EmptySource,
    UnknownNode,
    NotAStatement,
    MismatchedSnippet,
    MaskMismatch,
    MapMismatch,
    DimensionMismatch,
    EmptyInput,
    LengthMismatch,
    UnknownLabel,
    ConfigError,
    IoError,
    MissingManifest,
    FormatError,
};

std::string_view error_code_name(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so the
/// CLI can map it onto an exit status without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace cvmask
