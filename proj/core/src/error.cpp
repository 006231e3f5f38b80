#include "cvmask/error.hpp"

namespace cvmask {

std::string_view error_code_name(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::UnsupportedLanguage: return "UnsupportedLanguage";
    case ErrorCode::EmptySource: return "EmptySource";
    case ErrorCode::UnknownNode: return "UnknownNode";
    case ErrorCode::NotAStatement: return "NotAStatement";
    case ErrorCode::MismatchedSnippet: return "MismatchedSnippet";
    case ErrorCode::MaskMismatch: return "MaskMismatch";
    case ErrorCode::MapMismatch: return "MapMismatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::MissingManifest: return "MissingManifest";
    case ErrorCode::FormatError: return "FormatError";
    }
    return "Unknown";
}

} // namespace cvmask
