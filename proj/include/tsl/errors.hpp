#pragma once

#include <stdexcept>
#include <string>

namespace tsl {

// Every failure in the library carries one of these codes so callers can
// react programmatically instead of parsing messages.
enum class ErrorCode {
    // domain model
    InvalidInterval,
    InvalidScore,
    LabelOutOfRange,
    EventExceedsDuration,
    InvalidVocabulary,
    // set / dataset level
    VideoIdMismatch,
    DuplicateVideoId,
    UnknownVideoId,
    EmptyGroundTruth,
    NoGroundTruth,
    // configuration
    InvalidConfig,
    WeightCountMismatch,
    // feature pipeline
    EmptyInput,
    FrameCountMismatch,
    // file formats
    ParseError,
    ValidationError,
    MixedScorePresence,
    BadMagic,
    VersionUnsupported,
    LengthMismatch,
    IoError,
};

inline const char* error_code_name(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::InvalidInterval: return "InvalidInterval";
    case ErrorCode::InvalidScore: return "InvalidScore";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::EventExceedsDuration: return "EventExceedsDuration";
    case ErrorCode::InvalidVocabulary: return "InvalidVocabulary";
    case ErrorCode::VideoIdMismatch: return "VideoIdMismatch";
    case ErrorCode::DuplicateVideoId: return "DuplicateVideoId";
    case ErrorCode::UnknownVideoId: return "UnknownVideoId";
    case ErrorCode::EmptyGroundTruth: return "EmptyGroundTruth";
    case ErrorCode::NoGroundTruth: return "NoGroundTruth";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::WeightCountMismatch: return "WeightCountMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::FrameCountMismatch: return "FrameCountMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::MixedScorePresence: return "MixedScorePresence";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::VersionUnsupported: return "VersionUnsupported";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

} // namespace tsl
