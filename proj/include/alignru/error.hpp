#ifndef ALIGNRU_ERROR_HPP
#define ALIGNRU_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace alignru {

enum class ErrorCode {
    EmptyInput,
    EmptyContext,
    EmptyClaim,
    TokenizerNotLoaded,
    ModelLoadFailure,
    InferenceFailure,
    FileNotFound,
    MalformedRecord,
    LabelOutOfRange,
    LengthMismatch,
    SingleClassAUC,
    ZeroVariance,
    TaskMismatch,
    InvalidArgument,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::EmptyContext: return "EmptyContext";
        case ErrorCode::EmptyClaim: return "EmptyClaim";
        case ErrorCode::TokenizerNotLoaded: return "TokenizerNotLoaded";
        case ErrorCode::ModelLoadFailure: return "ModelLoadFailure";
        case ErrorCode::InferenceFailure: return "InferenceFailure";
        case ErrorCode::FileNotFound: return "FileNotFound";
        case ErrorCode::MalformedRecord: return "MalformedRecord";
        case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::SingleClassAUC: return "SingleClassAUC";
        case ErrorCode::ZeroVariance: return "ZeroVariance";
        case ErrorCode::TaskMismatch: return "TaskMismatch";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

// Backend-side failures are distinguished from input failures so the CLI
// can map them to different exit codes.
inline bool is_backend_error(ErrorCode code) {
    return code == ErrorCode::ModelLoadFailure || code == ErrorCode::InferenceFailure ||
           code == ErrorCode::TokenizerNotLoaded;
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), message_(message) {}

    ErrorCode code() const noexcept { return code_; }
    // The message without the error-code prefix.
    const std::string& message() const noexcept { return message_; }

private:
    ErrorCode code_;
    std::string message_;
};

// Raised by batch operations; wraps the first failing item.
class BatchItemError : public Error {
public:
    BatchItemError(std::size_t index, const Error& cause)
        : Error(cause.code(), "item " + std::to_string(index) + ": " + cause.message()), index_(index) {}

    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

// Dataset parse failures carry the 1-based line number.
class RecordError : public Error {
public:
    RecordError(ErrorCode code, std::size_t line, const std::string& reason)
        : Error(code, "line " + std::to_string(line) + ": " + reason), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace alignru

#endif  // ALIGNRU_ERROR_HPP
