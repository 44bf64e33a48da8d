#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace kernforge {

enum class ErrorCode {
    NotUtf8,
    RecordWidthMismatch,
    MixedRecordKind,
    UnknownExclusiveInterp,
    LexError,
    NoDuration,
    MixedCasePitch,
    NoTimeSignature,
    NormalizationConflict,
    EmptyDocument,
    EmptyCorpus,
    UnknownId,
    IllegalAdvance,
    EmptyReference,
    Overflow,
    BadVocab,
    Io,
};

std::string_view to_string(ErrorCode code);

// Every recoverable failure in the library is reported through this type.
// `line` is 1-based when the error is tied to a record, 0 otherwise.
class KernError : public std::runtime_error {
public:
    KernError(ErrorCode code, std::string message, std::size_t line = 0)
        : std::runtime_error(std::move(message)), code_(code), line_(line) {}

    ErrorCode code() const noexcept { return code_; }
    std::size_t line() const noexcept { return line_; }

private:
    ErrorCode code_;
    std::size_t line_;
};

}  // namespace kernforge
