#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace grl {

enum class ErrorCode {
    GroupTooSmall,
    TaskGroundTruthMismatch,
    EmptyGroundTruth,
    NonFiniteReward,
    SupportMismatch,
    TokenOutOfVocabulary,
    EmbeddingServiceUnavailable,
    DimensionMismatch,
    InvalidArgument,
    NumericalFailure,
};

/// Stable identifier for an error code, e.g. "GroupTooSmall".
std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
          code_(code),
          detail_(message) {}

    ErrorCode code() const noexcept { return code_; }
    /// The message without the code-name prefix.
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
};

} // namespace grl
