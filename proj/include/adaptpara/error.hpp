#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace adaptpara {

enum class ErrorCode {
  kEmptyText,
  kTextTooLarge,
  kFileNotFound,
  kNoValidRules,
  kDimensionMismatch,
  kInvalidVector,
  kNoProviders,
  kEmptyCorpus,
  kSpanMisaligned,
  kSpanOutOfRange,
  kSingleClassData,
  kNoExamples,
  kDegenerateFeatures,
  kModelMissing,
  kNoPairs,
  kFeatureOrderMismatch,
  kOutOfOrderRetrain,
  kNothingToTrain,
  kStoreUnavailable,
  kInvalidEvent,
  kUnknownUndoTarget,
  kIoFailure,
  kCorruptLine,
  kParseError,
  kEmptyDump,
  kConfigError,
  kUnknownRequestId,
  kMalformedJson,
  kSchemaError,
  kUnauthorized,
  kNotFound,
  kServiceUnreachable,
};

// Stable machine-readable name, used in API error bodies and CLI output.
std::string_view ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace adaptpara
