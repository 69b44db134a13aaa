#include "adaptpara/error.hpp"

namespace adaptpara {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyText: return "EMPTY_TEXT";
    case ErrorCode::kTextTooLarge: return "TEXT_TOO_LARGE";
    case ErrorCode::kFileNotFound: return "FILE_NOT_FOUND";
    case ErrorCode::kNoValidRules: return "NO_VALID_RULES";
    case ErrorCode::kDimensionMismatch: return "DIMENSION_MISMATCH";
    case ErrorCode::kInvalidVector: return "INVALID_VECTOR";
    case ErrorCode::kNoProviders: return "NO_PROVIDERS";
    case ErrorCode::kEmptyCorpus: return "EMPTY_CORPUS";
    case ErrorCode::kSpanMisaligned: return "SPAN_MISALIGNED";
    case ErrorCode::kSpanOutOfRange: return "SPAN_OUT_OF_RANGE";
    case ErrorCode::kSingleClassData: return "SINGLE_CLASS_DATA";
    case ErrorCode::kNoExamples: return "NO_EXAMPLES";
    case ErrorCode::kDegenerateFeatures: return "DEGENERATE_FEATURES";
    case ErrorCode::kModelMissing: return "MODEL_MISSING";
    case ErrorCode::kNoPairs: return "NO_PAIRS";
    case ErrorCode::kFeatureOrderMismatch: return "FEATURE_ORDER_MISMATCH";
    case ErrorCode::kOutOfOrderRetrain: return "OUT_OF_ORDER_RETRAIN";
    case ErrorCode::kNothingToTrain: return "NOTHING_TO_TRAIN";
    case ErrorCode::kStoreUnavailable: return "STORE_UNAVAILABLE";
    case ErrorCode::kInvalidEvent: return "INVALID_EVENT";
    case ErrorCode::kUnknownUndoTarget: return "UNKNOWN_UNDO_TARGET";
    case ErrorCode::kIoFailure: return "IO_FAILURE";
    case ErrorCode::kCorruptLine: return "CORRUPT_LINE";
    case ErrorCode::kParseError: return "PARSE_ERROR";
    case ErrorCode::kEmptyDump: return "EMPTY_DUMP";
    case ErrorCode::kConfigError: return "CONFIG_ERROR";
    case ErrorCode::kUnknownRequestId: return "UNKNOWN_REQUEST_ID";
    case ErrorCode::kMalformedJson: return "MALFORMED_JSON";
    case ErrorCode::kSchemaError: return "SCHEMA_ERROR";
    case ErrorCode::kUnauthorized: return "UNAUTHORIZED";
    case ErrorCode::kNotFound: return "NOT_FOUND";
    case ErrorCode::kServiceUnreachable: return "SERVICE_UNREACHABLE";
  }
  return "UNKNOWN";
}

}  // namespace adaptpara
