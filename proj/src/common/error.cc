#include "emotts/common/error.h"

namespace emotts {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissingFile: return "MissingFile";
    case ErrorCode::kUndecodableAudio: return "UndecodableAudio";
    case ErrorCode::kEmptyAfterTrim: return "EmptyAfterTrim";
    case ErrorCode::kRateMismatch: return "RateMismatch";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kEmptyAfterNormalization: return "EmptyAfterNormalization";
    case ErrorCode::kUnencodableSymbol: return "UnencodableSymbol";
    case ErrorCode::kMissingIndex: return "MissingIndex";
    case ErrorCode::kMissingRoot: return "MissingRoot";
    case ErrorCode::kUnknownEmotion: return "UnknownEmotion";
    case ErrorCode::kHoldoutTooLarge: return "HoldoutTooLarge";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kEmptyBatch: return "EmptyBatch";
    case ErrorCode::kEmptyManifest: return "EmptyManifest";
    case ErrorCode::kConfigMismatch: return "ConfigMismatch";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kNothingTrainable: return "NothingTrainable";
    case ErrorCode::kEmptyText: return "EmptyText";
    case ErrorCode::kNoAlignment: return "NoAlignment";
    case ErrorCode::kUnwritableOutput: return "UnwritableOutput";
    case ErrorCode::kEmptyReference: return "EmptyReference";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kInvalidScore: return "InvalidScore";
    case ErrorCode::kEmptySurvey: return "EmptySurvey";
    case ErrorCode::kUnknownSession: return "UnknownSession";
    case ErrorCode::kDuplicateRating: return "DuplicateRating";
    case ErrorCode::kUnknownStimulus: return "UnknownStimulus";
    case ErrorCode::kAsrTransport: return "AsrTransport";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

}  // namespace emotts
