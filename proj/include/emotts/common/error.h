#ifndef EMOTTS_COMMON_ERROR_H_
#define EMOTTS_COMMON_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace emotts {

// Every failure the toolkit reports carries one of these codes so callers
// (the CLI in particular) can map them to exit statuses without parsing text.
enum class ErrorCode {
  kMissingFile,
  kUndecodableAudio,
  kEmptyAfterTrim,
  kRateMismatch,
  kInvalidConfig,
  kEmptyAfterNormalization,
  kUnencodableSymbol,
  kMissingIndex,
  kMissingRoot,
  kUnknownEmotion,
  kHoldoutTooLarge,
  kShapeMismatch,
  kEmptyBatch,
  kEmptyManifest,
  kConfigMismatch,
  kNonFiniteLoss,
  kNothingTrainable,
  kEmptyText,
  kNoAlignment,
  kUnwritableOutput,
  kEmptyReference,
  kLengthMismatch,
  kEmptyInput,
  kInvalidScore,
  kEmptySurvey,
  kUnknownSession,
  kDuplicateRating,
  kUnknownStimulus,
  kAsrTransport,
  kIo,
};

std::string_view ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace emotts

#endif  // EMOTTS_COMMON_ERROR_H_
