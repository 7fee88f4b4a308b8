#ifndef EMOTTS_EVAL_INTELLIGIBILITY_H_
#define EMOTTS_EVAL_INTELLIGIBILITY_H_

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "emotts/eval/asr.h"
#include "emotts/eval/stats.h"

namespace emotts::eval {

struct SentenceScore {
  std::string reference;
  std::string hypothesis;
  double accuracy = 0.0;
  bool transport_error = false;  // scored 0
  std::string error;
};

struct WordAccuracyResult {
  std::vector<SentenceScore> per_sentence;
  double mean = 0.0;
  double ci95 = 0.0;
  size_t failures = 0;
};

// Throws LengthMismatch when the lists differ in size.
WordAccuracyResult IntelligibilityEval(const std::vector<std::string>& sentences,
                                       const std::vector<std::filesystem::path>& wavs,
                                       AsrAdapter& asr, CiMethod method = CiMethod::kNormal);

// One sentence per line; blank lines are skipped.
std::vector<std::string> LoadSentences(const std::filesystem::path& path);

// `index,reference,hypothesis,accuracy,transport_error`
std::string WordAccuracyCsv(const WordAccuracyResult& result);

// Labelled rows in the "m ± h" form with three decimals.
std::string WordAccuracyTable(
    const std::vector<std::pair<std::string, WordAccuracyResult>>& systems);

}  // namespace emotts::eval

#endif  // EMOTTS_EVAL_INTELLIGIBILITY_H_
