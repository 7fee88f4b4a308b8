#ifndef EMOTTS_EVAL_WORD_ACCURACY_H_
#define EMOTTS_EVAL_WORD_ACCURACY_H_

#include <string>
#include <string_view>
#include <vector>

namespace emotts::eval {

// Splits on whitespace, case-folds and removes punctuation (apostrophes
// included, so "don't" becomes "dont"). Tokens left empty are dropped.
std::vector<std::string> TokenizeWords(std::string_view text);

struct WordEdits {
  int substitutions = 0;
  int deletions = 0;
  int insertions = 0;
  int total() const { return substitutions + deletions + insertions; }
};

// Minimum-edit alignment of hyp against ref.
WordEdits AlignWords(const std::vector<std::string>& ref, const std::vector<std::string>& hyp);

// max(0, (N - S - D - I) / N) over tokenized words. Throws EmptyReference.
double WordAccuracy(std::string_view ref, std::string_view hyp);

}  // namespace emotts::eval

#endif  // EMOTTS_EVAL_WORD_ACCURACY_H_
