#include "emotts/eval/word_accuracy.h"

#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <algorithm>

#include "emotts/common/error.h"

namespace emotts::eval {

std::vector<std::string> TokenizeWords(std::string_view text) {
  icu::UnicodeString s = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  s.foldCase();
  std::vector<std::string> out;
  icu::UnicodeString word;
  auto flush = [&] {
    if (!word.isEmpty()) {
      std::string utf8;
      word.toUTF8String(utf8);
      out.push_back(std::move(utf8));
      word.remove();
    }
  };
  for (int32_t i = 0; i < s.length();) {
    const UChar32 c = s.char32At(i);
    i += U16_LENGTH(c);
    if (u_isUWhiteSpace(c)) {
      flush();
    } else if (!u_ispunct(c)) {
      word.append(c);
    }
  }
  flush();
  return out;
}

WordEdits AlignWords(const std::vector<std::string>& ref, const std::vector<std::string>& hyp) {
  const size_t n = ref.size();
  const size_t m = hyp.size();
  // cost[i][j]: edits aligning ref[0, i) with hyp[0, j).
  std::vector<std::vector<int>> cost(n + 1, std::vector<int>(m + 1, 0));
  for (size_t i = 0; i <= n; ++i) cost[i][0] = static_cast<int>(i);
  for (size_t j = 0; j <= m; ++j) cost[0][j] = static_cast<int>(j);
  for (size_t i = 1; i <= n; ++i) {
    for (size_t j = 1; j <= m; ++j) {
      const int sub = cost[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      cost[i][j] = std::min({sub, cost[i - 1][j] + 1, cost[i][j - 1] + 1});
    }
  }
  WordEdits e;
  size_t i = n;
  size_t j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 &&
        cost[i][j] == cost[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1)) {
      if (ref[i - 1] != hyp[j - 1]) ++e.substitutions;
      --i;
      --j;
    } else if (i > 0 && cost[i][j] == cost[i - 1][j] + 1) {
      ++e.deletions;
      --i;
    } else {
      ++e.insertions;
      --j;
    }
  }
  return e;
}

double WordAccuracy(std::string_view ref, std::string_view hyp) {
  const auto r = TokenizeWords(ref);
  if (r.empty()) throw Error(ErrorCode::kEmptyReference, "reference has no words");
  const auto h = TokenizeWords(hyp);
  const double n = static_cast<double>(r.size());
  return std::max(0.0, (n - AlignWords(r, h).total()) / n);
}

}  // namespace emotts::eval
