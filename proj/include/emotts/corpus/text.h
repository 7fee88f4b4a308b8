#ifndef EMOTTS_CORPUS_TEXT_H_
#define EMOTTS_CORPUS_TEXT_H_

#include <string>
#include <string_view>
#include <vector>

namespace emotts::corpus {

// Ordered symbol inventory: PAD, EOS, space, a-z, apostrophe, comma, period,
// question mark, exclamation mark.
class Charset {
 public:
  static constexpr int kPad = 0;
  static constexpr int kEos = 1;

  static const Charset& Default();

  int size() const { return static_cast<int>(symbols_.size()); }
  // Printable symbols (everything but PAD and EOS).
  bool Contains(char c) const;
  int Id(char c) const;       // -1 when absent
  char Symbol(int id) const;  // '\0' for PAD/EOS

 private:
  Charset();
  std::string symbols_;  // index = id; PAD/EOS hold '\0'
  int lookup_[256];
};

// Lowercase, NFKD-fold and strip combining marks, map whitespace runs to a
// single space, drop everything outside the charset, trim.
// Throws EmptyAfterNormalization.
std::string NormalizeTranscript(std::string_view text, const Charset& charset = Charset::Default());

// One id per symbol plus a trailing EOS. Throws UnencodableSymbol.
std::vector<int> EncodeText(std::string_view text, const Charset& charset = Charset::Default());

// Inverse of EncodeText: stops at the first EOS, skips PAD.
std::string DecodeText(const std::vector<int>& ids, const Charset& charset = Charset::Default());

}  // namespace emotts::corpus

#endif  // EMOTTS_CORPUS_TEXT_H_
