#include "emotts/corpus/text.h"

#include <fmt/format.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <algorithm>

#include "emotts/common/error.h"

namespace emotts::corpus {

Charset::Charset() {
  symbols_.push_back('\0');  // PAD
  symbols_.push_back('\0');  // EOS
  symbols_.push_back(' ');
  for (char c = 'a'; c <= 'z'; ++c) symbols_.push_back(c);
  for (char c : std::string("',.?!")) symbols_.push_back(c);
  std::fill(std::begin(lookup_), std::end(lookup_), -1);
  for (size_t i = 2; i < symbols_.size(); ++i) {
    lookup_[static_cast<unsigned char>(symbols_[i])] = static_cast<int>(i);
  }
}

const Charset& Charset::Default() {
  static const Charset charset;
  return charset;
}

bool Charset::Contains(char c) const { return Id(c) >= 0; }

int Charset::Id(char c) const { return lookup_[static_cast<unsigned char>(c)]; }

char Charset::Symbol(int id) const {
  if (id < 0 || id >= size()) return '\0';
  return symbols_[static_cast<size_t>(id)];
}

std::string NormalizeTranscript(std::string_view text, const Charset& charset) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfkd = icu::Normalizer2::getNFKDInstance(status);
  if (U_FAILURE(status)) throw Error(ErrorCode::kIo, "ICU NFKD normalizer unavailable");

  icu::UnicodeString ustr = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  ustr.toLower();
  icu::UnicodeString decomposed = nfkd->normalize(ustr, status);
  if (U_FAILURE(status)) throw Error(ErrorCode::kIo, "ICU normalization failed");

  std::string out;
  bool pending_space = false;
  for (int32_t i = 0; i < decomposed.length();) {
    const UChar32 cp = decomposed.char32At(i);
    i += U16_LENGTH(cp);
    if (u_charType(cp) == U_NON_SPACING_MARK) continue;
    if (u_isUWhiteSpace(cp)) {
      pending_space = !out.empty();
      continue;
    }
    if (cp > 0x7f || !charset.Contains(static_cast<char>(cp))) continue;
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(cp));
  }
  if (out.empty()) {
    throw Error(ErrorCode::kEmptyAfterNormalization,
                fmt::format("no charset symbols in '{}'", text));
  }
  return out;
}

std::vector<int> EncodeText(std::string_view text, const Charset& charset) {
  std::vector<int> ids;
  ids.reserve(text.size() + 1);
  for (char c : text) {
    const int id = charset.Id(c);
    if (id < 0) {
      throw Error(ErrorCode::kUnencodableSymbol,
                  fmt::format("symbol 0x{:02x} in '{}'", static_cast<unsigned char>(c), text));
    }
    ids.push_back(id);
  }
  ids.push_back(Charset::kEos);
  return ids;
}

std::string DecodeText(const std::vector<int>& ids, const Charset& charset) {
  std::string out;
  for (int id : ids) {
    if (id == Charset::kEos) break;
    if (id == Charset::kPad) continue;
    const char c = charset.Symbol(id);
    if (c != '\0') out.push_back(c);
  }
  return out;
}

}  // namespace emotts::corpus
