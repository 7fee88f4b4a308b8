#ifndef EMOTTS_CORPUS_MOCK_CORPUS_H_
#define EMOTTS_CORPUS_MOCK_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "emotts/corpus/manifest.h"
#include "emotts/dsp/audio.h"

namespace emotts::corpus {

// Renders text as a sequence of fixed-length tones, one per symbol, so that
// text position maps linearly onto time. Stands in for a speaker in tests
// and fixture corpora.
struct ToneVoice {
  int sample_rate = 22050;
  int samples_per_symbol = 3 * 4 * 276;  // three coarse mel frames
  double base_hz = 150.0;
  double step = 1.1;   // frequency ratio between consecutive symbol ids
  double amplitude = 0.5;
  double second_harmonic = 0.3;
  int lead_silence = 0;
  int tail_silence = 2 * 4 * 276;
  bool silent_pauses = true;  // spaces and punctuation render as silence

  double SymbolHz(int symbol_id) const;
  dsp::AudioBuffer Render(const std::string& normalized_text) const;
};

// Deterministic lowercase phrases of `min_words`..`max_words` words.
std::vector<std::string> RandomPhrases(size_t count, int min_words, int max_words, uint64_t seed);

struct EmotionCount {
  Emotion emotion = Emotion::kNeutral;
  size_t kept = 0;     // utterances a scan must return
  size_t total = 0;    // files on disk (>= kept)
  size_t edited = 0;   // of `kept`, how many come from laughter-edited audio
};

// Reference corpus: amused 238 (296, 82 edited), angry 304, disgusted 303,
// neutral 357, sleepy 361 (496).
std::vector<EmotionCount> ReferenceCounts();

// Parses "amused:238:296:82,angry:304" style specs; omitted fields default to kept/0.
std::vector<EmotionCount> ParseEmotionCounts(const std::string& spec);

struct MockCorpusOptions {
  std::string speaker = "spk1";
  std::vector<EmotionCount> counts;
  uint64_t seed = 0;
  double min_duration_s = 0.2;
  double max_duration_s = 0.4;
  size_t silent_per_emotion = 0;  // kept utterances rendered as digital silence
};

struct MockCorpusResult {
  std::filesystem::path exclusions_path;
  size_t files_written = 0;
};

// Writes `<out>/<speaker>/<emotion>/...` plus `<out>/exclusions.csv`.
// Throws UnwritableOutput.
MockCorpusResult GenerateEmotionalCorpus(const std::filesystem::path& out,
                                         const MockCorpusOptions& opts);

// Writes `<out>/metadata.csv` and `<out>/wavs/`; the first `missing` rows
// have no audio file.
void GenerateNeutralCorpus(const std::filesystem::path& out, size_t rows, size_t missing,
                           uint64_t seed);

}  // namespace emotts::corpus

#endif  // EMOTTS_CORPUS_MOCK_CORPUS_H_
