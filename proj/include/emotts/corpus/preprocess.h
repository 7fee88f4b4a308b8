#ifndef EMOTTS_CORPUS_PREPROCESS_H_
#define EMOTTS_CORPUS_PREPROCESS_H_

#include <filesystem>
#include <string>
#include <vector>

#include "emotts/corpus/manifest.h"
#include "emotts/dsp/spectrogram.h"

namespace emotts::corpus {

// Resamples to cfg.sample_rate, trims silence at cfg.top_db and writes
// `<out_dir>/wavs/<id>.wav`. Utterances that trim to nothing are left out and
// reported in `skipped`. The input corpus is never modified.
Manifest PreprocessCorpus(const Manifest& scanned, const dsp::SpectroConfig& cfg,
                          const std::filesystem::path& out_dir, std::vector<ScanIssue>* skipped);

struct CorpusSummaryRow {
  std::string label;
  size_t kept = 0;
  size_t found = 0;
  double kept_s = 0.0;
  double found_s = 0.0;
};

// Minute-rounded durations and utterance counts; the pre-selection amounts
// follow in parentheses when selection removed anything.
std::string FormatCorpusSummary(const std::vector<CorpusSummaryRow>& rows);

}  // namespace emotts::corpus

#endif  // EMOTTS_CORPUS_PREPROCESS_H_
