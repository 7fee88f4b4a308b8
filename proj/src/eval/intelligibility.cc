#include "emotts/eval/intelligibility.h"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <sstream>

#include "emotts/common/csv.h"
#include "emotts/common/error.h"
#include "emotts/common/kv_file.h"
#include "emotts/eval/word_accuracy.h"

namespace emotts::eval {

WordAccuracyResult IntelligibilityEval(const std::vector<std::string>& sentences,
                                       const std::vector<std::filesystem::path>& wavs,
                                       AsrAdapter& asr, CiMethod method) {
  if (sentences.size() != wavs.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                fmt::format("{} sentences but {} audio files", sentences.size(), wavs.size()));
  }
  WordAccuracyResult r;
  std::vector<double> acc;
  for (size_t i = 0; i < sentences.size(); ++i) {
    SentenceScore s;
    s.reference = sentences[i];
    try {
      s.hypothesis = asr.Transcribe(wavs[i]);
      s.accuracy = WordAccuracy(s.reference, s.hypothesis);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kAsrTransport) throw;
      spdlog::warn("sentence {}: {}", i, e.what());
      s.transport_error = true;
      s.error = e.what();
      s.accuracy = 0.0;
      ++r.failures;
    }
    acc.push_back(s.accuracy);
    r.per_sentence.push_back(std::move(s));
  }
  if (!acc.empty()) {
    const MeanCi ci = ComputeMeanCi(acc, method);
    r.mean = ci.mean;
    r.ci95 = ci.half_width;
  }
  return r;
}

std::vector<std::string> LoadSentences(const std::filesystem::path& path) {
  std::istringstream in(ReadFile(path));
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    out.push_back(line);
  }
  return out;
}

std::string WordAccuracyCsv(const WordAccuracyResult& result) {
  std::string out = "index,reference,hypothesis,accuracy,transport_error\n";
  for (size_t i = 0; i < result.per_sentence.size(); ++i) {
    const auto& s = result.per_sentence[i];
    out += CsvLine({std::to_string(i), s.reference, s.hypothesis, fmt::format("{}", s.accuracy),
                    s.transport_error ? "1" : "0"});
  }
  return out;
}

std::string WordAccuracyTable(
    const std::vector<std::pair<std::string, WordAccuracyResult>>& systems) {
  size_t width = 6;
  for (const auto& [label, r] : systems) width = std::max(width, label.size());
  std::string out = fmt::format("{:<{}}  {}\n", "System", width, "Word accuracy");
  for (const auto& [label, r] : systems) {
    out += fmt::format("{:<{}}  {}\n", label, width, FormatPm(r.mean, r.ci95, 3));
  }
  return out;
}

}  // namespace emotts::eval
