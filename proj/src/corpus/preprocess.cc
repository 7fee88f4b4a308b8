#include "emotts/corpus/preprocess.h"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <array>
#include <cmath>

#include "emotts/common/error.h"
#include "emotts/dsp/audio.h"

namespace emotts::corpus {
namespace fs = std::filesystem;

Manifest PreprocessCorpus(const Manifest& scanned, const dsp::SpectroConfig& cfg,
                          const fs::path& out_dir, std::vector<ScanIssue>* skipped) {
  std::error_code ec;
  fs::create_directories(out_dir / "wavs", ec);
  if (ec) throw Error(ErrorCode::kUnwritableOutput, out_dir.string() + ": " + ec.message());
  Manifest out;
  out.corpus_name = scanned.corpus_name;
  for (const Utterance& u : scanned.utterances) {
    Utterance p = u;
    try {
      const dsp::AudioBuffer audio = dsp::LoadAudio(u.audio_path, cfg.sample_rate);
      const dsp::AudioBuffer trimmed = dsp::TrimSilence(audio, cfg.top_db, cfg.trim_options());
      p.audio_path = out_dir / "wavs" / (u.id + ".wav");
      dsp::WriteWav(p.audio_path, trimmed);
      p.duration_s = static_cast<double>(trimmed.samples.size()) / trimmed.rate;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kEmptyAfterTrim && e.code() != ErrorCode::kUndecodableAudio) throw;
      spdlog::warn("{}: {}", u.id, e.what());
      if (skipped) skipped->push_back({u.id, std::string(ErrorCodeName(e.code()))});
      continue;
    }
    out.utterances.push_back(std::move(p));
  }
  return out;
}

std::string FormatCorpusSummary(const std::vector<CorpusSummaryRow>& rows) {
  auto minutes = [](double s) { return std::lround(s / 60.0); };
  std::vector<std::array<std::string, 3>> cells;
  cells.push_back({"", "Total duration [min]", "Number of utterances"});
  for (const auto& r : rows) {
    std::string dur = std::to_string(minutes(r.kept_s));
    std::string count = std::to_string(r.kept);
    if (r.found != r.kept) {
      dur += fmt::format(" ({})", minutes(r.found_s));
      count += fmt::format(" ({})", r.found);
    }
    cells.push_back({r.label, dur, count});
  }
  std::array<size_t, 3> width{};
  for (const auto& row : cells) {
    for (size_t c = 0; c < 3; ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  for (const auto& row : cells) {
    out += fmt::format("{:<{}} | {:>{}} | {:>{}}\n", row[0], width[0], row[1], width[1], row[2],
                       width[2]);
  }
  return out;
}

}  // namespace emotts::corpus
