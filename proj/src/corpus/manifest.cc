#include "emotts/corpus/manifest.h"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "emotts/common/csv.h"
#include "emotts/common/error.h"
#include "emotts/common/kv_file.h"
#include "emotts/common/random.h"
#include "emotts/corpus/text.h"
#include "emotts/dsp/audio.h"

namespace emotts::corpus {
namespace fs = std::filesystem;

namespace {

const char* const kManifestHeader[] = {"id",       "audio_path",  "transcript_norm",
                                       "emotion",  "duration_s",  "nve_status"};

std::string Lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string TrimLine(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == '\n' || s.back() == ' ')) s.pop_back();
  size_t i = 0;
  while (i < s.size() && s[i] == ' ') ++i;
  return s.substr(i);
}

std::vector<fs::path> SortedEntries(const fs::path& dir, bool directories) {
  std::vector<fs::path> out;
  std::error_code ec;
  for (const auto& e : fs::directory_iterator(dir, ec)) {
    if (directories ? e.is_directory() : e.is_regular_file()) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string_view ReasonName(ExclusionReason r) {
  switch (r) {
    case ExclusionReason::kNve: return "nve";
    case ExclusionReason::kTrimmedNve: return "trimmed_nve";
    case ExclusionReason::kOther: return "other";
  }
  return "other";
}

ExclusionReason ParseReason(std::string_view s) {
  if (s == "nve") return ExclusionReason::kNve;
  if (s == "trimmed_nve") return ExclusionReason::kTrimmedNve;
  if (s == "other") return ExclusionReason::kOther;
  throw Error(ErrorCode::kInvalidConfig, fmt::format("unknown exclusion reason '{}'", s));
}

}  // namespace

std::string_view EmotionName(Emotion e) {
  switch (e) {
    case Emotion::kNeutral: return "neutral";
    case Emotion::kAmused: return "amused";
    case Emotion::kAngry: return "angry";
    case Emotion::kDisgusted: return "disgusted";
    case Emotion::kSleepy: return "sleepy";
  }
  return "neutral";
}

Emotion ParseEmotion(std::string_view name) {
  const std::string l = Lower(name);
  for (Emotion e : kAllEmotions) {
    if (EmotionName(e) == l) return e;
  }
  throw Error(ErrorCode::kUnknownEmotion, fmt::format("'{}'", name));
}

std::string_view NveStatusName(NveStatus s) {
  switch (s) {
    case NveStatus::kClean: return "clean";
    case NveStatus::kNveRemoved: return "nve_removed";
    case NveStatus::kExcluded: return "excluded";
  }
  return "clean";
}

NveStatus ParseNveStatus(std::string_view name) {
  if (name == "clean") return NveStatus::kClean;
  if (name == "nve_removed") return NveStatus::kNveRemoved;
  if (name == "excluded") return NveStatus::kExcluded;
  throw Error(ErrorCode::kInvalidConfig, fmt::format("unknown nve_status '{}'", name));
}

double Manifest::total_duration_s() const {
  double total = 0.0;
  for (const auto& u : utterances) total += u.duration_s;
  return total;
}

std::optional<ExclusionReason> ExclusionList::Find(const std::string& id) const {
  for (const auto& e : entries) {
    if (e.id == id) return e.reason;
  }
  return std::nullopt;
}

void SaveManifest(const Manifest& m, const fs::path& path) {
  std::string out = CsvLine(CsvRow(std::begin(kManifestHeader), std::end(kManifestHeader)));
  for (const auto& u : m.utterances) {
    out += CsvLine({u.id, u.audio_path.string(), u.transcript_norm,
                    std::string(EmotionName(u.emotion)), fmt::format("{:.6f}", u.duration_s),
                    std::string(NveStatusName(u.nve_status))});
  }
  WriteFileAtomic(path, out);
}

Manifest LoadManifest(const fs::path& path) {
  const auto rows = ParseCsv(ReadFile(path));
  Manifest m;
  m.corpus_name = path.stem().string();
  if (rows.empty()) return m;
  const CsvRow header(std::begin(kManifestHeader), std::end(kManifestHeader));
  if (rows[0] != header) {
    throw Error(ErrorCode::kInvalidConfig, path.string() + ": unexpected manifest header");
  }
  std::set<std::string> seen;
  for (size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() != header.size()) {
      throw Error(ErrorCode::kInvalidConfig, fmt::format("{}: row {} has {} fields",
                                                         path.string(), i, r.size()));
    }
    Utterance u;
    u.id = r[0];
    u.audio_path = r[1];
    u.transcript_norm = r[2];
    u.transcript_raw = r[2];
    u.emotion = ParseEmotion(r[3]);
    u.duration_s = std::stod(r[4]);
    u.nve_status = ParseNveStatus(r[5]);
    if (!seen.insert(u.id).second) {
      throw Error(ErrorCode::kInvalidConfig, "duplicate utterance id " + u.id);
    }
    m.utterances.push_back(std::move(u));
  }
  return m;
}

void SaveExclusions(const ExclusionList& list, const fs::path& path) {
  std::string out = CsvLine({"id", "reason"});
  for (const auto& e : list.entries) out += CsvLine({e.id, std::string(ReasonName(e.reason))});
  WriteFileAtomic(path, out);
}

ExclusionList LoadExclusions(const fs::path& path) {
  const auto rows = ParseCsv(ReadFile(path));
  ExclusionList list;
  list.corpus_name = path.stem().string();
  for (size_t i = 0; i < rows.size(); ++i) {
    if (i == 0 && !rows[0].empty() && rows[0][0] == "id") continue;
    if (rows[i].size() != 2) {
      throw Error(ErrorCode::kInvalidConfig, fmt::format("{}: row {} malformed", path.string(), i));
    }
    list.entries.push_back({rows[i][0], ParseReason(rows[i][1])});
  }
  return list;
}

Manifest ScanNeutralCorpus(const fs::path& root, ScanReport* report) {
  const fs::path index = root / "metadata.csv";
  std::ifstream in(index);
  if (!in) throw Error(ErrorCode::kMissingIndex, index.string());

  ScanReport local;
  ScanReport& rep = report ? *report : local;
  Manifest m;
  m.corpus_name = root.filename().string();
  std::set<std::string> seen;
  std::string line;
  while (std::getline(in, line)) {
    line = TrimLine(line);
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, '|');) fields.push_back(f);
    if (fields.size() < 2) {
      rep.skipped.push_back({line, "malformed index row"});
      continue;
    }
    ++rep.files_found;
    Utterance u;
    u.id = fields[0];
    u.audio_path = root / "wavs" / (u.id + ".wav");
    u.transcript_raw = fields[1];
    u.emotion = Emotion::kNeutral;
    if (!seen.insert(u.id).second) {
      rep.skipped.push_back({u.id, "duplicate id"});
      continue;
    }
    try {
      u.duration_s = dsp::ReadWavInfo(u.audio_path).duration_s();
      rep.duration_found_s += u.duration_s;
      u.transcript_norm = NormalizeTranscript(u.transcript_raw);
    } catch (const Error& e) {
      spdlog::warn("skipping {}: {}", u.id, e.what());
      rep.skipped.push_back({u.id, e.what()});
      continue;
    }
    m.utterances.push_back(std::move(u));
  }
  return m;
}

Manifest ScanEmotionalCorpus(const fs::path& root, std::string_view emotion,
                             const ExclusionList& exclusions, ScanReport* report) {
  const Emotion wanted = ParseEmotion(emotion);
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw Error(ErrorCode::kMissingRoot, root.string());

  ScanReport local;
  ScanReport& rep = report ? *report : local;
  Manifest m;
  m.corpus_name = fmt::format("{}-{}", root.filename().string(), EmotionName(wanted));
  std::set<std::string> seen;
  for (const auto& speaker : SortedEntries(root, /*directories=*/true)) {
    for (const auto& dir : SortedEntries(speaker, /*directories=*/true)) {
      if (Lower(dir.filename().string()) != EmotionName(wanted)) continue;
      for (const auto& file : SortedEntries(dir, /*directories=*/false)) {
        if (Lower(file.extension().string()) != ".wav") continue;
        Utterance u;
        u.id = file.stem().string();
        u.emotion = wanted;
        u.audio_path = file;
        ++rep.files_found;
        try {
          rep.duration_found_s += dsp::ReadWavInfo(file).duration_s();
        } catch (const Error& e) {
          rep.skipped.push_back({u.id, e.what()});
          continue;
        }
        const auto reason = exclusions.Find(u.id);
        if (reason && *reason != ExclusionReason::kTrimmedNve) continue;
        if (!seen.insert(u.id).second) {
          rep.skipped.push_back({u.id, "duplicate id"});
          continue;
        }
        try {
          if (reason) {
            u.nve_status = NveStatus::kNveRemoved;
            u.audio_path = dir / "edited" / file.filename();
          }
          u.duration_s = dsp::ReadWavInfo(u.audio_path).duration_s();
          auto txt = file;
          txt.replace_extension(".txt");
          u.transcript_raw = TrimLine(ReadFile(txt));
          u.transcript_norm = NormalizeTranscript(u.transcript_raw);
        } catch (const Error& e) {
          spdlog::warn("skipping {}: {}", u.id, e.what());
          rep.skipped.push_back({u.id, e.what()});
          continue;
        }
        m.utterances.push_back(std::move(u));
      }
    }
  }
  return m;
}

std::pair<Manifest, Manifest> SplitManifest(const Manifest& m, size_t held_out_count,
                                            uint64_t seed) {
  if (held_out_count > m.size()) {
    throw Error(ErrorCode::kHoldoutTooLarge,
                fmt::format("{} requested from {} utterances", held_out_count, m.size()));
  }
  std::vector<size_t> order(m.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.Shuffle(order);
  std::vector<bool> held(m.size(), false);
  for (size_t i = 0; i < held_out_count; ++i) held[order[i]] = true;

  Manifest train{m.corpus_name + "-train", {}};
  Manifest held_out{m.corpus_name + "-heldout", {}};
  for (size_t i = 0; i < m.size(); ++i) {
    (held[i] ? held_out : train).utterances.push_back(m.utterances[i]);
  }
  return {std::move(train), std::move(held_out)};
}

}  // namespace emotts::corpus
