#ifndef EMOTTS_CORPUS_MANIFEST_H_
#define EMOTTS_CORPUS_MANIFEST_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace emotts::corpus {

enum class Emotion { kNeutral, kAmused, kAngry, kDisgusted, kSleepy };
enum class NveStatus { kClean, kNveRemoved, kExcluded };

inline constexpr Emotion kAllEmotions[] = {Emotion::kAmused, Emotion::kAngry,
                                           Emotion::kDisgusted, Emotion::kNeutral,
                                           Emotion::kSleepy};

std::string_view EmotionName(Emotion e);
// Throws UnknownEmotion.
Emotion ParseEmotion(std::string_view name);
std::string_view NveStatusName(NveStatus s);
NveStatus ParseNveStatus(std::string_view name);

struct Utterance {
  std::string id;
  std::filesystem::path audio_path;
  std::string transcript_raw;
  std::string transcript_norm;
  Emotion emotion = Emotion::kNeutral;
  double duration_s = 0.0;
  NveStatus nve_status = NveStatus::kClean;
};

struct Manifest {
  std::string corpus_name;
  std::vector<Utterance> utterances;

  size_t size() const { return utterances.size(); }
  bool empty() const { return utterances.empty(); }
  double total_duration_s() const;
};

enum class ExclusionReason { kNve, kTrimmedNve, kOther };

struct ExclusionEntry {
  std::string id;
  ExclusionReason reason = ExclusionReason::kNve;
};

struct ExclusionList {
  std::string corpus_name;
  std::vector<ExclusionEntry> entries;

  std::optional<ExclusionReason> Find(const std::string& id) const;
};

// `id,audio_path,transcript_norm,emotion,duration_s,nve_status`
void SaveManifest(const Manifest& m, const std::filesystem::path& path);
Manifest LoadManifest(const std::filesystem::path& path);

// `id,reason` with reason in {nve, trimmed_nve, other}.
void SaveExclusions(const ExclusionList& list, const std::filesystem::path& path);
ExclusionList LoadExclusions(const std::filesystem::path& path);

struct ScanIssue {
  std::string id;
  std::string message;
};

// Accounting before and after selection; feeds the per-emotion summary table.
struct ScanReport {
  size_t files_found = 0;
  double duration_found_s = 0.0;
  std::vector<ScanIssue> skipped;
};

// Single-speaker layout: `<root>/metadata.csv` with `id|transcript[|normalized]`
// rows and audio at `<root>/wavs/<id>.wav`. Throws MissingIndex.
Manifest ScanNeutralCorpus(const std::filesystem::path& root, ScanReport* report = nullptr);

// Emotional layout: `<root>/<speaker>/<emotion>/<id>.wav` with a sibling
// `<id>.txt` transcript; laughter-edited audio lives in `<emotion>/edited/<id>.wav`.
// Entries listed as nve/other are dropped; trimmed_nve entries use the edited
// audio and are marked nve_removed. Throws MissingRoot, UnknownEmotion.
Manifest ScanEmotionalCorpus(const std::filesystem::path& root, std::string_view emotion,
                             const ExclusionList& exclusions, ScanReport* report = nullptr);

// Seeded random hold-out. Throws HoldoutTooLarge.
std::pair<Manifest, Manifest> SplitManifest(const Manifest& m, size_t held_out_count,
                                            uint64_t seed);

}  // namespace emotts::corpus

#endif  // EMOTTS_CORPUS_MANIFEST_H_
