#include "emotts/corpus/mock_corpus.h"

#include <fmt/format.h>

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "emotts/common/error.h"
#include "emotts/common/kv_file.h"
#include "emotts/common/random.h"
#include "emotts/corpus/text.h"

namespace emotts::corpus {
namespace fs = std::filesystem;

namespace {

const char* const kVocabulary[] = {
    "the",   "birch", "canoe", "slid",  "on",    "smooth", "planks", "glue",  "sheet",
    "dark",  "blue",  "rice",  "is",    "often", "served", "in",     "round", "bowls",
    "juice", "of",    "lemon", "makes", "fine",  "punch",  "box",    "was",   "thrown",
    "four",  "hours", "work",  "faced", "us",    "large",  "size",   "hard",  "sell"};

void Tone(std::vector<double>& out, size_t begin, size_t count, double hz, double amp,
          double second, int rate) {
  // Raised-cosine edges keep symbol boundaries free of broadband clicks.
  const size_t fade = count / 8;
  for (size_t i = 0; i < count; ++i) {
    const double t = static_cast<double>(i) / rate;
    double gain = amp;
    const size_t edge = std::min(i, count - 1 - i);
    if (edge < fade) gain *= 0.5 - 0.5 * std::cos(M_PI * (static_cast<double>(edge) + 0.5) / fade);
    out[begin + i] = gain * (std::sin(2.0 * M_PI * hz * t) +
                             second * std::sin(2.0 * M_PI * 2.0 * hz * t)) /
                     (1.0 + second);
  }
}

void EnsureDir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error(ErrorCode::kUnwritableOutput, dir.string() + ": " + ec.message());
  }
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kUnwritableOutput, path.string());
  out << text << "\n";
}

// Tone sequence of `text` squeezed into `duration_s`, with 10% silence on each side.
dsp::AudioBuffer RenderTimed(const std::string& text, double duration_s, int rate) {
  dsp::AudioBuffer buf;
  buf.rate = rate;
  const size_t total = static_cast<size_t>(std::lround(duration_s * rate));
  buf.samples.assign(total, 0.0);
  const size_t pad = total / 10;
  const size_t body = total - 2 * pad;
  const size_t per = std::max<size_t>(1, body / std::max<size_t>(1, text.size()));
  ToneVoice voice;
  for (size_t i = 0; i < text.size() && (i + 1) * per <= body; ++i) {
    Tone(buf.samples, pad + i * per, per, voice.SymbolHz(Charset::Default().Id(text[i])),
         voice.amplitude, voice.second_harmonic, rate);
  }
  return buf;
}

}  // namespace

double ToneVoice::SymbolHz(int symbol_id) const {
  return base_hz * std::pow(step, std::max(0, symbol_id - 2));
}

dsp::AudioBuffer ToneVoice::Render(const std::string& normalized_text) const {
  dsp::AudioBuffer buf;
  buf.rate = sample_rate;
  const size_t per = static_cast<size_t>(samples_per_symbol);
  buf.samples.assign(static_cast<size_t>(lead_silence) + normalized_text.size() * per +
                         static_cast<size_t>(tail_silence),
                     0.0);
  const auto& cs = Charset::Default();
  for (size_t i = 0; i < normalized_text.size(); ++i) {
    const int id = cs.Id(normalized_text[i]);
    if (id < 0) {
      throw Error(ErrorCode::kUnencodableSymbol,
                  fmt::format("ToneVoice: '{}' not in charset", normalized_text[i]));
    }
    if (silent_pauses && !std::isalpha(static_cast<unsigned char>(normalized_text[i]))) continue;
    Tone(buf.samples, static_cast<size_t>(lead_silence) + i * per, per, SymbolHz(id), amplitude,
         second_harmonic, sample_rate);
  }
  return buf;
}

std::vector<std::string> RandomPhrases(size_t count, int min_words, int max_words,
                                       uint64_t seed) {
  Rng rng(seed);
  const size_t vocab = std::size(kVocabulary);
  std::vector<std::string> out;
  out.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    const int words =
        min_words + static_cast<int>(rng.Below(static_cast<uint64_t>(max_words - min_words + 1)));
    std::string phrase;
    for (int w = 0; w < words; ++w) {
      if (w) phrase += ' ';
      phrase += kVocabulary[rng.Below(vocab)];
    }
    out.push_back(std::move(phrase));
  }
  return out;
}

std::vector<EmotionCount> ReferenceCounts() {
  return {{Emotion::kAmused, 238, 296, 82},
          {Emotion::kAngry, 304, 304, 0},
          {Emotion::kDisgusted, 303, 303, 0},
          {Emotion::kNeutral, 357, 357, 0},
          {Emotion::kSleepy, 361, 496, 0}};
}

std::vector<EmotionCount> ParseEmotionCounts(const std::string& spec) {
  if (spec == "reference") return ReferenceCounts();
  std::vector<EmotionCount> out;
  std::stringstream ss(spec);
  for (std::string item; std::getline(ss, item, ',');) {
    if (item.empty()) continue;
    std::vector<std::string> parts;
    std::stringstream is(item);
    for (std::string p; std::getline(is, p, ':');) parts.push_back(p);
    if (parts.size() < 2 || parts.size() > 4) {
      throw Error(ErrorCode::kInvalidConfig,
                  fmt::format("count spec '{}': expected emotion:kept[:total[:edited]]", item));
    }
    EmotionCount c;
    c.emotion = ParseEmotion(parts[0]);
    try {
      c.kept = std::stoul(parts[1]);
      c.total = parts.size() > 2 ? std::stoul(parts[2]) : c.kept;
      c.edited = parts.size() > 3 ? std::stoul(parts[3]) : 0;
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidConfig, fmt::format("count spec '{}': bad number", item));
    }
    if (c.total < c.kept || c.edited > c.kept) {
      throw Error(ErrorCode::kInvalidConfig,
                  fmt::format("count spec '{}': need kept <= total and edited <= kept", item));
    }
    out.push_back(c);
  }
  return out;
}

MockCorpusResult GenerateEmotionalCorpus(const fs::path& out, const MockCorpusOptions& opts) {
  EnsureDir(out);
  MockCorpusResult result;
  ExclusionList exclusions;
  exclusions.corpus_name = out.filename().string();
  constexpr int kRate = 22050;

  for (const auto& count : opts.counts) {
    const std::string emotion(EmotionName(count.emotion));
    const fs::path dir = out / opts.speaker / emotion;
    EnsureDir(dir);
    if (count.edited > 0) EnsureDir(dir / "edited");

    Rng rng(MixSeed(opts.seed, static_cast<uint64_t>(count.emotion)));
    const auto phrases = RandomPhrases(count.total, 2, 5, rng.Next());
    // Layout: [0, kept - edited) clean, [kept - edited, kept) edited,
    // [kept, total) excluded.
    for (size_t i = 0; i < count.total; ++i) {
      const std::string id = fmt::format("{}-{}-{:04d}", opts.speaker, emotion, i + 1);
      const double duration = rng.Uniform(opts.min_duration_s, opts.max_duration_s);
      dsp::AudioBuffer audio = RenderTimed(phrases[i], duration, kRate);
      if (i < opts.silent_per_emotion && i < count.kept) {
        std::fill(audio.samples.begin(), audio.samples.end(), 0.0);
      }
      const bool edited = i >= count.kept - count.edited && i < count.kept;
      const bool excluded = i >= count.kept;
      if (edited || excluded) {
        // Non-verbal burst appended to the raw take.
        dsp::AudioBuffer raw = audio;
        const size_t burst = static_cast<size_t>(0.1 * kRate);
        for (size_t k = 0; k < burst; ++k) raw.samples.push_back(0.3 * (rng.Uniform() * 2 - 1));
        dsp::WriteWav(dir / (id + ".wav"), raw);
        if (edited) dsp::WriteWav(dir / "edited" / (id + ".wav"), audio);
        exclusions.entries.push_back(
            {id, edited ? ExclusionReason::kTrimmedNve
                        : (i % 7 == 0 ? ExclusionReason::kOther : ExclusionReason::kNve)});
      } else {
        dsp::WriteWav(dir / (id + ".wav"), audio);
      }
      WriteText(dir / (id + ".txt"), phrases[i]);
      ++result.files_written;
    }
  }
  result.exclusions_path = out / "exclusions.csv";
  SaveExclusions(exclusions, result.exclusions_path);
  return result;
}

void GenerateNeutralCorpus(const fs::path& out, size_t rows, size_t missing, uint64_t seed) {
  EnsureDir(out / "wavs");
  Rng rng(seed);
  const auto phrases = RandomPhrases(rows, 2, 6, rng.Next());
  std::string index;
  for (size_t i = 0; i < rows; ++i) {
    const std::string id = fmt::format("LJ{:03d}-{:04d}", 1 + i / 1000, i % 1000 + 1);
    // Raw transcripts carry capitalization and a period, like the real index.
    std::string raw = phrases[i];
    raw[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(raw[0])));
    index += fmt::format("{}|{}.|{}.\n", id, raw, raw);
    if (i < missing) continue;
    const double duration = rng.Uniform(0.2, 0.4);
    dsp::WriteWav(out / "wavs" / (id + ".wav"), RenderTimed(phrases[i], duration, 22050));
  }
  WriteFileAtomic(out / "metadata.csv", index);
}

}  // namespace emotts::corpus
