#ifndef EMOTTS_DSP_AUDIO_H_
#define EMOTTS_DSP_AUDIO_H_

#include <filesystem>
#include <span>
#include <vector>

namespace emotts::dsp {

// Mono waveform. Samples are nominally in [-1, 1].
struct AudioBuffer {
  std::vector<double> samples;
  int rate = 22050;

  double duration_s() const {
    return rate > 0 ? static_cast<double>(samples.size()) / rate : 0.0;
  }
};

struct WavInfo {
  int rate = 0;
  int channels = 0;
  int bits_per_sample = 0;
  bool is_float = false;
  size_t frames = 0;

  double duration_s() const { return rate > 0 ? static_cast<double>(frames) / rate : 0.0; }
};

// Reads only the header chunks. Throws MissingFile / UndecodableAudio.
WavInfo ReadWavInfo(const std::filesystem::path& path);

// Decodes PCM 8/16/24/32-bit or IEEE float 32/64-bit; channels are mean-downmixed.
AudioBuffer ReadWav(const std::filesystem::path& path);

// 16-bit PCM little-endian, mono. Samples are clipped to [-1, 1].
void WriteWav(const std::filesystem::path& path, const AudioBuffer& buf);
std::vector<unsigned char> EncodeWav(const AudioBuffer& buf);

// Band-limited (Kaiser-windowed sinc) resampling between integer rates.
AudioBuffer Resample(const AudioBuffer& in, int target_rate);

// ReadWav + Resample to `target_rate`.
AudioBuffer LoadAudio(const std::filesystem::path& path, int target_rate);

struct TrimOptions {
  int frame_length = 276;
  int hop = 276;
};

// Drops leading/trailing frames whose RMS is more than `top_db` below the
// loudest frame. Frames are hop-aligned blocks starting at sample 0, so the
// kept region starts on a hop boundary and trimming is idempotent.
// Throws EmptyAfterTrim when no frame carries energy.
AudioBuffer TrimSilence(const AudioBuffer& buf, double top_db, const TrimOptions& opts = {});

// Applies y[n] = x[n] - coeff * x[n-1] (first sample passes through).
std::vector<double> PreEmphasis(std::span<const double> x, double coeff);
// Inverse IIR filter of PreEmphasis.
std::vector<double> DeEmphasis(std::span<const double> x, double coeff);

}  // namespace emotts::dsp

#endif  // EMOTTS_DSP_AUDIO_H_
