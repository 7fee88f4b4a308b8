#ifndef EMOTTS_DSP_SPECTROGRAM_H_
#define EMOTTS_DSP_SPECTROGRAM_H_

#include <Eigen/Core>
#include <complex>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "emotts/common/kv_file.h"
#include "emotts/dsp/audio.h"

namespace emotts::dsp {

struct SpectroConfig {
  int sample_rate = 22050;
  int n_fft = 2048;
  int hop = 276;   // 12.5 ms
  int win = 1102;  // 50 ms
  int n_mels = 80;
  int reduction = 4;
  double preemph = 0.97;
  double ref_db = 20.0;
  double max_db = 100.0;
  double top_db = 20.0;
  int gl_iters = 60;
  double sharpening = 1.5;

  int lin_bins() const { return 1 + n_fft / 2; }
  int hop_effective() const { return reduction * hop; }
  TrimOptions trim_options() const { return {hop, hop}; }

  // Throws InvalidConfig when an invariant is violated.
  void Validate() const;

  KeyValueFile ToKeyValue() const;
  static SpectroConfig FromKeyValue(const KeyValueFile& kv);

  bool operator==(const SpectroConfig&) const = default;
};

// Rows are frames, columns are bins; every entry lies in [0, 1].
struct MelSpectrogram {
  Eigen::MatrixXd frames;  // T' x n_mels
  int hop_effective = 0;

  Eigen::Index num_frames() const { return frames.rows(); }
};

struct LinSpectrogram {
  Eigen::MatrixXd frames;  // T x (1 + n_fft / 2)

  Eigen::Index num_frames() const { return frames.rows(); }
};

using ComplexMatrix = Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic>;

// Centered STFT with zero padding of n_fft/2 on both sides and a periodic
// Hann window of length `win` centered in the FFT frame.
// Result is frames x (1 + n_fft/2); floor(L / hop) + 1 frames.
ComplexMatrix Stft(std::span<const double> signal, const SpectroConfig& cfg);

// Least-squares inverse of Stft (window-power normalized overlap-add).
// Output length is (frames - 1) * hop, or `length` when given.
std::vector<double> Istft(const ComplexMatrix& spec, const SpectroConfig& cfg,
                          std::optional<size_t> length = std::nullopt);

// Slaney-style mel filterbank (area-normalized triangles), n_mels x lin_bins.
Eigen::MatrixXd MelFilterbank(const SpectroConfig& cfg);

// Maps a magnitude to the normalized [0, 1] dB scale used for training targets.
double NormalizeMagnitude(double magnitude, const SpectroConfig& cfg);
double DenormalizeToMagnitude(double normalized, const SpectroConfig& cfg);

struct Features {
  MelSpectrogram mel;
  LinSpectrogram lin;
};

// Throws RateMismatch if buf.rate != cfg.sample_rate, EmptyInput if buf is empty.
Features ExtractFeatures(const AudioBuffer& buf, const SpectroConfig& cfg);

// ||  |STFT(x)| - target ||_F / || target ||_F
double SpectralConvergence(std::span<const double> signal, const Eigen::MatrixXd& target_mag,
                           const SpectroConfig& cfg);

// Called after every Griffin-Lim iteration (and once for iteration 0) with the
// current waveform estimate.
using GriffinLimObserver = std::function<void(int iteration, const std::vector<double>& signal)>;

// Phase reconstruction from a magnitude matrix (frames x lin_bins). Iteration 0
// is the inverse STFT with zero phase.
std::vector<double> GriffinLim(const Eigen::MatrixXd& magnitude, int iterations,
                               const SpectroConfig& cfg,
                               const GriffinLimObserver& observer = nullptr);

// Denormalize -> magnitude^sharpening -> Griffin-Lim -> de-emphasis -> clip.
AudioBuffer InvertSpectrogram(const LinSpectrogram& spec, const SpectroConfig& cfg);

}  // namespace emotts::dsp

#endif  // EMOTTS_DSP_SPECTROGRAM_H_
