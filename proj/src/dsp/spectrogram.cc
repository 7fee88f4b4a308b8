#include "emotts/dsp/spectrogram.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <unsupported/Eigen/FFT>

#include "emotts/common/error.h"

namespace emotts::dsp {
namespace {

constexpr double kAmplitudeFloor = 1e-5;

// Periodic Hann of length `win`, zero-padded and centered in n_fft.
std::vector<double> PaddedWindow(const SpectroConfig& cfg) {
  std::vector<double> w(static_cast<size_t>(cfg.n_fft), 0.0);
  const int offset = (cfg.n_fft - cfg.win) / 2;
  for (int n = 0; n < cfg.win; ++n) {
    w[static_cast<size_t>(offset + n)] = 0.5 - 0.5 * std::cos(2.0 * M_PI * n / cfg.win);
  }
  return w;
}

double HzToMel(double hz) {
  constexpr double f_sp = 200.0 / 3.0;
  constexpr double min_log_hz = 1000.0;
  const double min_log_mel = min_log_hz / f_sp;
  const double logstep = std::log(6.4) / 27.0;
  if (hz >= min_log_hz) return min_log_mel + std::log(hz / min_log_hz) / logstep;
  return hz / f_sp;
}

double MelToHz(double mel) {
  constexpr double f_sp = 200.0 / 3.0;
  constexpr double min_log_hz = 1000.0;
  const double min_log_mel = min_log_hz / f_sp;
  const double logstep = std::log(6.4) / 27.0;
  if (mel >= min_log_mel) return min_log_hz * std::exp(logstep * (mel - min_log_mel));
  return f_sp * mel;
}

Eigen::MatrixXd Magnitude(const ComplexMatrix& spec) { return spec.cwiseAbs(); }

Eigen::MatrixXd NormalizeMatrix(const Eigen::MatrixXd& mag, const SpectroConfig& cfg) {
  return mag.unaryExpr([&](double m) { return NormalizeMagnitude(m, cfg); });
}

}  // namespace

void SpectroConfig::Validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::kInvalidConfig, msg); };
  if (sample_rate <= 0) fail("sample_rate must be positive");
  if (hop < 1 || hop > win || win > n_fft) fail("require 1 <= hop <= win <= n_fft");
  if (n_fft % 2 != 0) fail("n_fft must be even");
  if (reduction < 1) fail("reduction must be >= 1");
  if (top_db <= 0) fail("top_db must be positive");
  if (n_mels < 1) fail("n_mels must be >= 1");
  if (max_db <= 0) fail("max_db must be positive");
  if (gl_iters < 0) fail("gl_iters must be >= 0");
}

KeyValueFile SpectroConfig::ToKeyValue() const {
  KeyValueFile kv;
  kv.Set("sample_rate", sample_rate);
  kv.Set("n_fft", n_fft);
  kv.Set("hop", hop);
  kv.Set("win", win);
  kv.Set("n_mels", n_mels);
  kv.Set("reduction", reduction);
  kv.Set("preemph", preemph);
  kv.Set("ref_db", ref_db);
  kv.Set("max_db", max_db);
  kv.Set("top_db", top_db);
  kv.Set("gl_iters", gl_iters);
  kv.Set("sharpening", sharpening);
  return kv;
}

SpectroConfig SpectroConfig::FromKeyValue(const KeyValueFile& kv) {
  SpectroConfig c;
  c.sample_rate = static_cast<int>(kv.GetInt("sample_rate", c.sample_rate));
  c.n_fft = static_cast<int>(kv.GetInt("n_fft", c.n_fft));
  c.hop = static_cast<int>(kv.GetInt("hop", c.hop));
  c.win = static_cast<int>(kv.GetInt("win", c.win));
  c.n_mels = static_cast<int>(kv.GetInt("n_mels", c.n_mels));
  c.reduction = static_cast<int>(kv.GetInt("reduction", c.reduction));
  c.preemph = kv.GetDouble("preemph", c.preemph);
  c.ref_db = kv.GetDouble("ref_db", c.ref_db);
  c.max_db = kv.GetDouble("max_db", c.max_db);
  c.top_db = kv.GetDouble("top_db", c.top_db);
  c.gl_iters = static_cast<int>(kv.GetInt("gl_iters", c.gl_iters));
  c.sharpening = kv.GetDouble("sharpening", c.sharpening);
  c.Validate();
  return c;
}

ComplexMatrix Stft(std::span<const double> signal, const SpectroConfig& cfg) {
  const size_t n_fft = static_cast<size_t>(cfg.n_fft);
  const size_t hop = static_cast<size_t>(cfg.hop);
  const size_t half = n_fft / 2;
  const size_t n_frames = signal.size() / hop + 1;
  const auto window = PaddedWindow(cfg);

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> frame(n_fft);
  std::vector<std::complex<double>> bins;
  ComplexMatrix out(static_cast<Eigen::Index>(n_frames), static_cast<Eigen::Index>(half + 1));
  for (size_t t = 0; t < n_frames; ++t) {
    // Frame t covers padded samples [t*hop, t*hop + n_fft), i.e. signal
    // samples centered on t*hop.
    const long long start = static_cast<long long>(t * hop) - static_cast<long long>(half);
    for (size_t i = 0; i < n_fft; ++i) {
      const long long idx = start + static_cast<long long>(i);
      const double x = (idx >= 0 && idx < static_cast<long long>(signal.size()))
                           ? signal[static_cast<size_t>(idx)]
                           : 0.0;
      frame[i] = x * window[i];
    }
    fft.fwd(bins, frame);
    for (size_t k = 0; k <= half; ++k) {
      out(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k)) = bins[k];
    }
  }
  return out;
}

std::vector<double> Istft(const ComplexMatrix& spec, const SpectroConfig& cfg,
                          std::optional<size_t> length) {
  const size_t n_fft = static_cast<size_t>(cfg.n_fft);
  const size_t hop = static_cast<size_t>(cfg.hop);
  const size_t half = n_fft / 2;
  if (spec.cols() != static_cast<Eigen::Index>(half + 1)) {
    throw Error(ErrorCode::kShapeMismatch,
                fmt::format("istft: expected {} bins, got {}", half + 1, spec.cols()));
  }
  const size_t n_frames = static_cast<size_t>(spec.rows());
  const size_t out_len = length.value_or(n_frames > 0 ? (n_frames - 1) * hop : 0);
  if (n_frames == 0) return std::vector<double>(out_len, 0.0);

  const auto window = PaddedWindow(cfg);
  const size_t padded_len = n_fft + hop * (n_frames - 1);
  std::vector<double> acc(padded_len, 0.0);
  std::vector<double> wsum(padded_len, 0.0);

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<std::complex<double>> bins(half + 1);
  std::vector<double> frame;
  for (size_t t = 0; t < n_frames; ++t) {
    for (size_t k = 0; k <= half; ++k) {
      bins[k] = spec(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k));
    }
    fft.inv(frame, bins, static_cast<Eigen::Index>(n_fft));
    const size_t start = t * hop;
    for (size_t i = 0; i < n_fft; ++i) {
      acc[start + i] += frame[i] * window[i];
      wsum[start + i] += window[i] * window[i];
    }
  }
  std::vector<double> out(out_len, 0.0);
  for (size_t n = 0; n < out_len; ++n) {
    const size_t p = n + half;
    if (p < padded_len && wsum[p] > 1e-10) out[n] = acc[p] / wsum[p];
  }
  return out;
}

Eigen::MatrixXd MelFilterbank(const SpectroConfig& cfg) {
  const int bins = cfg.lin_bins();
  const double fmax = cfg.sample_rate / 2.0;
  const double mel_max = HzToMel(fmax);
  const double mel_min = HzToMel(0.0);
  std::vector<double> mel_f(static_cast<size_t>(cfg.n_mels + 2));
  for (size_t i = 0; i < mel_f.size(); ++i) {
    mel_f[i] = MelToHz(mel_min + (mel_max - mel_min) * static_cast<double>(i) /
                                     static_cast<double>(cfg.n_mels + 1));
  }
  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(cfg.n_mels, bins);
  for (int m = 0; m < cfg.n_mels; ++m) {
    const double lo = mel_f[static_cast<size_t>(m)];
    const double mid = mel_f[static_cast<size_t>(m) + 1];
    const double hi = mel_f[static_cast<size_t>(m) + 2];
    const double enorm = 2.0 / (hi - lo);
    for (int k = 0; k < bins; ++k) {
      const double f = fmax * k / (bins - 1);
      const double lower = (f - lo) / (mid - lo);
      const double upper = (hi - f) / (hi - mid);
      fb(m, k) = std::max(0.0, std::min(lower, upper)) * enorm;
    }
  }
  return fb;
}

double NormalizeMagnitude(double magnitude, const SpectroConfig& cfg) {
  const double db = 20.0 * std::log10(std::max(kAmplitudeFloor, magnitude));
  return std::clamp((db - cfg.ref_db + cfg.max_db) / cfg.max_db, 0.0, 1.0);
}

double DenormalizeToMagnitude(double normalized, const SpectroConfig& cfg) {
  const double db = std::clamp(normalized, 0.0, 1.0) * cfg.max_db - cfg.max_db + cfg.ref_db;
  return std::pow(10.0, db / 20.0);
}

Features ExtractFeatures(const AudioBuffer& buf, const SpectroConfig& cfg) {
  if (buf.rate != cfg.sample_rate) {
    throw Error(ErrorCode::kRateMismatch,
                fmt::format("buffer rate {} != config rate {}", buf.rate, cfg.sample_rate));
  }
  if (buf.samples.empty()) throw Error(ErrorCode::kEmptyInput, "extract_features: empty buffer");

  const auto emphasized = PreEmphasis(buf.samples, cfg.preemph);
  const Eigen::MatrixXd mag = Magnitude(Stft(emphasized, cfg));
  const Eigen::MatrixXd mel_mag = mag * MelFilterbank(cfg).transpose();

  const Eigen::Index frames = mag.rows();
  const Eigen::Index r = cfg.reduction;
  const Eigen::Index padded = (frames + r - 1) / r * r;

  Features out;
  out.lin.frames = Eigen::MatrixXd::Zero(padded, mag.cols());
  out.lin.frames.topRows(frames) = NormalizeMatrix(mag, cfg);

  const Eigen::MatrixXd mel_norm = NormalizeMatrix(mel_mag, cfg);
  out.mel.hop_effective = cfg.hop_effective();
  out.mel.frames = Eigen::MatrixXd::Zero(padded / r, cfg.n_mels);
  for (Eigen::Index t = 0; t < padded / r; ++t) {
    // Decimation: keep every r-th frame; padded frames stay at the 0 floor.
    if (t * r < frames) out.mel.frames.row(t) = mel_norm.row(t * r);
  }
  return out;
}

double SpectralConvergence(std::span<const double> signal, const Eigen::MatrixXd& target_mag,
                           const SpectroConfig& cfg) {
  const Eigen::MatrixXd mag = Magnitude(Stft(signal, cfg));
  if (mag.rows() != target_mag.rows() || mag.cols() != target_mag.cols()) {
    throw Error(ErrorCode::kShapeMismatch,
                fmt::format("spectral convergence: {}x{} vs {}x{}", mag.rows(), mag.cols(),
                            target_mag.rows(), target_mag.cols()));
  }
  const double denom = target_mag.norm();
  if (denom == 0.0) return mag.norm() == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return (mag - target_mag).norm() / denom;
}

std::vector<double> GriffinLim(const Eigen::MatrixXd& magnitude, int iterations,
                               const SpectroConfig& cfg, const GriffinLimObserver& observer) {
  ComplexMatrix estimate = magnitude.cast<std::complex<double>>();
  std::vector<double> signal = Istft(estimate, cfg);
  if (observer) observer(0, signal);
  for (int it = 1; it <= iterations; ++it) {
    const ComplexMatrix rebuilt = Stft(signal, cfg);
    for (Eigen::Index i = 0; i < estimate.rows(); ++i) {
      for (Eigen::Index k = 0; k < estimate.cols(); ++k) {
        const std::complex<double> z = rebuilt(i, k);
        const double a = std::abs(z);
        const std::complex<double> phase = a > 1e-8 ? z / a : std::complex<double>(1.0, 0.0);
        estimate(i, k) = magnitude(i, k) * phase;
      }
    }
    signal = Istft(estimate, cfg);
    if (observer) observer(it, signal);
  }
  return signal;
}

AudioBuffer InvertSpectrogram(const LinSpectrogram& spec, const SpectroConfig& cfg) {
  if (spec.frames.cols() != cfg.lin_bins()) {
    throw Error(ErrorCode::kShapeMismatch,
                fmt::format("expected {} bins, got {}", cfg.lin_bins(), spec.frames.cols()));
  }
  const Eigen::MatrixXd mag = spec.frames.unaryExpr([&](double v) {
    return std::pow(DenormalizeToMagnitude(v, cfg), cfg.sharpening);
  });
  const auto wav = GriffinLim(mag, cfg.gl_iters, cfg);
  AudioBuffer out;
  out.rate = cfg.sample_rate;
  out.samples = DeEmphasis(wav, cfg.preemph);
  for (double& s : out.samples) s = std::isfinite(s) ? std::clamp(s, -1.0, 1.0) : 0.0;
  return out;
}

}  // namespace emotts::dsp
