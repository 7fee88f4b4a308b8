#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <fstream>
#include <map>
#include <unsupported/Eigen/FFT>

#include "emotts/common/error.h"
#include "emotts/common/kv_file.h"
#include "emotts/common/random.h"
#include "emotts/dsp/audio.h"
#include "emotts/dsp/spectrogram.h"
#include "test_util.h"

namespace emotts::dsp {
namespace {

using emotts::testing::TempDir;

std::vector<double> Tone(double hz, size_t n, int rate, double amp = 0.5) {
  std::vector<double> x(n);
  for (size_t i = 0; i < n; ++i) x[i] = amp * std::sin(2.0 * M_PI * hz * i / rate);
  return x;
}

AudioBuffer Buffer(std::vector<double> samples, int rate = 22050) {
  AudioBuffer b;
  b.samples = std::move(samples);
  b.rate = rate;
  return b;
}

double PeakHz(const std::vector<double>& x, int rate) {
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, x);
  size_t best = 1;
  for (size_t k = 1; k < x.size() / 2; ++k) {
    if (std::abs(spec[k]) > std::abs(spec[best])) best = k;
  }
  return static_cast<double>(best) * rate / static_cast<double>(x.size());
}

SpectroConfig SmallConfig() {
  SpectroConfig c;
  c.sample_rate = 1000;
  c.n_fft = 16;
  c.hop = 4;
  c.win = 12;
  c.n_mels = 4;
  c.reduction = 2;
  return c;
}

TEST(Stft, MatchesDirectDft) {
  const SpectroConfig cfg = SmallConfig();
  Rng rng(3);
  std::vector<double> x(37);
  for (double& v : x) v = rng.Uniform(-1, 1);
  const ComplexMatrix s = Stft(x, cfg);
  ASSERT_EQ(s.rows(), 37 / 4 + 1);
  ASSERT_EQ(s.cols(), 9);
  for (Eigen::Index t = 0; t < s.rows(); ++t) {
    for (int k = 0; k <= 8; ++k) {
      std::complex<double> acc = 0.0;
      for (int i = 0; i < 16; ++i) {
        const long idx = t * 4 - 8 + i;
        const double sample = (idx >= 0 && idx < 37) ? x[static_cast<size_t>(idx)] : 0.0;
        const int n = i - 2;  // window of 12 centered in 16
        const double w = (n >= 0 && n < 12) ? 0.5 - 0.5 * std::cos(2 * M_PI * n / 12.0) : 0.0;
        acc += sample * w * std::polar(1.0, -2.0 * M_PI * k * i / 16.0);
      }
      EXPECT_NEAR(std::abs(s(t, k) - acc), 0.0, 1e-10) << t << "," << k;
    }
  }
}

TEST(Stft, FrameCount) {
  const SpectroConfig cfg;
  for (size_t len : {1u, 275u, 276u, 277u, 22050u}) {
    std::vector<double> x(len, 0.1);
    EXPECT_EQ(static_cast<size_t>(Stft(x, cfg).rows()), len / 276 + 1);
  }
}

TEST(Stft, InverseRoundTrip) {
  const SpectroConfig cfg;
  const auto x = Tone(300, 5000, 22050);
  const auto y = Istft(Stft(x, cfg), cfg, x.size());
  ASSERT_EQ(y.size(), x.size());
  for (size_t i = 0; i < x.size(); ++i) ASSERT_NEAR(x[i], y[i], 1e-9);
}

TEST(MelFilterbank, ShapeAndSupport) {
  const SpectroConfig cfg;
  const Eigen::MatrixXd fb = MelFilterbank(cfg);
  ASSERT_EQ(fb.rows(), 80);
  ASSERT_EQ(fb.cols(), 1025);
  EXPECT_GE(fb.minCoeff(), 0.0);
  int prev_peak = -1;
  for (Eigen::Index m = 0; m < fb.rows(); ++m) {
    Eigen::Index peak;
    fb.row(m).maxCoeff(&peak);
    EXPECT_GE(peak, prev_peak);
    prev_peak = static_cast<int>(peak);
    // Nonzero support is contiguous.
    int runs = 0;
    for (Eigen::Index k = 0; k < fb.cols(); ++k) {
      if (fb(m, k) > 0 && (k == 0 || fb(m, k - 1) == 0)) ++runs;
    }
    EXPECT_LE(runs, 1) << m;
  }
}

TEST(MelFilterbank, SlaneyBreakPoint) {
  // Below 1 kHz the Slaney scale is linear: filter centres are equally spaced.
  SpectroConfig cfg;
  cfg.sample_rate = 1600;  // mel(800 Hz) = 12
  cfg.n_fft = 1600;        // 1 Hz bins
  cfg.win = 1600;
  cfg.n_mels = 11;         // edges every mel unit = 66.67 Hz
  const Eigen::MatrixXd fb = MelFilterbank(cfg);
  for (Eigen::Index m = 0; m < fb.rows(); ++m) {
    Eigen::Index peak;
    fb.row(m).maxCoeff(&peak);
    EXPECT_NEAR(static_cast<double>(peak), (m + 1) * 200.0 / 3.0, 1.0);
    // Area normalization: the triangle integrates to 1 over Hz.
    EXPECT_NEAR(fb.row(m).sum(), 1.0, 0.02);
  }
}

TEST(Normalize, Examples) {
  const SpectroConfig cfg;
  EXPECT_DOUBLE_EQ(NormalizeMagnitude(1.0, cfg), 0.8);
  EXPECT_DOUBLE_EQ(NormalizeMagnitude(10.0, cfg), 1.0);
  EXPECT_DOUBLE_EQ(NormalizeMagnitude(1e3, cfg), 1.0);
  EXPECT_DOUBLE_EQ(NormalizeMagnitude(0.0, cfg), 0.0);
  EXPECT_NEAR(NormalizeMagnitude(0.01, cfg), 0.4, 1e-12);
  EXPECT_NEAR(DenormalizeToMagnitude(0.4, cfg), 0.01, 1e-12);
}

TEST(Normalize, Monotone) {
  const SpectroConfig cfg;
  double prev = -1;
  for (double m = 1e-7; m < 100; m *= 1.3) {
    const double v = NormalizeMagnitude(m, cfg);
    EXPECT_GE(v, prev);
    prev = v;
  }
  const auto x = Tone(440, 4000, 22050, 0.2);
  std::vector<double> louder(x);
  for (double& v : louder) v *= 2;
  const auto a = ExtractFeatures(Buffer(x), cfg);
  const auto b = ExtractFeatures(Buffer(louder), cfg);
  EXPECT_TRUE(((b.lin.frames - a.lin.frames).array() >= 0).all());
  EXPECT_TRUE(((b.mel.frames - a.mel.frames).array() >= 0).all());
}

TEST(Features, SilenceIsFloor) {
  const SpectroConfig cfg;
  const auto f = ExtractFeatures(Buffer(std::vector<double>(5000, 0.0)), cfg);
  EXPECT_EQ(f.mel.frames.maxCoeff(), 0.0);
  EXPECT_EQ(f.lin.frames.maxCoeff(), 0.0);
}

TEST(Features, ShapesFollowFramingRule) {
  const SpectroConfig cfg;
  for (size_t len : {100u, 276u, 1103u, 4000u, 22050u}) {
    const auto f = ExtractFeatures(Buffer(Tone(220, len, 22050)), cfg);
    const size_t t = len / 276 + 1;
    const size_t tp = (t + 3) / 4;
    EXPECT_EQ(static_cast<size_t>(f.mel.num_frames()), tp) << len;
    EXPECT_EQ(f.lin.num_frames(), 4 * f.mel.num_frames());
    EXPECT_EQ(f.mel.frames.cols(), 80);
    EXPECT_EQ(f.lin.frames.cols(), 1025);
    EXPECT_EQ(f.mel.hop_effective, 1104);
    EXPECT_GE(f.mel.frames.minCoeff(), 0.0);
    EXPECT_LE(f.mel.frames.maxCoeff(), 1.0);
  }
}

TEST(Features, RateMismatch) {
  try {
    ExtractFeatures(Buffer(Tone(220, 1000, 16000), 16000), SpectroConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kRateMismatch);
  }
}

TEST(Features, TrailingZerosAddAtMostOneFrame) {
  const SpectroConfig cfg;
  Rng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    // Ends on an exact zero so pre-emphasis does not leak into the appended samples.
    std::vector<double> x = Tone(180 + 40 * trial, 6000 + 37 * trial, 22050);
    x.back() = 0.0;
    const auto base = ExtractFeatures(Buffer(x), cfg);
    std::vector<double> y = x;
    y.resize(x.size() + rng.Below(276), 0.0);
    const auto ext = ExtractFeatures(Buffer(y), cfg);
    const Eigen::Index common = std::min(base.lin.num_frames(), ext.lin.num_frames());
    EXPECT_LE(std::abs(ext.lin.num_frames() - base.lin.num_frames()), 4);  // one coarse frame
    EXPECT_LE(std::abs(ext.mel.num_frames() - base.mel.num_frames()), 1);
    const Eigen::Index t_base = static_cast<Eigen::Index>(x.size() / 276 + 1);
    const Eigen::Index valid = std::min(common, t_base);
    EXPECT_TRUE(base.lin.frames.topRows(valid).isApprox(ext.lin.frames.topRows(valid), 1e-12));
  }
}

TEST(Features, Pure) {
  const SpectroConfig cfg;
  const auto buf = Buffer(Tone(330, 3000, 22050));
  const auto a = ExtractFeatures(buf, cfg);
  const auto b = ExtractFeatures(buf, cfg);
  EXPECT_EQ(a.mel.frames, b.mel.frames);
  EXPECT_EQ(a.lin.frames, b.lin.frames);
}

TEST(Trim, AllZerosRaises) {
  try {
    TrimSilence(Buffer(std::vector<double>(22050, 0.0)), 20.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyAfterTrim);
  }
}

TEST(Trim, RecoversOnsetOfPaddedTone) {
  std::vector<double> x(11025, 0.0);
  const auto tone = Tone(440, 22050, 22050, 1.0);
  x.insert(x.end(), tone.begin(), tone.end());
  x.resize(x.size() + 11025, 0.0);
  const auto out = TrimSilence(Buffer(x), 20.0);

  // Map the output back onto the input through the first non-zero sample.
  size_t onset = 0;
  while (x[onset] == 0.0) ++onset;
  size_t offset = 0;
  while (offset < out.samples.size() && out.samples[offset] == 0.0) ++offset;
  const long start_in_input = static_cast<long>(onset) - static_cast<long>(offset);
  EXPECT_LE(std::abs(start_in_input - 11025), 276);
  EXPECT_NEAR(static_cast<double>(out.samples.size()), 22050.0, 552.0);
}

TEST(Trim, FullToneUnchanged) {
  const auto x = Tone(440, 22080, 22050, 1.0);
  const auto out = TrimSilence(Buffer(x), 20.0);
  EXPECT_EQ(out.samples, x);
}

TEST(Trim, Idempotent) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(rng.Below(3000));
    const auto tone = Tone(100 + rng.Below(2000), 500 + rng.Below(5000), 22050,
                           rng.Uniform(0.01, 1.0));
    x.insert(x.end(), tone.begin(), tone.end());
    x.resize(x.size() + rng.Below(3000), 0.0);
    for (double& v : x) v += rng.Uniform(-1e-4, 1e-4);
    const auto once = TrimSilence(Buffer(x), 20.0);
    const auto twice = TrimSilence(once, 20.0);
    EXPECT_EQ(once.samples, twice.samples) << trial;
  }
}

TEST(Resample, Identity) {
  const auto x = Tone(440, 1000, 22050);
  EXPECT_EQ(Resample(Buffer(x), 22050).samples, x);
}

TEST(Resample, HalvingKeepsPeak) {
  const auto in = Buffer(Tone(440, 44100, 44100), 44100);
  const auto out = Resample(in, 22050);
  EXPECT_EQ(out.rate, 22050);
  EXPECT_NEAR(static_cast<double>(out.samples.size()), 22050.0, 1.0);
  EXPECT_NEAR(PeakHz(out.samples, 22050), 440.0, 5.0);
}

TEST(Resample, UpsamplingKeepsPeak) {
  const auto out = Resample(Buffer(Tone(1000, 16000, 16000), 16000), 22050);
  EXPECT_NEAR(static_cast<double>(out.samples.size()), 22050.0, 1.0);
  EXPECT_NEAR(PeakHz(out.samples, 22050), 1000.0, 5.0);
}

TEST(Wav, RoundTrip) {
  TempDir dir("wav");
  const auto x = Tone(440, 2000, 22050, 0.7);
  WriteWav(dir / "a.wav", Buffer(x));
  const auto info = ReadWavInfo(dir / "a.wav");
  EXPECT_EQ(info.rate, 22050);
  EXPECT_EQ(info.channels, 1);
  EXPECT_EQ(info.bits_per_sample, 16);
  EXPECT_EQ(info.frames, 2000u);
  const auto y = ReadWav(dir / "a.wav");
  ASSERT_EQ(y.samples.size(), x.size());
  for (size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(y.samples[i], x[i], 1.0 / 32767);
}

void PutLe(std::ofstream& f, uint32_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) f.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

TEST(Wav, StereoFloatIsDownmixed) {
  TempDir dir("wav");
  const auto path = dir / "stereo.wav";
  {
    std::ofstream f(path, std::ios::binary);
    const uint32_t frames = 3;
    const uint32_t data_bytes = frames * 2 * 4;
    f.write("RIFF", 4);
    PutLe(f, 36 + data_bytes, 4);
    f.write("WAVEfmt ", 8);
    PutLe(f, 16, 4);
    PutLe(f, 3, 2);  // IEEE float
    PutLe(f, 2, 2);
    PutLe(f, 8000, 4);
    PutLe(f, 8000 * 8, 4);
    PutLe(f, 8, 2);
    PutLe(f, 32, 2);
    f.write("data", 4);
    PutLe(f, data_bytes, 4);
    const float samples[] = {0.5f, -0.5f, 1.0f, 0.0f, 0.25f, 0.75f};
    f.write(reinterpret_cast<const char*>(samples), sizeof(samples));
  }
  const auto buf = ReadWav(path);
  EXPECT_EQ(buf.rate, 8000);
  ASSERT_EQ(buf.samples.size(), 3u);
  EXPECT_DOUBLE_EQ(buf.samples[0], 0.0);
  EXPECT_DOUBLE_EQ(buf.samples[1], 0.5);
  EXPECT_DOUBLE_EQ(buf.samples[2], 0.5);
  EXPECT_EQ(LoadAudio(path, 16000).samples.size(), 6u);
}

TEST(Wav, Errors) {
  TempDir dir("wav");
  try {
    ReadWav(dir / "nope.wav");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingFile);
  }
  {
    std::ofstream f(dir / "junk.wav");
    f << "not a wav file at all";
  }
  try {
    ReadWav(dir / "junk.wav");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUndecodableAudio);
  }
}

TEST(Emphasis, InverseFilters) {
  const auto x = Tone(700, 300, 22050);
  const auto y = DeEmphasis(PreEmphasis(x, 0.97), 0.97);
  for (size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(x[i], y[i], 1e-12);
}

TEST(GriffinLim, RoundTripConverges) {
  const SpectroConfig cfg;
  std::vector<double> x(22050);
  for (size_t i = 0; i < x.size(); ++i) {
    x[i] = 0.4 * std::sin(2 * M_PI * 440 * i / 22050.0) + 0.3 * std::sin(2 * M_PI * 1320 * i / 22050.0);
  }
  const Eigen::MatrixXd mag = Stft(x, cfg).cwiseAbs();
  std::map<int, double> err;
  GriffinLim(mag, 60, cfg, [&](int it, const std::vector<double>& s) {
    if (it == 0 || it == 10 || it == 30 || it == 60) err[it] = SpectralConvergence(s, mag, cfg);
  });
  ASSERT_EQ(err.size(), 4u);
  EXPECT_LT(err[60], 0.1);
  EXPECT_LE(err[10], err[0]);
  EXPECT_LE(err[30], err[10]);
  EXPECT_LE(err[60], err[30]);
}

TEST(GriffinLim, ZeroIterationsIsZeroPhaseInverse) {
  SpectroConfig cfg;
  cfg.gl_iters = 0;
  cfg.preemph = 0.0;
  cfg.sharpening = 1.0;
  Rng rng(2);
  LinSpectrogram spec;
  spec.frames = Eigen::MatrixXd::NullaryExpr(8, 1025, [&] { return rng.Uniform(0.0, 0.6); });
  const auto out = InvertSpectrogram(spec, cfg);
  const Eigen::MatrixXd mag = spec.frames.unaryExpr([&](double v) { return DenormalizeToMagnitude(v, cfg); });
  const auto expect = Istft(mag.cast<std::complex<double>>(), cfg);
  ASSERT_EQ(out.samples.size(), expect.size());
  for (size_t i = 0; i < expect.size(); ++i) {
    EXPECT_NEAR(out.samples[i], std::clamp(expect[i], -1.0, 1.0), 1e-12);
  }
}

TEST(GriffinLim, FloorSpectrogramIsNearSilent) {
  SpectroConfig cfg;
  cfg.gl_iters = 5;
  LinSpectrogram spec;
  spec.frames = Eigen::MatrixXd::Zero(12, 1025);
  const auto out = InvertSpectrogram(spec, cfg);
  double peak = 0;
  for (double v : out.samples) {
    ASSERT_TRUE(std::isfinite(v));
    peak = std::max(peak, std::abs(v));
  }
  EXPECT_LT(peak, 1e-3);
}

TEST(SpectroConfig, ValidateAndRoundTrip) {
  SpectroConfig cfg;
  cfg.top_db = 25;
  EXPECT_EQ(SpectroConfig::FromKeyValue(KeyValueFile::Parse(cfg.ToKeyValue().Serialize())), cfg);
  SpectroConfig bad;
  bad.hop = 2000;
  EXPECT_THROW(bad.Validate(), Error);
  bad = {};
  bad.top_db = 0;
  EXPECT_THROW(bad.Validate(), Error);
}

}  // namespace
}  // namespace emotts::dsp
