#ifndef EMOTTS_TESTS_TEST_UTIL_H_
#define EMOTTS_TESTS_TEST_UTIL_H_

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "emotts/corpus/mock_corpus.h"
#include "emotts/dsp/spectrogram.h"
#include "emotts/model/networks.h"
#include "emotts/train/dataset.h"

namespace emotts::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& p) const { return path_ / p; }

 private:
  std::filesystem::path path_;
};

// e=32, d=64, default spectrogram sizes.
model::ModelHyper MicroHyper();

// Small spectrogram settings (8 kHz, n_fft 256, 20 mels, r 2) for fast tests.
dsp::SpectroConfig TinySpectro();
model::ModelHyper TinyHyper(const dsp::SpectroConfig& cfg);

std::vector<std::string> ToyTranscripts();

// e=4, d=8, n_mels=5, lin_bins=9.
model::ModelHyper GradCheckHyper();
// Two random items with N = 6 / 4 characters and T' = 8 / 6 frames.
train::Batch GradCheckBatch(const model::ModelHyper& h, uint64_t seed);

struct GradCheckStats {
  size_t sampled = 0;
  size_t passed = 0;
  double max_rel = 0.0;
  double pass_rate() const { return sampled ? static_cast<double>(passed) / sampled : 0.0; }
};

using LossFn = std::function<double(const model::ParamSet&, std::vector<model::Matrix>*)>;

// Adds U(-amplitude, amplitude) to every entry. Fresh initializations have
// zero biases, which park ReLU inputs exactly on the kink.
model::ParamSet Jittered(model::ParamSet params, double amplitude, uint64_t seed);

// Fourth-order central differences (five-point stencil) with `step` on
// `samples` scalar entries chosen uniformly over all parameters; an entry
// passes when |a - n| / max(|a|, |n|) < tol (or both are below 1e-9).
GradCheckStats GradientCheck(model::ParamSet params, const LossFn& loss, size_t samples,
                             uint64_t seed, double step = 1e-3, double tol = 1e-3);

train::Dataset ToneDataset(const std::vector<std::string>& texts, const corpus::ToneVoice& voice,
                           const dsp::SpectroConfig& cfg, bool with_linear);

}  // namespace emotts::testing

#endif  // EMOTTS_TESTS_TEST_UTIL_H_
