#ifndef EMOTTS_SYNTH_SYNTHESIS_H_
#define EMOTTS_SYNTH_SYNTHESIS_H_

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "emotts/dsp/audio.h"
#include "emotts/dsp/spectrogram.h"
#include "emotts/model/checkpoint.h"

namespace emotts::synth {

struct SynthesisOptions {
  int max_frames = 210;
  int window_back = 1;
  int window_ahead = 3;
  // Decoding stops once the final character has been attended and the mean
  // mel value stayed below `stop_energy` for `stop_frames` frames.
  double stop_energy = 0.05;
  int stop_frames = 3;

  void Validate() const;
};

struct MelSynthesis {
  dsp::MelSpectrogram mel;         // T' x n_mels
  model::Matrix attention;         // N x T'
  std::vector<int> positions;      // attended text position per frame
  std::vector<int> ids;            // encoded text incl. EOS
  bool stopped_on_energy = false;  // false when the frame cap ended decoding
};

// Autoregressive Text2Mel decoding with a forced monotonic attention window.
// Frame 0 attends position 0; frame t may attend [p_{t-1} - back, p_{t-1} + ahead].
// The attended position p_t is the running maximum of the per-frame argmax, so
// the position sequence never moves backwards.
// Throws EmptyText, NoAlignment.
MelSynthesis SynthesizeMel(const model::Checkpoint& ckpt, const std::string& text,
                           const SynthesisOptions& opts = {});

// Text2Mel, SSRN and Griffin-Lim. Samples are clipped to [-1, 1].
dsp::AudioBuffer Synthesize(const model::Checkpoint& ckpt, const std::string& text,
                            const SynthesisOptions& opts = {}, MelSynthesis* mel_out = nullptr);

// mean_t |p_t / N - t / T'| with p_t the argmax of attention column t.
double AttentionDiagonality(const model::Matrix& attention);

struct BatchItem {
  size_t index = 0;
  std::string text;
  std::filesystem::path wav_path;  // empty on failure
  std::string status;              // "ok" or an error name
  int frames = 0;
};

// Produces audio for one text and reports the number of mel frames.
using SynthesizeFn = std::function<dsp::AudioBuffer(const std::string& text, int* frames)>;

// One WAV per text (`<out_dir>/<index>.wav`) plus `<out_dir>/report.csv` with
// `index,text,wav_path,status,frames`. Per-item failures are recorded and do
// not abort the batch. Throws UnwritableOutput.
std::vector<BatchItem> BatchSynthesize(const std::vector<std::string>& texts,
                                       const std::filesystem::path& out_dir,
                                       const SynthesizeFn& synthesize);
std::vector<BatchItem> BatchSynthesize(const model::Checkpoint& ckpt,
                                       const std::vector<std::string>& texts,
                                       const std::filesystem::path& out_dir,
                                       const SynthesisOptions& opts = {});

std::string BatchReportCsv(const std::vector<BatchItem>& items);

}  // namespace emotts::synth

#endif  // EMOTTS_SYNTH_SYNTHESIS_H_
