#ifndef EMOTTS_TRAIN_DATASET_H_
#define EMOTTS_TRAIN_DATASET_H_

#include <cstdint>
#include <string>
#include <vector>

#include "emotts/corpus/manifest.h"
#include "emotts/dsp/spectrogram.h"
#include "emotts/model/tape.h"

namespace emotts::train {

using model::Matrix;

// One utterance ready for training: encoded text and its feature targets.
struct Example {
  std::string id;
  std::vector<int> char_ids;  // ends with EOS
  Matrix mel;                 // T' x n_mels
  Matrix lin;                 // (r T') x lin_bins; empty unless requested
};

struct Dataset {
  std::vector<Example> examples;

  size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }
};

// Loads audio at cfg.sample_rate and extracts features. Utterances marked
// excluded are skipped.
Dataset LoadDataset(const corpus::Manifest& manifest, const dsp::SpectroConfig& cfg,
                    bool with_linear);

// Builds an Example from in-memory audio (no trimming applied).
Example MakeExample(const std::string& id, const std::string& normalized_text,
                    const dsp::AudioBuffer& audio, const dsp::SpectroConfig& cfg,
                    bool with_linear);

// A padded mini-batch. Items are padded to the longest text / mel in the
// batch; the length vectors are the masks.
struct Batch {
  std::vector<size_t> indices;                 // into the dataset
  std::vector<std::vector<int>> char_ids;      // padded with PAD
  std::vector<Matrix> mel_target;              // T'_max x n_mels, zero padded
  std::vector<Matrix> mel_shifted;             // teacher-forcing input
  std::vector<Matrix> lin_target;              // (r T'_max) x lin_bins, empty when absent
  std::vector<int> text_lengths;
  std::vector<int> mel_lengths;

  size_t size() const { return indices.size(); }
  // Number of padded mel frames summed over items.
  int PaddingFrames() const;
  // 1 for valid positions, 0 for padding; items x T'_max.
  Eigen::MatrixXd MelMask() const;
};

Batch MakeBatch(const Dataset& data, const std::vector<size_t>& indices);

// One epoch of length-bucketed batches. Order depends only on (seed, epoch).
std::vector<Batch> MakeBatches(const Dataset& data, size_t batch_size, uint64_t seed,
                               uint64_t epoch = 0);

// Endless sequence of batches, epoch after epoch.
class BatchStream {
 public:
  BatchStream(const Dataset& data, size_t batch_size, uint64_t seed);
  const Batch& Next();
  uint64_t epoch() const { return epoch_; }

 private:
  const Dataset& data_;
  size_t batch_size_;
  uint64_t seed_;
  uint64_t epoch_ = 0;
  size_t pos_ = 0;
  std::vector<Batch> current_;
};

}  // namespace emotts::train

#endif  // EMOTTS_TRAIN_DATASET_H_
