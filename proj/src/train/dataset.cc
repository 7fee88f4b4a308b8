#include "emotts/train/dataset.h"

#include <fmt/format.h>

#include <algorithm>
#include <numeric>

#include "emotts/common/error.h"
#include "emotts/common/random.h"
#include "emotts/corpus/text.h"
#include "emotts/dsp/audio.h"
#include "emotts/model/networks.h"

namespace emotts::train {

Example MakeExample(const std::string& id, const std::string& normalized_text,
                    const dsp::AudioBuffer& audio, const dsp::SpectroConfig& cfg,
                    bool with_linear) {
  Example ex;
  ex.id = id;
  ex.char_ids = corpus::EncodeText(normalized_text);
  dsp::Features f = dsp::ExtractFeatures(audio, cfg);
  ex.mel = std::move(f.mel.frames);
  if (with_linear) ex.lin = std::move(f.lin.frames);
  return ex;
}

Dataset LoadDataset(const corpus::Manifest& manifest, const dsp::SpectroConfig& cfg,
                    bool with_linear) {
  Dataset data;
  for (const auto& u : manifest.utterances) {
    if (u.nve_status == corpus::NveStatus::kExcluded) continue;
    const dsp::AudioBuffer audio = dsp::LoadAudio(u.audio_path, cfg.sample_rate);
    data.examples.push_back(MakeExample(u.id, u.transcript_norm, audio, cfg, with_linear));
  }
  return data;
}

int Batch::PaddingFrames() const {
  int pad = 0;
  for (size_t i = 0; i < size(); ++i) {
    pad += static_cast<int>(mel_target[i].rows()) - mel_lengths[i];
  }
  return pad;
}

Eigen::MatrixXd Batch::MelMask() const {
  const Eigen::Index frames = mel_target.empty() ? 0 : mel_target[0].rows();
  Eigen::MatrixXd mask = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(size()), frames);
  for (size_t i = 0; i < size(); ++i) {
    mask.row(static_cast<Eigen::Index>(i)).head(mel_lengths[i]).setOnes();
  }
  return mask;
}

Batch MakeBatch(const Dataset& data, const std::vector<size_t>& indices) {
  Batch b;
  b.indices = indices;
  int max_text = 0;
  Eigen::Index max_frames = 0;
  for (size_t idx : indices) {
    const Example& ex = data.examples.at(idx);
    max_text = std::max(max_text, static_cast<int>(ex.char_ids.size()));
    max_frames = std::max(max_frames, ex.mel.rows());
  }
  for (size_t idx : indices) {
    const Example& ex = data.examples[idx];
    std::vector<int> ids = ex.char_ids;
    ids.resize(static_cast<size_t>(max_text), corpus::Charset::kPad);
    b.char_ids.push_back(std::move(ids));
    b.text_lengths.push_back(static_cast<int>(ex.char_ids.size()));
    b.mel_lengths.push_back(static_cast<int>(ex.mel.rows()));

    Matrix mel = Matrix::Zero(max_frames, ex.mel.cols());
    mel.topRows(ex.mel.rows()) = ex.mel;
    b.mel_shifted.push_back(model::ShiftMel(mel));
    b.mel_target.push_back(std::move(mel));
    if (ex.lin.size() > 0) {
      const Eigen::Index r = ex.mel.rows() > 0 ? ex.lin.rows() / ex.mel.rows() : 1;
      Matrix lin = Matrix::Zero(max_frames * r, ex.lin.cols());
      lin.topRows(ex.lin.rows()) = ex.lin;
      b.lin_target.push_back(std::move(lin));
    }
  }
  return b;
}

std::vector<Batch> MakeBatches(const Dataset& data, size_t batch_size, uint64_t seed,
                               uint64_t epoch) {
  if (batch_size == 0) throw Error(ErrorCode::kInvalidConfig, "batch_size must be >= 1");
  std::vector<size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(MixSeed(seed, epoch));
  rng.Shuffle(order);
  // Bucket by mel length; ties keep the shuffled order.
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return data.examples[a].mel.rows() < data.examples[b].mel.rows();
  });
  std::vector<std::vector<size_t>> groups;
  for (size_t i = 0; i < order.size(); i += batch_size) {
    groups.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                        order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), i + batch_size)));
  }
  rng.Shuffle(groups);
  std::vector<Batch> batches;
  batches.reserve(groups.size());
  for (const auto& g : groups) batches.push_back(MakeBatch(data, g));
  return batches;
}

BatchStream::BatchStream(const Dataset& data, size_t batch_size, uint64_t seed)
    : data_(data), batch_size_(batch_size), seed_(seed) {
  if (data.empty()) throw Error(ErrorCode::kEmptyManifest, "no training examples");
  current_ = MakeBatches(data_, batch_size_, seed_, epoch_);
}

const Batch& BatchStream::Next() {
  if (pos_ == current_.size()) {
    ++epoch_;
    current_ = MakeBatches(data_, batch_size_, seed_, epoch_);
    pos_ = 0;
  }
  return current_[pos_++];
}

}  // namespace emotts::train
