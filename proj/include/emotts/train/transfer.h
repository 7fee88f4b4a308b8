#ifndef EMOTTS_TRAIN_TRANSFER_H_
#define EMOTTS_TRAIN_TRANSFER_H_

#include <cstdint>
#include <vector>

#include "emotts/model/checkpoint.h"
#include "emotts/train/dataset.h"
#include "emotts/train/optimizer.h"

namespace emotts::train {

struct TransferOptions {
  model::ModelHyper hyper;
  dsp::SpectroConfig spectro;
  AdamConfig optimizer;
  size_t batch_size = 4;
  int64_t pretrain_steps = 1000;
  uint64_t pretrain_seed = 0;
  int64_t adapt_steps = 200;
  std::vector<uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
};

struct TransferTrial {
  uint64_t seed = 0;
  double finetuned_loss = 0.0;  // held-out loss starting from the pretrained model
  double random_loss = 0.0;     // held-out loss starting from random init
  bool finetuned_wins() const { return finetuned_loss < random_loss; }
};

struct TransferReport {
  double pretrained_loss = 0.0;  // held-out loss of the pretrained model before adaptation
  std::vector<TransferTrial> trials;
  size_t wins = 0;
  double win_rate = 0.0;
  // Pretraining and adaptation data are the same utterances.
  bool degenerate = false;
};

// Only Text2Mel is trained; SSRN does not affect the compared loss.
model::Checkpoint Pretrain(const Dataset& data, const TransferOptions& opt);

// Adapts `pretrained` and a fresh random model on `adapt` for each seed and
// compares teacher-forced Text2Mel loss on `held_out`.
TransferReport TransferExperiment(const model::Checkpoint& pretrained, const Dataset& pretrain,
                                  const Dataset& adapt, const Dataset& held_out,
                                  const TransferOptions& opt);

// Convenience overload that pretrains first.
TransferReport TransferExperiment(const Dataset& pretrain, const Dataset& adapt,
                                  const Dataset& held_out, const TransferOptions& opt);

}  // namespace emotts::train

#endif  // EMOTTS_TRAIN_TRANSFER_H_
