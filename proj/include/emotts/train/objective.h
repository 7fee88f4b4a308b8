#ifndef EMOTTS_TRAIN_OBJECTIVE_H_
#define EMOTTS_TRAIN_OBJECTIVE_H_

#include <vector>

#include "emotts/model/networks.h"
#include "emotts/train/dataset.h"

namespace emotts::train {

struct LossBreakdown {
  double total = 0.0;
  double l1 = 0.0;
  double ce = 0.0;
  double attn = 0.0;
};

// Mean over batch items of L1 + BCE + guided attention. Each item is
// evaluated on its unpadded prefix, so padded positions never contribute.
// When `grads` is given (shaped like `params`) gradients are accumulated into it;
// `trainable` restricts which entries receive gradient.
LossBreakdown Text2MelLoss(const model::ParamSet& params, const model::ModelHyper& h,
                           const Batch& batch, std::vector<Matrix>* grads = nullptr,
                           const std::vector<bool>* trainable = nullptr);

// Mean over items of L1 + BCE between SSRN output and the linear target.
LossBreakdown SsrnLoss(const model::ParamSet& params, const model::ModelHyper& h,
                       const Batch& batch, std::vector<Matrix>* grads = nullptr,
                       const std::vector<bool>* trainable = nullptr);

// Teacher-forced Text2Mel loss averaged over a whole dataset.
double MeanText2MelLoss(const model::ParamSet& params, const model::ModelHyper& h,
                        const Dataset& data);

}  // namespace emotts::train

#endif  // EMOTTS_TRAIN_OBJECTIVE_H_
