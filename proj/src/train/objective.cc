#include "emotts/train/objective.h"

#include <numeric>

#include "emotts/common/error.h"

namespace emotts::train {
namespace {

std::vector<int> Prefix(const std::vector<int>& ids, int n) {
  return {ids.begin(), ids.begin() + n};
}

}  // namespace

LossBreakdown Text2MelLoss(const model::ParamSet& params, const model::ModelHyper& h,
                           const Batch& batch, std::vector<Matrix>* grads,
                           const std::vector<bool>* trainable) {
  if (batch.size() == 0) throw Error(ErrorCode::kEmptyBatch, "batch has no items");
  const double inv = 1.0 / static_cast<double>(batch.size());
  LossBreakdown out;
  for (size_t i = 0; i < batch.size(); ++i) {
    const int n = batch.text_lengths[i];
    const int t = batch.mel_lengths[i];
    model::Tape tape(grads != nullptr);
    model::BoundParams p(tape, params, grads, trainable);
    const auto text = model::EncodeTextGraph(tape, p, h, Prefix(batch.char_ids[i], n));
    const Matrix shifted = batch.mel_shifted[i].topRows(t).transpose();
    const auto dec = model::DecodeAudioGraph(tape, p, h, text, tape.Constant(shifted));
    const Matrix target = batch.mel_target[i].topRows(t).transpose();
    const auto spec = tape.SpectrogramLoss(dec.logits, target);
    const model::Var attn = tape.GuidedAttentionLoss(dec.attention, h.guided_g);
    const model::Var total = tape.Sum({spec.total, attn}, inv);
    out.total += tape.value(total)(0, 0);
    out.l1 += spec.l1 * inv;
    out.ce += spec.ce * inv;
    out.attn += tape.value(attn)(0, 0) * inv;
    if (grads != nullptr) tape.Backward(total);
  }
  return out;
}

LossBreakdown SsrnLoss(const model::ParamSet& params, const model::ModelHyper& h,
                       const Batch& batch, std::vector<Matrix>* grads,
                       const std::vector<bool>* trainable) {
  if (batch.size() == 0) throw Error(ErrorCode::kEmptyBatch, "batch has no items");
  if (batch.lin_target.size() != batch.size()) {
    throw Error(ErrorCode::kShapeMismatch, "batch carries no linear targets");
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  LossBreakdown out;
  for (size_t i = 0; i < batch.size(); ++i) {
    const int t = batch.mel_lengths[i];
    model::Tape tape(grads != nullptr);
    model::BoundParams p(tape, params, grads, trainable);
    const Matrix mel = batch.mel_target[i].topRows(t).transpose();
    const model::Var logits = model::SsrnGraph(tape, p, h, tape.Constant(mel));
    const Matrix target = batch.lin_target[i].topRows(t * h.reduction).transpose();
    const auto spec = tape.SpectrogramLoss(logits, target);
    const model::Var total = tape.Sum({spec.total}, inv);
    out.total += tape.value(total)(0, 0);
    out.l1 += spec.l1 * inv;
    out.ce += spec.ce * inv;
    if (grads != nullptr) tape.Backward(total);
  }
  return out;
}

double MeanText2MelLoss(const model::ParamSet& params, const model::ModelHyper& h,
                        const Dataset& data) {
  if (data.empty()) throw Error(ErrorCode::kEmptyManifest, "no examples to evaluate");
  double sum = 0.0;
  for (size_t i = 0; i < data.size(); ++i) {
    sum += Text2MelLoss(params, h, MakeBatch(data, {i})).total;
  }
  return sum / static_cast<double>(data.size());
}

}  // namespace emotts::train
