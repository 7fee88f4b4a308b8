#include "emotts/train/transfer.h"

#include <spdlog/spdlog.h>

#include <set>

#include "emotts/train/objective.h"
#include "emotts/train/stage.h"

namespace emotts::train {
namespace {

StageSpec Text2MelStage(const std::string& name, const TransferOptions& opt, int64_t steps,
                        uint64_t seed) {
  StageSpec s;
  s.name = name;
  s.trainable = {kText2Mel};
  s.optimizer = opt.optimizer;
  s.batch_size = opt.batch_size;
  s.max_steps = steps;
  s.seed = seed;
  s.hyper = opt.hyper;
  s.spectro = opt.spectro;
  return s;
}

bool SameUtterances(const Dataset& a, const Dataset& b) {
  if (a.size() != b.size()) return false;
  std::multiset<std::vector<int>> ta;
  std::multiset<std::vector<int>> tb;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a.examples[i].id != b.examples[i].id) return false;
    ta.insert(a.examples[i].char_ids);
    tb.insert(b.examples[i].char_ids);
  }
  return ta == tb;
}

}  // namespace

model::Checkpoint Pretrain(const Dataset& data, const TransferOptions& opt) {
  const model::Checkpoint init = model::InitCheckpoint(opt.hyper, opt.spectro, opt.pretrain_seed);
  return RunStage(Text2MelStage("pretrain", opt, opt.pretrain_steps, opt.pretrain_seed), init,
                  data)
      .checkpoint;
}

TransferReport TransferExperiment(const model::Checkpoint& pretrained, const Dataset& pretrain,
                                  const Dataset& adapt, const Dataset& held_out,
                                  const TransferOptions& opt) {
  TransferReport report;
  report.degenerate = SameUtterances(pretrain, adapt);
  if (report.degenerate) {
    spdlog::warn("transfer experiment: pretraining and adaptation sets are identical");
  }
  report.pretrained_loss = MeanText2MelLoss(pretrained.text2mel, pretrained.hyper, held_out);
  for (uint64_t seed : opt.seeds) {
    TransferTrial t;
    t.seed = seed;
    const StageSpec stage = Text2MelStage("adapt", opt, opt.adapt_steps, seed);
    const auto tuned = RunStage(stage, pretrained, adapt).checkpoint;
    t.finetuned_loss = MeanText2MelLoss(tuned.text2mel, tuned.hyper, held_out);
    const model::Checkpoint fresh = model::InitCheckpoint(opt.hyper, opt.spectro, seed);
    const auto scratch = RunStage(stage, fresh, adapt).checkpoint;
    t.random_loss = MeanText2MelLoss(scratch.text2mel, scratch.hyper, held_out);
    spdlog::info("transfer seed {}: fine-tuned {:.5f} random {:.5f}", seed, t.finetuned_loss,
                 t.random_loss);
    if (t.finetuned_wins()) ++report.wins;
    report.trials.push_back(t);
  }
  report.win_rate = report.trials.empty()
                        ? 0.0
                        : static_cast<double>(report.wins) / static_cast<double>(report.trials.size());
  return report;
}

TransferReport TransferExperiment(const Dataset& pretrain, const Dataset& adapt,
                                  const Dataset& held_out, const TransferOptions& opt) {
  return TransferExperiment(Pretrain(pretrain, opt), pretrain, adapt, held_out, opt);
}

}  // namespace emotts::train
