#ifndef EMOTTS_TRAIN_STAGE_H_
#define EMOTTS_TRAIN_STAGE_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "emotts/common/kv_file.h"
#include "emotts/model/checkpoint.h"
#include "emotts/train/dataset.h"
#include "emotts/train/objective.h"
#include "emotts/train/optimizer.h"

namespace emotts::train {

inline constexpr const char* kText2Mel = "text2mel";
inline constexpr const char* kSsrn = "ssrn";

enum class InitKind { kRandom, kCheckpoint };

// Which Text2Mel tensors a stage updates when text2mel is trainable.
enum class Text2MelSubset { kAll, kAudioOnly };

// A declarative training stage, stored as a flat `key = value` file:
//
//   name = adapt-neutral
//   init = checkpoint
//   init_checkpoint = ../pretrain/final
//   trainable = text2mel
//   manifest = neutral_small.csv
//   max_steps = 1000
//   out_dir = runs/adapt-neutral
//
// `init` is `random` (with `init_seed`) or `checkpoint`. `trainable` is a comma
// separated module list; `frozen` may be given instead. `text2mel_subset` is
// `all` or `audio_only`. Optimizer keys: lr, beta1, beta2, eps, clip_norm.
// Other keys: batch_size, checkpoint_every, seed. `hyper.<field>` and
// `spectro.<field>` pin model/feature settings; otherwise the init
// checkpoint's settings are used. Relative paths resolve against the
// directory of the config file.
struct StageSpec {
  std::string name;
  InitKind init = InitKind::kRandom;
  uint64_t init_seed = 0;
  std::filesystem::path init_checkpoint;
  std::set<std::string> trainable{kText2Mel};
  Text2MelSubset text2mel_subset = Text2MelSubset::kAll;
  std::filesystem::path manifest_path;
  AdamConfig optimizer;
  size_t batch_size = 16;
  int64_t max_steps = 0;
  int64_t checkpoint_every = 0;
  uint64_t seed = 0;
  std::filesystem::path out_dir;
  std::optional<model::ModelHyper> hyper;
  std::optional<dsp::SpectroConfig> spectro;

  std::set<std::string> frozen() const;
  bool IsTrainable(const std::string& module) const { return trainable.count(module) > 0; }

  // InvalidConfig on broken invariants; NothingTrainable when steps > 0 and
  // every module is frozen.
  void Validate() const;

  static StageSpec FromKeyValue(const KeyValueFile& kv,
                                const std::filesystem::path& base_dir = {});
  static StageSpec Load(const std::filesystem::path& path);
  KeyValueFile ToKeyValue() const;
};

struct LossRecord {
  int64_t step = 0;
  LossBreakdown loss;
};

struct StageResult {
  model::Checkpoint checkpoint;
  std::vector<LossRecord> log;
  std::filesystem::path final_path;  // empty when nothing was written
};

using StageObserver = std::function<void(const LossRecord&)>;

// Resolves spec.init. ConfigMismatch when the checkpoint disagrees with
// explicitly configured hyper/spectro settings.
model::Checkpoint ResolveInit(const StageSpec& spec);

// Full stage from files: loads the manifest and init, trains, and writes
// `<out_dir>/step-NNNNNN`, `<out_dir>/final` and `<out_dir>/loss_log.csv`.
StageResult RunStage(const StageSpec& spec, const StageObserver& observer = {});

// In-memory core. Writes only when spec.out_dir is set.
StageResult RunStage(const StageSpec& spec, const model::Checkpoint& init,
                     const Dataset& data, const StageObserver& observer = {});

std::string LossLogCsv(const std::vector<LossRecord>& log);

}  // namespace emotts::train

#endif  // EMOTTS_TRAIN_STAGE_H_
