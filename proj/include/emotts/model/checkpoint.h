#ifndef EMOTTS_MODEL_CHECKPOINT_H_
#define EMOTTS_MODEL_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "emotts/dsp/spectrogram.h"
#include "emotts/model/networks.h"

namespace emotts::model {

struct Checkpoint {
  ParamSet text2mel;
  ParamSet ssrn;
  int64_t step = 0;
  std::vector<std::string> lineage;
  ModelHyper hyper;
  dsp::SpectroConfig spectro;
};

// Fresh parameters for both networks; lineage = ["random"].
Checkpoint InitCheckpoint(const ModelHyper& hyper, const dsp::SpectroConfig& spectro,
                          uint64_t seed);

// Directory layout:
//   tensors.tsv          name <TAB> rows <TAB> cols <TAB> dtype
//   tensors/<name>.bin   little-endian float64, column-major
//   hyper.cfg, spectro.cfg, state.cfg (step, lineage)
// The directory is assembled under a temporary name and renamed into place.
void SaveCheckpoint(const Checkpoint& ckpt, const std::filesystem::path& dir);
Checkpoint LoadCheckpoint(const std::filesystem::path& dir);

// ConfigMismatch unless hyper and spectro configs agree.
void RequireSameConfigs(const Checkpoint& a, const ModelHyper& hyper,
                        const dsp::SpectroConfig& spectro, const std::string& context);

}  // namespace emotts::model

#endif  // EMOTTS_MODEL_CHECKPOINT_H_
