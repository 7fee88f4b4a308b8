#ifndef EMOTTS_MODEL_NETWORKS_H_
#define EMOTTS_MODEL_NETWORKS_H_

#include <cstdint>
#include <string>
#include <vector>

#include "emotts/common/kv_file.h"
#include "emotts/model/tape.h"

namespace emotts::model {

struct ModelHyper {
  int embed_dim = 128;
  int hidden_dim = 256;
  int ssrn_dim = 512;
  int n_mels = 80;
  int lin_bins = 1025;
  int charset_size = 34;
  int reduction = 4;        // SSRN upsamples by this factor (a power of two)
  int dilation_cycles = 2;  // repeats of the 1,3,9,27 highway stack in the encoders
  double guided_g = 0.2;

  void Validate() const;
  KeyValueFile ToKeyValue() const;
  static ModelHyper FromKeyValue(const KeyValueFile& kv);
  bool operator==(const ModelHyper&) const = default;
};

enum class LayerKind { kConv, kHighway, kDeconv2 };

struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::kConv;
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 1;
  int dilation = 1;
  bool relu = false;
};

// Layer plans per sub-network; parameter names are "<layer>.w" / "<layer>.b".
std::vector<LayerSpec> TextEncoderPlan(const ModelHyper& h);
std::vector<LayerSpec> AudioEncoderPlan(const ModelHyper& h);
std::vector<LayerSpec> AudioDecoderPlan(const ModelHyper& h);
std::vector<LayerSpec> SsrnPlan(const ModelHyper& h);

inline constexpr const char* kEmbeddingName = "text_enc.embed";

// Uniform fan-in initialization: weights in (-1/sqrt(fan_in), 1/sqrt(fan_in)),
// zero biases, embedding in (-0.1, 0.1).
ParamSet InitText2Mel(const ModelHyper& h, uint64_t seed);
ParamSet InitSsrn(const ModelHyper& h, uint64_t seed);

// Parameters touched by the audio-only fine-tuning preset.
bool IsAudioSideParam(const std::string& name);

// Binds a ParamSet onto a tape. When `grads` is non-null it must be
// ZerosLike() of the set; parameters with trainable[i] == false get no sink.
class BoundParams {
 public:
  BoundParams(Tape& tape, const ParamSet& params, std::vector<Matrix>* grads = nullptr,
              const std::vector<bool>* trainable = nullptr);
  Var operator[](const std::string& name) const;

 private:
  const ParamSet& params_;
  std::vector<Var> vars_;
};

struct TextEncoding {
  Var keys;    // d x N
  Var values;  // d x N
};

struct Text2MelVars {
  Var logits;     // n_mels x T'
  Var attention;  // N x T'
};

TextEncoding EncodeTextGraph(Tape& tape, const BoundParams& p, const ModelHyper& h,
                             const std::vector<int>& ids);

// `mel_shifted` is n_mels x T' (channels x frames). Output frame t depends
// on mel_shifted frames <= t only.
Text2MelVars DecodeAudioGraph(Tape& tape, const BoundParams& p, const ModelHyper& h,
                              const TextEncoding& text, Var mel_shifted,
                              const AttentionWindows* windows = nullptr);

// n_mels x T' -> lin_bins x (reduction * T') logits.
Var SsrnGraph(Tape& tape, const BoundParams& p, const ModelHyper& h, Var mel);

// Convenience forward passes in the frames x bins layout used by features.
struct Text2MelResult {
  Matrix mel_pred;   // T' x n_mels, in (0, 1)
  Matrix attention;  // N x T'
};
// `mel_shifted` is T' x n_mels. Throws ShapeMismatch.
Text2MelResult Text2MelForward(const ParamSet& p, const ModelHyper& h, const std::vector<int>& ids,
                               const Matrix& mel_shifted,
                               const AttentionWindows* windows = nullptr);
// `mel` is T' x n_mels; result is (r T') x lin_bins in (0, 1).
Matrix SsrnForward(const ParamSet& p, const ModelHyper& h, const Matrix& mel);

// Target mel shifted right by one frame with a zero first frame (frames x bins).
Matrix ShiftMel(const Matrix& mel);

}  // namespace emotts::model

#endif  // EMOTTS_MODEL_NETWORKS_H_
