#include "emotts/model/networks.h"

#include <fmt/format.h>

#include <cmath>

#include "emotts/common/error.h"
#include "emotts/common/random.h"

namespace emotts::model {
namespace {

constexpr int kDilations[] = {1, 3, 9, 27};

LayerSpec Conv(std::string name, int in, int out, bool relu = false) {
  return {std::move(name), LayerKind::kConv, in, out, 1, 1, relu};
}

LayerSpec Highway(std::string name, int channels, int kernel, int dilation) {
  return {std::move(name), LayerKind::kHighway, channels, channels, kernel, dilation, false};
}

void AddPlan(ParamSet& set, const std::vector<LayerSpec>& plan, Rng& rng) {
  for (const auto& l : plan) {
    int rows = l.out_channels;
    int cols = l.in_channels * l.kernel;
    int fan_in = cols;
    if (l.kind == LayerKind::kHighway) rows = 2 * l.out_channels;
    if (l.kind == LayerKind::kDeconv2) {
      rows = 2 * l.out_channels;
      cols = l.in_channels;
      fan_in = l.in_channels;
    }
    const double a = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Matrix w(rows, cols);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.Uniform(-a, a);
    set.Add(l.name + ".w", std::move(w));
    set.Add(l.name + ".b",
            Matrix::Zero(l.kind == LayerKind::kHighway ? 2 * l.out_channels : l.out_channels, 1));
  }
}

Var RunStack(Tape& tape, const BoundParams& p, const std::vector<LayerSpec>& plan, Var x,
             bool causal) {
  for (const auto& l : plan) {
    const Var w = p[l.name + ".w"];
    const Var b = p[l.name + ".b"];
    switch (l.kind) {
      case LayerKind::kConv:
        x = tape.Conv1d(x, w, b, l.kernel, l.dilation, causal);
        if (l.relu) x = tape.Relu(x);
        break;
      case LayerKind::kHighway:
        x = tape.HighwayConv(x, w, b, l.kernel, l.dilation, causal);
        break;
      case LayerKind::kDeconv2:
        x = tape.ConvTranspose2(x, w, b);
        break;
    }
  }
  return x;
}

int Log2Exact(int v) {
  int k = 0;
  while ((1 << k) < v) ++k;
  return (1 << k) == v ? k : -1;
}

}  // namespace

void ModelHyper::Validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::kInvalidConfig, m); };
  if (embed_dim < 1 || hidden_dim < 1 || ssrn_dim < 1 || n_mels < 1 || lin_bins < 1 ||
      charset_size < 1) {
    fail("model dimensions must be >= 1");
  }
  if (guided_g <= 0) fail("guided_g must be positive");
  if (reduction < 1 || Log2Exact(reduction) < 0) fail("reduction must be a power of two");
  if (dilation_cycles < 1) fail("dilation_cycles must be >= 1");
}

KeyValueFile ModelHyper::ToKeyValue() const {
  KeyValueFile kv;
  kv.Set("embed_dim", embed_dim);
  kv.Set("hidden_dim", hidden_dim);
  kv.Set("ssrn_dim", ssrn_dim);
  kv.Set("n_mels", n_mels);
  kv.Set("lin_bins", lin_bins);
  kv.Set("charset_size", charset_size);
  kv.Set("reduction", reduction);
  kv.Set("dilation_cycles", dilation_cycles);
  kv.Set("guided_g", guided_g);
  return kv;
}

ModelHyper ModelHyper::FromKeyValue(const KeyValueFile& kv) {
  ModelHyper h;
  h.embed_dim = static_cast<int>(kv.GetInt("embed_dim", h.embed_dim));
  h.hidden_dim = static_cast<int>(kv.GetInt("hidden_dim", h.hidden_dim));
  h.ssrn_dim = static_cast<int>(kv.GetInt("ssrn_dim", h.ssrn_dim));
  h.n_mels = static_cast<int>(kv.GetInt("n_mels", h.n_mels));
  h.lin_bins = static_cast<int>(kv.GetInt("lin_bins", h.lin_bins));
  h.charset_size = static_cast<int>(kv.GetInt("charset_size", h.charset_size));
  h.reduction = static_cast<int>(kv.GetInt("reduction", h.reduction));
  h.dilation_cycles = static_cast<int>(kv.GetInt("dilation_cycles", h.dilation_cycles));
  h.guided_g = kv.GetDouble("guided_g", h.guided_g);
  h.Validate();
  return h;
}

std::vector<LayerSpec> TextEncoderPlan(const ModelHyper& h) {
  const int d2 = 2 * h.hidden_dim;
  std::vector<LayerSpec> plan;
  plan.push_back(Conv("text_enc.c0", h.embed_dim, d2, /*relu=*/true));
  plan.push_back(Conv("text_enc.c1", d2, d2));
  int i = 0;
  for (int c = 0; c < h.dilation_cycles; ++c) {
    for (int dil : kDilations) plan.push_back(Highway(fmt::format("text_enc.hc{}", i++), d2, 3, dil));
  }
  for (int k = 0; k < 2; ++k) plan.push_back(Highway(fmt::format("text_enc.hc{}", i++), d2, 3, 1));
  for (int k = 0; k < 2; ++k) plan.push_back(Highway(fmt::format("text_enc.hc{}", i++), d2, 1, 1));
  return plan;
}

std::vector<LayerSpec> AudioEncoderPlan(const ModelHyper& h) {
  const int d = h.hidden_dim;
  std::vector<LayerSpec> plan;
  plan.push_back(Conv("audio_enc.c0", h.n_mels, d, true));
  plan.push_back(Conv("audio_enc.c1", d, d, true));
  plan.push_back(Conv("audio_enc.c2", d, d));
  int i = 0;
  for (int c = 0; c < h.dilation_cycles; ++c) {
    for (int dil : kDilations) plan.push_back(Highway(fmt::format("audio_enc.hc{}", i++), d, 3, dil));
  }
  for (int k = 0; k < 2; ++k) plan.push_back(Highway(fmt::format("audio_enc.hc{}", i++), d, 3, 3));
  return plan;
}

std::vector<LayerSpec> AudioDecoderPlan(const ModelHyper& h) {
  const int d = h.hidden_dim;
  std::vector<LayerSpec> plan;
  plan.push_back(Conv("audio_dec.c0", 2 * d, d));
  int i = 0;
  for (int dil : kDilations) plan.push_back(Highway(fmt::format("audio_dec.hc{}", i++), d, 3, dil));
  for (int k = 0; k < 2; ++k) plan.push_back(Highway(fmt::format("audio_dec.hc{}", i++), d, 3, 1));
  for (int k = 0; k < 3; ++k) plan.push_back(Conv(fmt::format("audio_dec.c{}", k + 1), d, d, true));
  plan.push_back(Conv("audio_dec.out", d, h.n_mels));
  return plan;
}

std::vector<LayerSpec> SsrnPlan(const ModelHyper& h) {
  const int c = h.ssrn_dim;
  std::vector<LayerSpec> plan;
  plan.push_back(Conv("ssrn.c0", h.n_mels, c));
  int i = 0;
  plan.push_back(Highway(fmt::format("ssrn.hc{}", i++), c, 3, 1));
  plan.push_back(Highway(fmt::format("ssrn.hc{}", i++), c, 3, 3));
  const int ups = Log2Exact(h.reduction);
  for (int u = 0; u < ups; ++u) {
    plan.push_back({fmt::format("ssrn.up{}", u), LayerKind::kDeconv2, c, c, 2, 1, false});
    plan.push_back(Highway(fmt::format("ssrn.hc{}", i++), c, 3, 1));
    plan.push_back(Highway(fmt::format("ssrn.hc{}", i++), c, 3, 3));
  }
  plan.push_back(Conv("ssrn.c1", c, 2 * c));
  for (int k = 0; k < 2; ++k) plan.push_back(Highway(fmt::format("ssrn.hc{}", i++), 2 * c, 3, 1));
  plan.push_back(Conv("ssrn.c2", 2 * c, h.lin_bins));
  for (int k = 0; k < 2; ++k) {
    plan.push_back(Conv(fmt::format("ssrn.c{}", k + 3), h.lin_bins, h.lin_bins, true));
  }
  plan.push_back(Conv("ssrn.out", h.lin_bins, h.lin_bins));
  return plan;
}

ParamSet InitText2Mel(const ModelHyper& h, uint64_t seed) {
  h.Validate();
  Rng rng(seed);
  ParamSet set;
  Matrix embed(h.embed_dim, h.charset_size);
  for (Eigen::Index i = 0; i < embed.size(); ++i) embed.data()[i] = rng.Uniform(-0.1, 0.1);
  set.Add(kEmbeddingName, std::move(embed));
  AddPlan(set, TextEncoderPlan(h), rng);
  AddPlan(set, AudioEncoderPlan(h), rng);
  AddPlan(set, AudioDecoderPlan(h), rng);
  return set;
}

ParamSet InitSsrn(const ModelHyper& h, uint64_t seed) {
  h.Validate();
  Rng rng(MixSeed(seed, 0x55524eULL));
  ParamSet set;
  AddPlan(set, SsrnPlan(h), rng);
  return set;
}

bool IsAudioSideParam(const std::string& name) {
  return name.rfind("audio_enc.", 0) == 0 || name.rfind("audio_dec.", 0) == 0;
}

BoundParams::BoundParams(Tape& tape, const ParamSet& params, std::vector<Matrix>* grads,
                         const std::vector<bool>* trainable)
    : params_(params) {
  vars_.reserve(params.size());
  for (size_t i = 0; i < params.size(); ++i) {
    Matrix* sink = nullptr;
    if (grads && (!trainable || (*trainable)[i])) sink = &(*grads)[i];
    vars_.push_back(tape.Leaf(params.value(i), sink));
  }
}

Var BoundParams::operator[](const std::string& name) const {
  return vars_[params_.IndexOf(name)];
}

TextEncoding EncodeTextGraph(Tape& tape, const BoundParams& p, const ModelHyper& h,
                             const std::vector<int>& ids) {
  if (ids.empty()) throw Error(ErrorCode::kShapeMismatch, "text encoder: empty id sequence");
  Var x = tape.Embedding(p[kEmbeddingName], ids);
  x = RunStack(tape, p, TextEncoderPlan(h), x, /*causal=*/false);
  return {tape.RowSlice(x, 0, h.hidden_dim), tape.RowSlice(x, h.hidden_dim, h.hidden_dim)};
}

Text2MelVars DecodeAudioGraph(Tape& tape, const BoundParams& p, const ModelHyper& h,
                              const TextEncoding& text, Var mel_shifted,
                              const AttentionWindows* windows) {
  if (tape.value(mel_shifted).rows() != h.n_mels || tape.value(mel_shifted).cols() < 1) {
    throw Error(ErrorCode::kShapeMismatch,
                fmt::format("audio encoder expects {} mel channels and >= 1 frame, got {}x{}",
                            h.n_mels, tape.value(mel_shifted).rows(),
                            tape.value(mel_shifted).cols()));
  }
  const Var queries = RunStack(tape, p, AudioEncoderPlan(h), mel_shifted, /*causal=*/true);
  const Var scores =
      tape.Scale(tape.MatMulTransA(text.keys, queries), 1.0 / std::sqrt(h.hidden_dim));
  const Var attention = tape.SoftmaxColumns(scores, windows);
  const Var context = tape.MatMul(text.values, attention);
  const Var dec_in = tape.ConcatRows(context, queries);
  const Var logits = RunStack(tape, p, AudioDecoderPlan(h), dec_in, /*causal=*/true);
  return {logits, attention};
}

Var SsrnGraph(Tape& tape, const BoundParams& p, const ModelHyper& h, Var mel) {
  if (tape.value(mel).rows() != h.n_mels) {
    throw Error(ErrorCode::kShapeMismatch,
                fmt::format("SSRN expects {} mel channels, got {}", h.n_mels, tape.value(mel).rows()));
  }
  return RunStack(tape, p, SsrnPlan(h), mel, /*causal=*/false);
}

Text2MelResult Text2MelForward(const ParamSet& p, const ModelHyper& h, const std::vector<int>& ids,
                               const Matrix& mel_shifted, const AttentionWindows* windows) {
  Tape tape(/*record=*/false);
  BoundParams bound(tape, p);
  const TextEncoding text = EncodeTextGraph(tape, bound, h, ids);
  const Var mel = tape.Constant(mel_shifted.transpose());
  const Text2MelVars out = DecodeAudioGraph(tape, bound, h, text, mel, windows);
  Text2MelResult r;
  r.mel_pred = tape.value(out.logits).transpose().unaryExpr(
      [](double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); });
  r.attention = tape.value(out.attention);
  return r;
}

Matrix SsrnForward(const ParamSet& p, const ModelHyper& h, const Matrix& mel) {
  Tape tape(/*record=*/false);
  BoundParams bound(tape, p);
  const Var out = SsrnGraph(tape, bound, h, tape.Constant(mel.transpose()));
  return tape.value(out).transpose().unaryExpr(
      [](double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); });
}

Matrix ShiftMel(const Matrix& mel) {
  Matrix out = Matrix::Zero(mel.rows(), mel.cols());
  if (mel.rows() > 1) out.bottomRows(mel.rows() - 1) = mel.topRows(mel.rows() - 1);
  return out;
}

}  // namespace emotts::model
