#include "emotts/synth/synthesis.h"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>

#include "emotts/common/csv.h"
#include "emotts/common/error.h"
#include "emotts/common/kv_file.h"
#include "emotts/corpus/text.h"
#include "emotts/model/networks.h"

namespace emotts::synth {
namespace fs = std::filesystem;
using model::Matrix;

void SynthesisOptions::Validate() const {
  if (max_frames < 1) throw Error(ErrorCode::kInvalidConfig, "max_frames must be >= 1");
  if (window_ahead < 1) throw Error(ErrorCode::kInvalidConfig, "window ahead must be >= 1");
  if (window_back < 0) throw Error(ErrorCode::kInvalidConfig, "window back must be >= 0");
  if (stop_frames < 1) throw Error(ErrorCode::kInvalidConfig, "stop_frames must be >= 1");
}

MelSynthesis SynthesizeMel(const model::Checkpoint& ckpt, const std::string& text,
                           const SynthesisOptions& opts) {
  opts.Validate();
  std::string norm;
  try {
    norm = corpus::NormalizeTranscript(text);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kEmptyAfterNormalization) {
      throw Error(ErrorCode::kEmptyText, "nothing to synthesize");
    }
    throw;
  }
  const model::ModelHyper& h = ckpt.hyper;
  MelSynthesis out;
  out.ids = corpus::EncodeText(norm);
  const int n_text = static_cast<int>(out.ids.size());
  const int final_char = std::max(0, n_text - 2);

  Matrix keys;
  Matrix values;
  {
    model::Tape tape(/*record=*/false);
    model::BoundParams p(tape, ckpt.text2mel);
    const auto enc = model::EncodeTextGraph(tape, p, h, out.ids);
    keys = tape.value(enc.keys);
    values = tape.value(enc.values);
  }

  // Column t of `input` is the frame fed at step t; column 0 is the zero frame.
  Matrix input = Matrix::Zero(h.n_mels, opts.max_frames);
  Matrix mel = Matrix::Zero(h.n_mels, opts.max_frames);
  Matrix attention = Matrix::Zero(n_text, opts.max_frames);
  model::AttentionWindows windows;
  int pos = 0;
  bool reached_final = false;
  int frames = 0;
  for (int t = 0; t < opts.max_frames; ++t) {
    if (t == 0) {
      windows.emplace_back(0, 0);
    } else {
      windows.emplace_back(std::max(0, pos - opts.window_back),
                           std::min(n_text - 1, pos + opts.window_ahead));
    }
    model::Tape tape(/*record=*/false);
    model::BoundParams p(tape, ckpt.text2mel);
    const model::TextEncoding enc{tape.Constant(keys), tape.Constant(values)};
    const auto dec = model::DecodeAudioGraph(tape, p, h, enc,
                                             tape.Constant(input.leftCols(t + 1)), &windows);
    const Matrix& logits = tape.value(dec.logits);
    const Matrix& att = tape.value(dec.attention);
    mel.col(t) = logits.col(t).unaryExpr([](double z) {
      return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    });
    attention.col(t) = att.col(t);
    Eigen::Index arg = 0;
    att.col(t).maxCoeff(&arg);
    pos = std::max(pos, static_cast<int>(arg));
    out.positions.push_back(pos);
    reached_final = reached_final || pos >= final_char;
    frames = t + 1;
    if (t + 1 < opts.max_frames) input.col(t + 1) = mel.col(t);

    if (reached_final && frames >= opts.stop_frames &&
        mel.middleCols(frames - opts.stop_frames, opts.stop_frames).mean() < opts.stop_energy) {
      out.stopped_on_energy = true;
      break;
    }
  }
  if (!reached_final) {
    throw Error(ErrorCode::kNoAlignment,
                fmt::format("final character never attended within {} frames", opts.max_frames));
  }
  out.mel.frames = mel.leftCols(frames).transpose();
  out.mel.hop_effective = ckpt.spectro.hop_effective();
  out.attention = attention.leftCols(frames);
  return out;
}

dsp::AudioBuffer Synthesize(const model::Checkpoint& ckpt, const std::string& text,
                            const SynthesisOptions& opts, MelSynthesis* mel_out) {
  MelSynthesis m = SynthesizeMel(ckpt, text, opts);
  dsp::LinSpectrogram lin;
  lin.frames = model::SsrnForward(ckpt.ssrn, ckpt.hyper, m.mel.frames);
  dsp::AudioBuffer audio = dsp::InvertSpectrogram(lin, ckpt.spectro);
  if (mel_out) *mel_out = std::move(m);
  return audio;
}

double AttentionDiagonality(const Matrix& attention) {
  if (attention.size() == 0) throw Error(ErrorCode::kEmptyInput, "empty attention matrix");
  const double n = static_cast<double>(attention.rows());
  const double frames = static_cast<double>(attention.cols());
  double acc = 0.0;
  for (Eigen::Index t = 0; t < attention.cols(); ++t) {
    Eigen::Index arg = 0;
    attention.col(t).maxCoeff(&arg);
    acc += std::abs(static_cast<double>(arg) / n - static_cast<double>(t) / frames);
  }
  return acc / frames;
}

std::string BatchReportCsv(const std::vector<BatchItem>& items) {
  std::string out = "index,text,wav_path,status,frames\n";
  for (const auto& it : items) {
    out += CsvLine({std::to_string(it.index), it.text, it.wav_path.string(), it.status,
                    std::to_string(it.frames)});
  }
  return out;
}

std::vector<BatchItem> BatchSynthesize(const std::vector<std::string>& texts,
                                       const fs::path& out_dir, const SynthesizeFn& synthesize) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) {
    throw Error(ErrorCode::kUnwritableOutput, out_dir.string() + ": " + ec.message());
  }
  std::vector<BatchItem> items;
  items.reserve(texts.size());
  for (size_t i = 0; i < texts.size(); ++i) {
    BatchItem item;
    item.index = i;
    item.text = texts[i];
    try {
      const dsp::AudioBuffer audio = synthesize(texts[i], &item.frames);
      const fs::path wav = out_dir / fmt::format("{:04d}.wav", i);
      dsp::WriteWav(wav, audio);
      item.wav_path = wav;
      item.status = "ok";
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kUnwritableOutput) throw;
      spdlog::warn("item {}: {}", i, e.what());
      item.status = std::string(ErrorCodeName(e.code()));
    }
    items.push_back(std::move(item));
  }
  WriteFileAtomic(out_dir / "report.csv", BatchReportCsv(items));
  return items;
}

std::vector<BatchItem> BatchSynthesize(const model::Checkpoint& ckpt,
                                       const std::vector<std::string>& texts,
                                       const fs::path& out_dir, const SynthesisOptions& opts) {
  return BatchSynthesize(texts, out_dir, [&](const std::string& text, int* frames) {
    MelSynthesis m;
    dsp::AudioBuffer audio = Synthesize(ckpt, text, opts, &m);
    *frames = static_cast<int>(m.mel.num_frames());
    return audio;
  });
}

}  // namespace emotts::synth
