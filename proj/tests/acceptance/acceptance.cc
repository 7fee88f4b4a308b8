// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <fmt/format.h>
#include <fmt/ranges.h>

#include <chrono>
#include <cmath>
#include <functional>
#include <map>

#include "../test_util.h"
#include "emotts/common/error.h"
#include "emotts/common/kv_file.h"
#include "emotts/common/random.h"
#include "emotts/corpus/manifest.h"
#include "emotts/corpus/mock_corpus.h"
#include "emotts/dsp/audio.h"
#include "emotts/dsp/spectrogram.h"
#include "emotts/eval/stats.h"
#include "emotts/eval/word_accuracy.h"
#include "emotts/model/checkpoint.h"
#include "emotts/synth/synthesis.h"
#include "emotts/train/objective.h"
#include "emotts/train/stage.h"
#include "emotts/train/transfer.h"

namespace fs = std::filesystem;
using namespace emotts;
using emotts::testing::TempDir;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Join(const std::vector<std::string>& words) {
  std::string s;
  for (const auto& w : words) s += (s.empty() ? "" : " ") + w;
  return s;
}

int BruteEditDistance(const std::vector<std::string>& r, size_t i, const std::vector<std::string>& h,
                      size_t j) {
  if (i == r.size()) return static_cast<int>(h.size() - j);
  if (j == h.size()) return static_cast<int>(r.size() - i);
  return std::min({(r[i] == h[j] ? 0 : 1) + BruteEditDistance(r, i + 1, h, j + 1),
                   1 + BruteEditDistance(r, i + 1, h, j), 1 + BruteEditDistance(r, i, h, j + 1)});
}

Outcome Overfit() {
  const dsp::SpectroConfig spectro;
  const model::ModelHyper hyper = emotts::testing::MicroHyper();
  const auto texts = emotts::testing::ToyTranscripts();
  const auto data = emotts::testing::ToneDataset(texts, corpus::ToneVoice{}, spectro, false);
  train::StageSpec spec;
  spec.name = "overfit";
  spec.trainable = {train::kText2Mel};
  spec.max_steps = 2000;
  spec.batch_size = 5;
  spec.optimizer.lr = 2e-3;
  const auto result = train::RunStage(spec, model::InitCheckpoint(hyper, spectro, 0), data);
  const double initial = result.log.front().loss.total;
  const double final_loss = result.log.back().loss.total;

  std::string diag_detail;
  double first_diag = 1.0;
  for (size_t i = 0; i < texts.size(); ++i) {
    std::string d;
    try {
      const auto mel = synth::SynthesizeMel(result.checkpoint, texts[i]);
      const double v = synth::AttentionDiagonality(mel.attention);
      if (i == 0) first_diag = v;
      d = fmt::format("{:.3f}", v);
    } catch (const Error& e) {
      d = ErrorCodeName(e.code());
    }
    diag_detail += (diag_detail.empty() ? "" : ",") + d;
  }
  return {final_loss < 0.25 * initial && first_diag < 0.15,
          fmt::format("loss {:.4f} -> {:.4f} (ratio {:.3f} < 0.25); diagonality \"{}\" {:.3f} < 0.15 [all: {}]",
                      initial, final_loss, final_loss / initial, texts[0], first_diag, diag_detail)};
}

Outcome Transfer() {
  const dsp::SpectroConfig spectro;
  corpus::ToneVoice voice_a;
  corpus::ToneVoice voice_b;
  voice_b.base_hz = 190.0;
  voice_b.step = 1.09;
  voice_b.second_harmonic = 0.5;
  const auto texts_a = corpus::RandomPhrases(200, 1, 3, 101);
  const auto texts_b = corpus::RandomPhrases(20, 1, 3, 202);
  const auto pretrain = emotts::testing::ToneDataset(texts_a, voice_a, spectro, false);
  const auto b = emotts::testing::ToneDataset(texts_b, voice_b, spectro, false);
  train::Dataset adapt, held;
  adapt.examples.assign(b.examples.begin(), b.examples.begin() + 10);
  held.examples.assign(b.examples.begin() + 10, b.examples.end());

  train::TransferOptions opt;
  opt.hyper = emotts::testing::MicroHyper();
  opt.spectro = spectro;
  opt.optimizer.lr = 2e-3;
  opt.batch_size = 4;
  opt.pretrain_steps = 1500;
  opt.adapt_steps = 200;
  const auto report = train::TransferExperiment(pretrain, adapt, held, opt);
  std::string trials;
  for (const auto& t : report.trials) {
    trials += fmt::format(" {}:{:.4f}/{:.4f}", t.seed, t.finetuned_loss, t.random_loss);
  }
  return {report.wins >= 9 && report.trials.size() == 10,
          fmt::format("fine-tuned beats random in {}/{} seeds (need 9); pretrained held-out {:.4f};{}",
                      report.wins, report.trials.size(), report.pretrained_loss, trials)};
}

Outcome GradientCheck() {
  model::ModelHyper h = emotts::testing::MicroHyper();
  h.n_mels = 10;
  h.lin_bins = 33;
  const train::Batch batch = emotts::testing::GradCheckBatch(h, 21);
  const auto t2m = emotts::testing::GradientCheck(
      emotts::testing::Jittered(model::InitText2Mel(h, 21), 0.1, 21),
      [&](const model::ParamSet& p, std::vector<model::Matrix>* g) {
        return train::Text2MelLoss(p, h, batch, g).total;
      },
      200, 21);
  const auto ssrn = emotts::testing::GradientCheck(
      emotts::testing::Jittered(model::InitSsrn(h, 22), 0.1, 22),
      [&](const model::ParamSet& p, std::vector<model::Matrix>* g) {
        return train::SsrnLoss(p, h, batch, g).total;
      },
      200, 22);
  return {t2m.pass_rate() >= 0.99 && ssrn.pass_rate() >= 0.99,
          fmt::format("text2mel {}/{} (max rel {:.2e}), ssrn {}/{} (max rel {:.2e}), need 99% below 1e-3",
                      t2m.passed, t2m.sampled, t2m.max_rel, ssrn.passed, ssrn.sampled, ssrn.max_rel)};
}

Outcome Freezing() {
  const dsp::SpectroConfig spectro = emotts::testing::TinySpectro();
  const model::ModelHyper hyper = emotts::testing::TinyHyper(spectro);
  const auto data = emotts::testing::ToneDataset(emotts::testing::ToyTranscripts(), corpus::ToneVoice{},
                                                 spectro, true);
  const auto init = model::InitCheckpoint(hyper, spectro, 3);
  train::StageSpec spec;
  spec.name = "adapt";
  spec.trainable = {train::kText2Mel};
  spec.max_steps = 50;
  spec.batch_size = 2;
  spec.optimizer.lr = 2e-3;
  const auto r = train::RunStage(spec, init, data);
  const bool frozen = r.checkpoint.ssrn.BitIdentical(init.ssrn);
  const bool moved = !r.checkpoint.text2mel.BitIdentical(init.text2mel);
  return {frozen && moved && r.checkpoint.step == 50,
          fmt::format("ssrn bit-identical: {}; text2mel updated: {}; steps {}", frozen, moved,
                      r.checkpoint.step)};
}

Outcome GriffinLimRoundTrip() {
  const dsp::SpectroConfig cfg;
  std::vector<double> x(22050);
  for (size_t i = 0; i < x.size(); ++i) {
    x[i] = 0.4 * std::sin(2 * M_PI * 440 * i / 22050.0) + 0.3 * std::sin(2 * M_PI * 1320 * i / 22050.0);
  }
  const Eigen::MatrixXd mag = dsp::Stft(x, cfg).cwiseAbs();
  std::map<int, double> err;
  dsp::GriffinLim(mag, 60, cfg, [&](int it, const std::vector<double>& s) {
    if (it == 0 || it == 10 || it == 30 || it == 60) err[it] = dsp::SpectralConvergence(s, mag, cfg);
  });
  const bool monotone = err.size() == 4 && err[10] <= err[0] && err[30] <= err[10] && err[60] <= err[30];
  return {monotone && err[60] < 0.1,
          fmt::format("error at 0/10/30/60: {:.4f} {:.4f} {:.4f} {:.4f}; final < 0.1, non-increasing",
                      err[0], err[10], err[30], err[60])};
}

Outcome Trimming() {
  dsp::AudioBuffer buf;
  buf.rate = 22050;
  buf.samples.assign(11025, 0.0);
  for (int i = 0; i < 22050; ++i) buf.samples.push_back(0.5 * std::sin(2 * M_PI * 440 * i / 22050.0));
  buf.samples.resize(buf.samples.size() + 11025, 0.0);
  const auto out = dsp::TrimSilence(buf, 20.0);
  size_t onset = 0;
  while (buf.samples[onset] == 0.0) ++onset;
  size_t offset = 0;
  while (offset < out.samples.size() && out.samples[offset] == 0.0) ++offset;
  const long start = static_cast<long>(onset) - static_cast<long>(offset);

  bool raised = false;
  try {
    dsp::AudioBuffer silent;
    silent.rate = 22050;
    silent.samples.assign(22050, 0.0);
    dsp::TrimSilence(silent, 20.0);
  } catch (const Error& e) {
    raised = e.code() == ErrorCode::kEmptyAfterTrim;
  }
  return {std::abs(start - 11025) <= 276 && raised,
          fmt::format("recovered onset {} (true 11025, tolerance 276); all-silence raises EmptyAfterTrim: {}",
                      start, raised)};
}

Outcome WordAccuracyOracle() {
  Rng rng(4242);
  const std::vector<std::string> vocab = {"a", "b", "c", "d", "e"};
  int agree = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> ref(1 + rng.Below(6)), hyp(rng.Below(7));
    for (auto& w : ref) w = vocab[rng.Below(vocab.size())];
    for (auto& w : hyp) w = vocab[rng.Below(vocab.size())];
    const double n = static_cast<double>(ref.size());
    const double expect = std::max(0.0, (n - BruteEditDistance(ref, 0, hyp, 0)) / n);
    agree += eval::WordAccuracy(Join(ref), Join(hyp)) == expect;
  }
  const std::string ref = "The birch canoe slid on the smooth planks.";
  const double a = eval::WordAccuracy(ref, ref);
  const double b = eval::WordAccuracy(ref, "");
  const double c = eval::WordAccuracy(ref, "the canoe slid on smooth planks");
  return {agree == 200 && a == 1.0 && b == 0.0 && c == 0.75,
          fmt::format("{}/200 random pairs agree; fixed cases {} / {} / {}", agree, a, b, c)};
}

Outcome Statistics() {
  Rng rng(99);
  int ok = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> v(2 + rng.Below(200));
    const double scale = std::pow(10.0, rng.Uniform(-3, 3));
    for (double& x : v) x = scale * rng.Uniform(-1, 1) + rng.Uniform(0, 5);
    const double n = static_cast<double>(v.size());
    double mean = 0;
    for (double x : v) mean += x;
    mean /= n;
    double ss = 0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double hw = 1.96 * std::sqrt(ss / (n - 1)) / std::sqrt(n);
    const auto ci = eval::ComputeMeanCi(v);
    ok += std::abs(ci.mean - mean) <= 1e-12 * std::abs(mean) && std::abs(ci.half_width - hw) <= 1e-12 * hw;
  }
  const std::string s1 = eval::FormatPm(0.630, 0.042, 3);
  const std::string s2 = eval::FormatPm(3.59, 0.24, 2);
  return {ok == 1000 && s1 == "0.630 ± 0.042" && s2 == "3.59 ± 0.24",
          fmt::format("{}/1000 within 1e-12 relative; \"{}\", \"{}\"", ok, s1, s2)};
}

Outcome CorpusFixture() {
  TempDir dir("acceptance-reference");
  corpus::MockCorpusOptions opts;
  opts.counts = corpus::ReferenceCounts();
  corpus::GenerateEmotionalCorpus(dir.path(), opts);
  const auto excl = corpus::LoadExclusions(dir / "exclusions.csv");
  const std::vector<std::pair<std::string, size_t>> expected = {
      {"amused", 238}, {"angry", 304}, {"disgusted", 303}, {"neutral", 357}, {"sleepy", 361}};
  bool pass = true;
  std::string detail;
  for (const auto& [emotion, count] : expected) {
    const size_t got = corpus::ScanEmotionalCorpus(dir.path(), emotion, excl).size();
    pass &= got == count;
    detail += fmt::format("{}{} {}/{}", detail.empty() ? "" : ", ", emotion, got, count);
  }
  return {pass, detail};
}

Outcome Lineage() {
  TempDir dir("acceptance-lineage");
  const dsp::SpectroConfig spectro = emotts::testing::TinySpectro();
  const model::ModelHyper hyper = emotts::testing::TinyHyper(spectro);
  corpus::ToneVoice voice;
  voice.sample_rate = spectro.sample_rate;
  voice.samples_per_symbol = 3 * spectro.hop_effective();
  voice.tail_silence = 2 * spectro.hop_effective();
  corpus::Manifest m;
  fs::create_directories(dir / "data");
  int i = 0;
  for (const auto& text : emotts::testing::ToyTranscripts()) {
    corpus::Utterance u;
    u.id = "t" + std::to_string(i++);
    u.audio_path = dir / "data" / (u.id + ".wav");
    u.transcript_norm = text;
    const auto audio = voice.Render(text);
    u.duration_s = audio.duration_s();
    dsp::WriteWav(u.audio_path, audio);
    m.utterances.push_back(u);
  }
  corpus::SaveManifest(m, dir / "data" / "manifest.csv");

  auto write = [&](const std::string& name, const std::string& body) {
    WriteFileAtomic(dir / (name + ".cfg"), "name = " + name +
                                               "\nmanifest = data/manifest.csv\nmax_steps = 2\n"
                                               "batch_size = 2\nout_dir = runs/" + name + "\n" + body);
    return train::StageSpec::Load(dir / (name + ".cfg"));
  };
  std::string pins;
  for (const auto& [k, v] : hyper.ToKeyValue().values()) pins += "hyper." + k + " = " + v + "\n";
  for (const auto& [k, v] : spectro.ToKeyValue().values()) pins += "spectro." + k + " = " + v + "\n";
  train::RunStage(write("pretrain", "init = random\ntrainable = text2mel,ssrn\n" + pins));
  train::RunStage(write("adapt-neutral", "init = checkpoint\ninit_checkpoint = runs/pretrain/final\n"));
  train::RunStage(write("adapt-amused", "init = checkpoint\ninit_checkpoint = runs/adapt-neutral/final\n"));
  const auto lineage = model::LoadCheckpoint(dir / "runs" / "adapt-amused" / "final").lineage;
  const bool chain = lineage == std::vector<std::string>{"random", "pretrain", "adapt-neutral", "adapt-amused"};

  std::string mismatch = "accepted";
  try {
    train::RunStage(write("mismatch", "init = checkpoint\ninit_checkpoint = runs/pretrain/final\n"
                                      "spectro.sample_rate = 16000\n"));
  } catch (const Error& e) {
    mismatch = ErrorCodeName(e.code());
  }
  return {chain && mismatch == "ConfigMismatch",
          fmt::format("lineage [{}]; mismatched init -> {}", fmt::join(lineage, ", "), mismatch)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"overfit-alignment", Overfit},
      {"transfer-ordering", Transfer},
      {"gradient-check", GradientCheck},
      {"freezing", Freezing},
      {"griffin-lim", GriffinLimRoundTrip},
      {"trimming", Trimming},
      {"word-accuracy", WordAccuracyOracle},
      {"statistics", Statistics},
      {"corpus-fixture", CorpusFixture},
      {"stage-lineage", Lineage},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    fmt::print("{} {}: {} ({:.1f} s)\n", o.pass ? "PASS" : "FAIL", name, o.detail, secs);
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
