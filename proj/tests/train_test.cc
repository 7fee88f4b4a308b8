#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "emotts/common/error.h"
#include "emotts/common/kv_file.h"
#include "emotts/common/random.h"
#include "emotts/corpus/manifest.h"
#include "emotts/corpus/text.h"
#include "emotts/dsp/audio.h"
#include "emotts/train/dataset.h"
#include "emotts/train/objective.h"
#include "emotts/train/optimizer.h"
#include "emotts/train/stage.h"
#include "emotts/train/transfer.h"
#include "test_util.h"

namespace emotts::train {
namespace {

namespace fs = std::filesystem;
using emotts::testing::TempDir;
using model::Matrix;

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::kIo;
}

struct Toy {
  dsp::SpectroConfig spectro = emotts::testing::TinySpectro();
  model::ModelHyper hyper = emotts::testing::TinyHyper(spectro);
  Dataset data;

  explicit Toy(bool with_linear = true) {
    data = emotts::testing::ToneDataset(emotts::testing::ToyTranscripts(), corpus::ToneVoice{},
                                        spectro, with_linear);
  }
  model::Checkpoint Init(uint64_t seed = 0) const {
    return model::InitCheckpoint(hyper, spectro, seed);
  }
  StageSpec Spec(const std::string& name, int64_t steps) const {
    StageSpec s;
    s.name = name;
    s.max_steps = steps;
    s.batch_size = 2;
    s.optimizer.lr = 2e-3;
    return s;
  }
};

Example FixedExample(const std::string& id, int n, int frames) {
  Example e;
  e.id = id;
  e.char_ids.assign(static_cast<size_t>(n - 1), 3);
  e.char_ids.push_back(corpus::Charset::kEos);
  e.mel = Matrix::Constant(frames, 4, 0.5);
  return e;
}

TEST(Batches, FiveItemsBatchTwo) {
  Dataset d;
  for (int i = 0; i < 5; ++i) d.examples.push_back(FixedExample("e" + std::to_string(i), 3 + i, 4 + i));
  const auto batches = MakeBatches(d, 2, 0);
  std::multiset<size_t> sizes;
  std::set<size_t> seen;
  for (const auto& b : batches) {
    sizes.insert(b.size());
    for (size_t i : b.indices) EXPECT_TRUE(seen.insert(i).second);
  }
  EXPECT_EQ(sizes, (std::multiset<size_t>{1, 2, 2}));
  EXPECT_EQ(seen.size(), 5u);
}

TEST(Batches, EqualLengthsNeedNoPadding) {
  Dataset d;
  for (int i = 0; i < 7; ++i) d.examples.push_back(FixedExample("e" + std::to_string(i), 5, 6));
  for (const auto& b : MakeBatches(d, 3, 9)) {
    EXPECT_EQ(b.PaddingFrames(), 0);
    EXPECT_EQ(b.MelMask().minCoeff(), 1.0);
  }
}

TEST(Batches, PaddingAndMasks) {
  Dataset d;
  d.examples.push_back(FixedExample("a", 3, 4));
  d.examples.push_back(FixedExample("b", 5, 7));
  const Batch b = MakeBatch(d, {0, 1});
  EXPECT_EQ(b.text_lengths, (std::vector<int>{3, 5}));
  EXPECT_EQ(b.mel_lengths, (std::vector<int>{4, 7}));
  EXPECT_EQ(b.PaddingFrames(), 3);
  EXPECT_EQ(b.char_ids[0], (std::vector<int>{3, 3, corpus::Charset::kEos, 0, 0}));
  EXPECT_EQ(b.mel_target[0].rows(), 7);
  EXPECT_EQ(b.mel_target[0].bottomRows(3).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(b.mel_shifted[1].row(0).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(b.mel_shifted[1].row(1), b.mel_target[1].row(0));
  const Eigen::MatrixXd mask = b.MelMask();
  EXPECT_EQ(mask.row(0).sum(), 4.0);
  EXPECT_EQ(mask.row(1).sum(), 7.0);
}

TEST(Batches, Bucketing) {
  Dataset d;
  Rng rng(1);
  for (int i = 0; i < 40; ++i) {
    d.examples.push_back(FixedExample("e" + std::to_string(i), 3, 2 + static_cast<int>(rng.Below(30))));
  }
  std::vector<int> lens;
  for (const auto& e : d.examples) lens.push_back(static_cast<int>(e.mel.rows()));
  std::sort(lens.begin(), lens.end());
  int sorted_padding = 0;
  for (size_t i = 0; i < lens.size(); i += 4) {
    for (size_t k = i; k < i + 4; ++k) sorted_padding += lens[i + 3] - lens[k];
  }
  int padding = 0;
  for (const auto& b : MakeBatches(d, 4, 3)) padding += b.PaddingFrames();
  EXPECT_EQ(padding, sorted_padding);
}

TEST(Batches, DeterministicOrder) {
  Dataset d;
  for (int i = 0; i < 9; ++i) d.examples.push_back(FixedExample("e" + std::to_string(i), 3, 3 + i));
  auto order = [&](uint64_t seed, uint64_t epoch) {
    std::vector<size_t> out;
    for (const auto& b : MakeBatches(d, 2, seed, epoch)) out.insert(out.end(), b.indices.begin(), b.indices.end());
    return out;
  };
  EXPECT_EQ(order(5, 0), order(5, 0));
  std::set<std::vector<size_t>> distinct;
  for (uint64_t e = 0; e < 6; ++e) distinct.insert(order(5, e));
  EXPECT_GT(distinct.size(), 1u);
}

TEST(Batches, EmptyDataset) {
  Dataset d;
  EXPECT_EQ(CodeOf([&] { BatchStream s(d, 2, 0); }), ErrorCode::kEmptyManifest);
}

TEST(Dataset, LoadSkipsExcluded) {
  TempDir dir("data");
  const auto spectro = emotts::testing::TinySpectro();
  corpus::ToneVoice voice;
  voice.sample_rate = spectro.sample_rate;
  corpus::Manifest m;
  const char* texts[] = {"ab", "cd", "ef"};
  for (int i = 0; i < 3; ++i) {
    corpus::Utterance u;
    u.id = std::string("u") + std::to_string(i);
    u.audio_path = dir / (u.id + ".wav");
    u.transcript_norm = texts[i];
    u.duration_s = 0.1;
    u.nve_status = i == 1 ? corpus::NveStatus::kExcluded : corpus::NveStatus::kClean;
    dsp::WriteWav(u.audio_path, voice.Render(texts[i]));
    m.utterances.push_back(u);
  }
  const Dataset d = LoadDataset(m, spectro, true);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d.examples[0].id, "u0");
  EXPECT_EQ(d.examples[1].id, "u2");
  EXPECT_EQ(d.examples[0].char_ids, corpus::EncodeText("ab"));
  EXPECT_EQ(d.examples[0].lin.rows(), spectro.reduction * d.examples[0].mel.rows());
}

TEST(Optimizer, ClipByGlobalNorm) {
  std::vector<Matrix> g = {Matrix::Constant(1, 1, 3.0), Matrix::Constant(1, 1, 4.0)};
  EXPECT_DOUBLE_EQ(GlobalNorm(g), 5.0);
  EXPECT_DOUBLE_EQ(ClipByGlobalNorm(g, 1.0), 5.0);
  EXPECT_NEAR(g[0](0, 0), 0.6, 1e-15);
  EXPECT_NEAR(g[1](0, 0), 0.8, 1e-15);
  std::vector<Matrix> small = {Matrix::Constant(1, 1, 0.5)};
  ClipByGlobalNorm(small, 1.0);
  EXPECT_EQ(small[0](0, 0), 0.5);
}

TEST(Optimizer, AdamClosedFormAndMask) {
  model::ParamSet p;
  p.Add("a", Matrix::Constant(1, 2, 1.0));
  p.Add("b", Matrix::Constant(1, 1, 1.0));
  AdamConfig cfg;
  cfg.lr = 0.1;
  cfg.clip_norm = 0.0;
  Adam adam(p, cfg);
  std::vector<Matrix> g = {Matrix(1, 2), Matrix::Constant(1, 1, 7.0)};
  g[0] << 2.0, -0.5;
  adam.Step(p, g, {true, false});
  // First step with bias correction: m_hat = g, v_hat = g^2.
  EXPECT_NEAR(p.value(0)(0, 0), 1.0 - 0.1 * 2.0 / (2.0 + 1e-6), 1e-15);
  EXPECT_NEAR(p.value(0)(0, 1), 1.0 + 0.1 * 0.5 / (0.5 + 1e-6), 1e-15);
  EXPECT_EQ(p.value(1)(0, 0), 1.0);

  // Second step: m = b1 m + (1-b1) g, v = b2 v + (1-b2) g^2.
  g[0] << 1.0, 1.0;
  adam.Step(p, g, {true, false});
  const double m = 0.5 * (0.5 * 2.0) + 0.5 * 1.0;
  const double v = 0.9 * (0.1 * 4.0) + 0.1 * 1.0;
  const double m_hat = m / (1 - 0.25);
  const double v_hat = v / (1 - 0.81);
  const double first = 1.0 - 0.1 * 2.0 / (2.0 + 1e-6);
  EXPECT_NEAR(p.value(0)(0, 0), first - 0.1 * m_hat / (std::sqrt(v_hat) + 1e-6), 1e-14);
  EXPECT_EQ(p.value(1)(0, 0), 1.0);
}

TEST(StageSpec, KeyValueRoundTrip) {
  StageSpec s;
  s.name = "adapt-neutral";
  s.init = InitKind::kCheckpoint;
  s.init_checkpoint = "/ckpt/pretrain/final";
  s.trainable = {kText2Mel};
  s.text2mel_subset = Text2MelSubset::kAudioOnly;
  s.manifest_path = "/data/m.csv";
  s.optimizer.lr = 1e-3;
  s.batch_size = 8;
  s.max_steps = 123;
  s.checkpoint_every = 50;
  s.seed = 9;
  s.out_dir = "/runs/x";
  s.hyper = emotts::testing::MicroHyper();
  s.spectro = emotts::testing::TinySpectro();
  const StageSpec back = StageSpec::FromKeyValue(KeyValueFile::Parse(s.ToKeyValue().Serialize()));
  EXPECT_EQ(back.ToKeyValue().values(), s.ToKeyValue().values());
  EXPECT_EQ(back.hyper, s.hyper);
  EXPECT_EQ(back.spectro, s.spectro);
  EXPECT_EQ(back.frozen(), std::set<std::string>{kSsrn});
}

TEST(StageSpec, FileWithRelativePaths) {
  TempDir dir("spec");
  WriteFileAtomic(dir / "s.cfg",
                  "# comment\nname = adapt\ninit = checkpoint\ninit_checkpoint = ../p/final\n"
                  "frozen = ssrn\nmanifest = m.csv\nmax_steps = 5\n");
  const StageSpec s = StageSpec::Load(dir / "s.cfg");
  EXPECT_EQ(s.init_checkpoint, dir / "../p/final");
  EXPECT_EQ(s.manifest_path, dir / "m.csv");
  EXPECT_TRUE(s.IsTrainable(kText2Mel));
  EXPECT_FALSE(s.IsTrainable(kSsrn));
  EXPECT_EQ(s.optimizer.lr, 2e-4);
  EXPECT_EQ(s.optimizer.beta1, 0.5);
  EXPECT_EQ(s.optimizer.beta2, 0.9);
  EXPECT_EQ(s.optimizer.eps, 1e-6);
}

TEST(StageSpec, Validation) {
  auto parse = [](const std::string& text) {
    StageSpec::FromKeyValue(KeyValueFile::Parse(text));
  };
  EXPECT_EQ(CodeOf([&] { parse("name = x\nfrozen = text2mel,ssrn\nmax_steps = 3\n"); }),
            ErrorCode::kNothingTrainable);
  EXPECT_NO_THROW(parse("name = x\ntrainable = none\nmax_steps = 0\n"));
  EXPECT_EQ(CodeOf([&] { parse("name = x\ntrainable = text2mel\nfrozen = text2mel\n"); }),
            ErrorCode::kInvalidConfig);
  EXPECT_EQ(CodeOf([&] { parse("name = x\ntrainable = vocoder\n"); }), ErrorCode::kInvalidConfig);
  EXPECT_EQ(CodeOf([&] { parse("name = x\nmax_steps = -1\n"); }), ErrorCode::kInvalidConfig);
  EXPECT_EQ(CodeOf([&] { parse("max_steps = 1\n"); }), ErrorCode::kInvalidConfig);
  EXPECT_EQ(CodeOf([&] { parse("name = x\ninit = checkpoint\n"); }), ErrorCode::kInvalidConfig);
}

TEST(RunStage, ZeroStepsIsIdentity) {
  Toy toy;
  const auto init = toy.Init(1);
  const auto r = RunStage(toy.Spec("noop", 0), init, toy.data);
  EXPECT_TRUE(r.checkpoint.text2mel.BitIdentical(init.text2mel));
  EXPECT_TRUE(r.checkpoint.ssrn.BitIdentical(init.ssrn));
  EXPECT_EQ(r.checkpoint.lineage, (std::vector<std::string>{"random", "noop"}));
  EXPECT_TRUE(r.log.empty());
}

TEST(RunStage, FrozenSsrnIsBitIdentical) {
  Toy toy;
  const auto init = toy.Init(2);
  StageSpec spec = toy.Spec("adapt", 50);
  spec.trainable = {kText2Mel};
  const auto r = RunStage(spec, init, toy.data);
  EXPECT_TRUE(r.checkpoint.ssrn.BitIdentical(init.ssrn));
  EXPECT_FALSE(r.checkpoint.text2mel.BitIdentical(init.text2mel));
  ASSERT_EQ(r.log.size(), 50u);
  EXPECT_LT(r.log.back().loss.total, r.log.front().loss.total);
  EXPECT_EQ(r.checkpoint.step, 50);
}

TEST(RunStage, FrozenText2MelWhenTrainingSsrn) {
  Toy toy;
  const auto init = toy.Init(3);
  StageSpec spec = toy.Spec("ssrn-only", 5);
  spec.trainable = {kSsrn};
  const auto r = RunStage(spec, init, toy.data);
  EXPECT_TRUE(r.checkpoint.text2mel.BitIdentical(init.text2mel));
  EXPECT_FALSE(r.checkpoint.ssrn.BitIdentical(init.ssrn));
}

TEST(RunStage, AudioOnlySubsetKeepsTextSide) {
  Toy toy;
  const auto init = toy.Init(4);
  StageSpec spec = toy.Spec("audio-only", 5);
  spec.text2mel_subset = Text2MelSubset::kAudioOnly;
  const auto r = RunStage(spec, init, toy.data);
  for (size_t i = 0; i < init.text2mel.size(); ++i) {
    const bool same = r.checkpoint.text2mel.value(i) == init.text2mel.value(i);
    if (!model::IsAudioSideParam(init.text2mel.name(i))) EXPECT_TRUE(same) << init.text2mel.name(i);
  }
  EXPECT_FALSE(r.checkpoint.text2mel.BitIdentical(init.text2mel));
}

TEST(RunStage, Reproducible) {
  Toy toy;
  const auto init = toy.Init(5);
  StageSpec spec = toy.Spec("repro", 8);
  spec.trainable = {kText2Mel, kSsrn};
  spec.seed = 17;
  const auto a = RunStage(spec, init, toy.data);
  const auto b = RunStage(spec, init, toy.data);
  EXPECT_TRUE(a.checkpoint.text2mel.BitIdentical(b.checkpoint.text2mel));
  EXPECT_TRUE(a.checkpoint.ssrn.BitIdentical(b.checkpoint.ssrn));
  ASSERT_EQ(a.log.size(), b.log.size());
  for (size_t i = 0; i < a.log.size(); ++i) EXPECT_EQ(a.log[i].loss.total, b.log[i].loss.total);
}

TEST(RunStage, NonFiniteLossAborts) {
  Toy toy(false);
  toy.data.examples[2].mel(0, 0) = std::nan("");
  StageSpec spec = toy.Spec("nan", 20);
  spec.batch_size = 1;
  try {
    RunStage(spec, toy.Init(), toy.data);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonFiniteLoss);
    EXPECT_NE(std::string(e.what()).find("at step"), std::string::npos);
  }
}

TEST(RunStage, EmptyDataAndNothingTrainable) {
  Toy toy;
  EXPECT_EQ(CodeOf([&] { RunStage(toy.Spec("e", 1), toy.Init(), Dataset{}); }),
            ErrorCode::kEmptyManifest);
  StageSpec spec = toy.Spec("none", 3);
  spec.trainable.clear();
  EXPECT_EQ(CodeOf([&] { RunStage(spec, toy.Init(), toy.data); }), ErrorCode::kNothingTrainable);
}

TEST(RunStage, ConfigMismatchRejected) {
  Toy toy;
  StageSpec spec = toy.Spec("x", 1);
  dsp::SpectroConfig other = toy.spectro;
  other.n_mels = 16;
  spec.spectro = other;
  EXPECT_EQ(CodeOf([&] { RunStage(spec, toy.Init(), toy.data); }), ErrorCode::kConfigMismatch);
}

TEST(RunStage, WritesArtifacts) {
  Toy toy;
  TempDir dir("stage");
  StageSpec spec = toy.Spec("w", 4);
  spec.checkpoint_every = 2;
  spec.out_dir = dir / "run";
  const auto r = RunStage(spec, toy.Init(), toy.data);
  EXPECT_TRUE(fs::exists(dir / "run" / "step-000002" / "tensors.tsv"));
  EXPECT_TRUE(fs::exists(dir / "run" / "stage.cfg"));
  EXPECT_EQ(r.final_path, dir / "run" / "final");
  const auto log = ReadFile(dir / "run" / "loss_log.csv");
  EXPECT_EQ(log.substr(0, log.find('\n')), "step,loss_total,loss_l1,loss_ce,loss_attn");
  EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 5);
  const auto back = model::LoadCheckpoint(r.final_path);
  EXPECT_TRUE(back.text2mel.BitIdentical(r.checkpoint.text2mel));
  EXPECT_EQ(back.lineage, r.checkpoint.lineage);
  EXPECT_EQ(back.step, 4);
}

void WriteToyManifest(const Toy& toy, const fs::path& dir) {
  corpus::Manifest m;
  corpus::ToneVoice voice;
  voice.sample_rate = toy.spectro.sample_rate;
  voice.samples_per_symbol = 3 * toy.spectro.hop_effective();
  voice.tail_silence = 2 * toy.spectro.hop_effective();
  fs::create_directories(dir);
  int i = 0;
  for (const auto& text : emotts::testing::ToyTranscripts()) {
    corpus::Utterance u;
    u.id = "t" + std::to_string(i++);
    u.audio_path = dir / (u.id + ".wav");
    u.transcript_norm = text;
    const auto audio = voice.Render(text);
    u.duration_s = audio.duration_s();
    dsp::WriteWav(u.audio_path, audio);
    m.utterances.push_back(u);
  }
  corpus::SaveManifest(m, dir / "manifest.csv");
}

TEST(RunStage, LineageChainFromFiles) {
  Toy toy;
  TempDir dir("chain");
  WriteToyManifest(toy, dir / "data");
  auto write_spec = [&](const std::string& name, const std::string& init, const std::string& extra) {
    std::string text = "name = " + name + "\nmanifest = data/manifest.csv\nmax_steps = 2\n"
                       "batch_size = 2\nout_dir = runs/" + name + "\n" + init + extra;
    WriteFileAtomic(dir / (name + ".cfg"), text);
    return StageSpec::Load(dir / (name + ".cfg"));
  };
  std::string pins;
  for (const auto& [k, v] : toy.hyper.ToKeyValue().values()) pins += "hyper." + k + " = " + v + "\n";
  for (const auto& [k, v] : toy.spectro.ToKeyValue().values()) pins += "spectro." + k + " = " + v + "\n";

  RunStage(write_spec("pretrain", "init = random\ntrainable = text2mel,ssrn\n", pins));
  RunStage(write_spec("adapt-neutral", "init = checkpoint\ninit_checkpoint = runs/pretrain/final\n", ""));
  const auto last = RunStage(
      write_spec("adapt-amused", "init = checkpoint\ninit_checkpoint = runs/adapt-neutral/final\n", ""));
  EXPECT_EQ(last.checkpoint.lineage,
            (std::vector<std::string>{"random", "pretrain", "adapt-neutral", "adapt-amused"}));
  EXPECT_EQ(model::LoadCheckpoint(dir / "runs" / "adapt-amused" / "final").lineage,
            last.checkpoint.lineage);
  EXPECT_EQ(model::LoadCheckpoint(dir / "runs" / "adapt-neutral" / "final").lineage,
            (std::vector<std::string>{"random", "pretrain", "adapt-neutral"}));

  const StageSpec bad = write_spec("mismatch", "init = checkpoint\ninit_checkpoint = runs/pretrain/final\n",
                                   "spectro.sample_rate = 8000\nspectro.n_mels = 30\n");
  EXPECT_EQ(CodeOf([&] { RunStage(bad); }), ErrorCode::kConfigMismatch);
}

TEST(Transfer, ZeroStepsAndDegenerateFlag) {
  Toy toy(false);
  TransferOptions opt;
  opt.hyper = toy.hyper;
  opt.spectro = toy.spectro;
  opt.pretrain_steps = 3;
  opt.adapt_steps = 0;
  opt.seeds = {0, 1};
  const auto pretrained = Pretrain(toy.data, opt);
  EXPECT_EQ(pretrained.lineage, (std::vector<std::string>{"random", "pretrain"}));

  Dataset adapt, held;
  adapt.examples = {toy.data.examples[0], toy.data.examples[1]};
  held.examples = {toy.data.examples[4]};
  const auto report = TransferExperiment(pretrained, toy.data, adapt, held, opt);
  EXPECT_FALSE(report.degenerate);
  ASSERT_EQ(report.trials.size(), 2u);
  for (const auto& t : report.trials) {
    EXPECT_EQ(t.finetuned_loss, report.pretrained_loss);
    const auto fresh = model::InitCheckpoint(opt.hyper, opt.spectro, t.seed);
    EXPECT_EQ(t.random_loss, MeanText2MelLoss(fresh.text2mel, fresh.hyper, held));
  }
  EXPECT_TRUE(TransferExperiment(pretrained, toy.data, toy.data, held, opt).degenerate);
}

}  // namespace
}  // namespace emotts::train
