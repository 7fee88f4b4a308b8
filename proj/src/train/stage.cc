#include "emotts/train/stage.h"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <cmath>
#include <sstream>

#include "emotts/common/error.h"
#include "emotts/corpus/manifest.h"

namespace emotts::train {
namespace fs = std::filesystem;

namespace {

const std::set<std::string> kModules{kText2Mel, kSsrn};

std::set<std::string> ParseModuleList(const std::string& text) {
  std::set<std::string> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto a = item.find_first_not_of(" \t");
    if (a == std::string::npos) continue;
    const auto b = item.find_last_not_of(" \t");
    std::string name = item.substr(a, b - a + 1);
    if (name == "none") continue;
    if (!kModules.count(name)) {
      throw Error(ErrorCode::kInvalidConfig, fmt::format("unknown module '{}'", name));
    }
    out.insert(std::move(name));
  }
  return out;
}

std::string JoinModules(const std::set<std::string>& modules) {
  if (modules.empty()) return "none";
  std::string out;
  for (const auto& m : modules) out += (out.empty() ? "" : ",") + m;
  return out;
}

std::optional<KeyValueFile> Prefixed(const KeyValueFile& kv, const std::string& prefix) {
  KeyValueFile sub;
  bool any = false;
  for (const auto& [k, v] : kv.values()) {
    if (k.rfind(prefix, 0) == 0) {
      sub.Set(k.substr(prefix.size()), v);
      any = true;
    }
  }
  if (!any) return std::nullopt;
  return sub;
}

fs::path Resolve(const fs::path& base, const std::string& value) {
  if (value.empty()) return {};
  fs::path p(value);
  return p.is_absolute() || base.empty() ? p : base / p;
}

std::vector<bool> Text2MelMask(const model::ParamSet& params, const StageSpec& spec) {
  std::vector<bool> mask(params.size(), spec.IsTrainable(kText2Mel));
  if (spec.text2mel_subset == Text2MelSubset::kAudioOnly) {
    for (size_t i = 0; i < params.size(); ++i) {
      mask[i] = mask[i] && model::IsAudioSideParam(params.name(i));
    }
  }
  return mask;
}

void ZeroGrads(std::vector<Matrix>& grads) {
  for (auto& g : grads) g.setZero();
}

}  // namespace

std::set<std::string> StageSpec::frozen() const {
  std::set<std::string> out;
  for (const auto& m : kModules) {
    if (!trainable.count(m)) out.insert(m);
  }
  return out;
}

void StageSpec::Validate() const {
  if (name.empty()) throw Error(ErrorCode::kInvalidConfig, "stage name is empty");
  if (name.find(',') != std::string::npos) {
    throw Error(ErrorCode::kInvalidConfig, "stage name may not contain ','");
  }
  for (const auto& m : trainable) {
    if (!kModules.count(m)) throw Error(ErrorCode::kInvalidConfig, "unknown module " + m);
  }
  if (max_steps < 0) throw Error(ErrorCode::kInvalidConfig, "max_steps must be >= 0");
  if (checkpoint_every < 0) throw Error(ErrorCode::kInvalidConfig, "checkpoint_every must be >= 0");
  if (batch_size == 0) throw Error(ErrorCode::kInvalidConfig, "batch_size must be >= 1");
  if (!(optimizer.lr > 0.0) || optimizer.beta1 < 0.0 || optimizer.beta1 >= 1.0 ||
      optimizer.beta2 < 0.0 || optimizer.beta2 >= 1.0 || !(optimizer.eps > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "optimizer settings out of range");
  }
  if (init == InitKind::kCheckpoint && init_checkpoint.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "init = checkpoint needs init_checkpoint");
  }
  if (max_steps > 0 && trainable.empty()) {
    throw Error(ErrorCode::kNothingTrainable,
                fmt::format("stage '{}' freezes every module but asks for {} steps", name,
                            max_steps));
  }
  if (hyper) hyper->Validate();
  if (spectro) spectro->Validate();
}

StageSpec StageSpec::FromKeyValue(const KeyValueFile& kv, const fs::path& base_dir) {
  StageSpec s;
  s.name = kv.GetString("name", "");
  const std::string init = kv.GetString("init", "random");
  if (init == "random") {
    s.init = InitKind::kRandom;
  } else if (init == "checkpoint") {
    s.init = InitKind::kCheckpoint;
  } else {
    throw Error(ErrorCode::kInvalidConfig, "init must be 'random' or 'checkpoint'");
  }
  s.init_seed = static_cast<uint64_t>(kv.GetInt("init_seed", 0));
  s.init_checkpoint = Resolve(base_dir, kv.GetString("init_checkpoint", ""));

  const auto trainable = kv.Get("trainable");
  const auto frozen = kv.Get("frozen");
  if (trainable) {
    s.trainable = ParseModuleList(*trainable);
    if (frozen && ParseModuleList(*frozen) != s.frozen()) {
      throw Error(ErrorCode::kInvalidConfig, "trainable and frozen must partition {text2mel, ssrn}");
    }
  } else if (frozen) {
    const auto f = ParseModuleList(*frozen);
    s.trainable.clear();
    for (const auto& m : kModules) {
      if (!f.count(m)) s.trainable.insert(m);
    }
  }
  const std::string subset = kv.GetString("text2mel_subset", "all");
  if (subset == "all") {
    s.text2mel_subset = Text2MelSubset::kAll;
  } else if (subset == "audio_only") {
    s.text2mel_subset = Text2MelSubset::kAudioOnly;
  } else {
    throw Error(ErrorCode::kInvalidConfig, "text2mel_subset must be 'all' or 'audio_only'");
  }
  s.manifest_path = Resolve(base_dir, kv.GetString("manifest", ""));
  const std::string kind = kv.GetString("optimizer", "adam");
  if (kind != "adam") throw Error(ErrorCode::kInvalidConfig, "optimizer must be 'adam'");
  s.optimizer.lr = kv.GetDouble("lr", s.optimizer.lr);
  s.optimizer.beta1 = kv.GetDouble("beta1", s.optimizer.beta1);
  s.optimizer.beta2 = kv.GetDouble("beta2", s.optimizer.beta2);
  s.optimizer.eps = kv.GetDouble("eps", s.optimizer.eps);
  s.optimizer.clip_norm = kv.GetDouble("clip_norm", s.optimizer.clip_norm);
  const long long batch = kv.GetInt("batch_size", static_cast<long long>(s.batch_size));
  if (batch < 1) throw Error(ErrorCode::kInvalidConfig, "batch_size must be >= 1");
  s.batch_size = static_cast<size_t>(batch);
  s.max_steps = kv.GetInt("max_steps", 0);
  s.checkpoint_every = kv.GetInt("checkpoint_every", 0);
  s.seed = static_cast<uint64_t>(kv.GetInt("seed", 0));
  s.out_dir = Resolve(base_dir, kv.GetString("out_dir", ""));
  if (auto h = Prefixed(kv, "hyper.")) s.hyper = model::ModelHyper::FromKeyValue(*h);
  if (auto sp = Prefixed(kv, "spectro.")) s.spectro = dsp::SpectroConfig::FromKeyValue(*sp);
  s.Validate();
  return s;
}

StageSpec StageSpec::Load(const fs::path& path) {
  return FromKeyValue(KeyValueFile::Load(path), path.parent_path());
}

KeyValueFile StageSpec::ToKeyValue() const {
  KeyValueFile kv;
  kv.Set("name", name);
  kv.Set("init", init == InitKind::kRandom ? "random" : "checkpoint");
  kv.Set("init_seed", static_cast<long long>(init_seed));
  if (!init_checkpoint.empty()) kv.Set("init_checkpoint", init_checkpoint.string());
  kv.Set("trainable", JoinModules(trainable));
  kv.Set("frozen", JoinModules(frozen()));
  kv.Set("text2mel_subset", text2mel_subset == Text2MelSubset::kAll ? "all" : "audio_only");
  if (!manifest_path.empty()) kv.Set("manifest", manifest_path.string());
  kv.Set("optimizer", "adam");
  kv.Set("lr", optimizer.lr);
  kv.Set("beta1", optimizer.beta1);
  kv.Set("beta2", optimizer.beta2);
  kv.Set("eps", optimizer.eps);
  kv.Set("clip_norm", optimizer.clip_norm);
  kv.Set("batch_size", static_cast<long long>(batch_size));
  kv.Set("max_steps", static_cast<long long>(max_steps));
  kv.Set("checkpoint_every", static_cast<long long>(checkpoint_every));
  kv.Set("seed", static_cast<long long>(seed));
  if (!out_dir.empty()) kv.Set("out_dir", out_dir.string());
  if (hyper) {
    for (const auto& [k, v] : hyper->ToKeyValue().values()) kv.Set("hyper." + k, v);
  }
  if (spectro) {
    for (const auto& [k, v] : spectro->ToKeyValue().values()) kv.Set("spectro." + k, v);
  }
  return kv;
}

model::Checkpoint ResolveInit(const StageSpec& spec) {
  if (spec.init == InitKind::kRandom) {
    return model::InitCheckpoint(spec.hyper.value_or(model::ModelHyper{}),
                                 spec.spectro.value_or(dsp::SpectroConfig{}), spec.init_seed);
  }
  model::Checkpoint ckpt = model::LoadCheckpoint(spec.init_checkpoint);
  model::RequireSameConfigs(ckpt, spec.hyper.value_or(ckpt.hyper),
                            spec.spectro.value_or(ckpt.spectro),
                            fmt::format("stage '{}' init {}", spec.name, spec.init_checkpoint.string()));
  return ckpt;
}

std::string LossLogCsv(const std::vector<LossRecord>& log) {
  std::string out = "step,loss_total,loss_l1,loss_ce,loss_attn\n";
  for (const auto& r : log) {
    out += fmt::format("{},{},{},{},{}\n", r.step, r.loss.total, r.loss.l1, r.loss.ce,
                       r.loss.attn);
  }
  return out;
}

StageResult RunStage(const StageSpec& spec, const StageObserver& observer) {
  spec.Validate();
  model::Checkpoint init = ResolveInit(spec);
  if (spec.manifest_path.empty()) {
    throw Error(ErrorCode::kInvalidConfig, fmt::format("stage '{}' has no manifest", spec.name));
  }
  const corpus::Manifest manifest = corpus::LoadManifest(spec.manifest_path);
  const Dataset data = LoadDataset(manifest, init.spectro, spec.IsTrainable(kSsrn));
  return RunStage(spec, init, data, observer);
}

StageResult RunStage(const StageSpec& spec, const model::Checkpoint& init, const Dataset& data,
                     const StageObserver& observer) {
  spec.Validate();
  if (data.empty()) {
    throw Error(ErrorCode::kEmptyManifest, fmt::format("stage '{}' has no usable utterances", spec.name));
  }
  model::RequireSameConfigs(init, spec.hyper.value_or(init.hyper),
                            spec.spectro.value_or(init.spectro),
                            fmt::format("stage '{}'", spec.name));

  StageResult result;
  model::Checkpoint& ckpt = result.checkpoint;
  ckpt = init;
  ckpt.lineage.push_back(spec.name);
  const model::ModelHyper& h = ckpt.hyper;

  const bool train_t2m = spec.IsTrainable(kText2Mel);
  const bool train_ssrn = spec.IsTrainable(kSsrn);
  if (train_ssrn && spec.max_steps > 0 && data.examples.front().lin.size() == 0) {
    throw Error(ErrorCode::kShapeMismatch, "SSRN training needs linear targets");
  }
  const std::vector<bool> t2m_mask = Text2MelMask(ckpt.text2mel, spec);
  const std::vector<bool> ssrn_mask(ckpt.ssrn.size(), train_ssrn);
  Adam t2m_opt(ckpt.text2mel, spec.optimizer);
  Adam ssrn_opt(ckpt.ssrn, spec.optimizer);
  std::vector<Matrix> t2m_grads = ckpt.text2mel.ZerosLike();
  std::vector<Matrix> ssrn_grads = ckpt.ssrn.ZerosLike();

  std::optional<BatchStream> stream;
  if (spec.max_steps > 0) stream.emplace(data, spec.batch_size, spec.seed);

  auto save = [&](const fs::path& dir) {
    model::SaveCheckpoint(ckpt, dir);
    WriteFileAtomic(spec.out_dir / "loss_log.csv", LossLogCsv(result.log));
  };
  if (!spec.out_dir.empty()) {
    std::error_code ec;
    fs::create_directories(spec.out_dir, ec);
    if (ec) throw Error(ErrorCode::kUnwritableOutput, spec.out_dir.string() + ": " + ec.message());
    spec.ToKeyValue().Save(spec.out_dir / "stage.cfg");
  }

  for (int64_t step = 1; step <= spec.max_steps; ++step) {
    const Batch& batch = stream->Next();
    LossRecord rec;
    rec.step = step;
    if (train_t2m) {
      ZeroGrads(t2m_grads);
      rec.loss = Text2MelLoss(ckpt.text2mel, h, batch, &t2m_grads, &t2m_mask);
    }
    if (train_ssrn) {
      ZeroGrads(ssrn_grads);
      const LossBreakdown s = SsrnLoss(ckpt.ssrn, h, batch, &ssrn_grads, &ssrn_mask);
      rec.loss.total += s.total;
      rec.loss.l1 += s.l1;
      rec.loss.ce += s.ce;
    }
    if (!std::isfinite(rec.loss.total)) {
      throw Error(ErrorCode::kNonFiniteLoss,
                  fmt::format("stage '{}': loss is {} at step {}", spec.name, rec.loss.total, step));
    }
    if (train_t2m) {
      ClipByGlobalNorm(t2m_grads, spec.optimizer.clip_norm);
      t2m_opt.Step(ckpt.text2mel, t2m_grads, t2m_mask);
    }
    if (train_ssrn) {
      ClipByGlobalNorm(ssrn_grads, spec.optimizer.clip_norm);
      ssrn_opt.Step(ckpt.ssrn, ssrn_grads, ssrn_mask);
    }
    ++ckpt.step;
    result.log.push_back(rec);
    if (observer) observer(rec);
    spdlog::debug("{} step {} loss {:.5f} (l1 {:.5f} ce {:.5f} attn {:.5f})", spec.name, step,
                  rec.loss.total, rec.loss.l1, rec.loss.ce, rec.loss.attn);
    if (!spec.out_dir.empty() && spec.checkpoint_every > 0 && step % spec.checkpoint_every == 0 &&
        step != spec.max_steps) {
      save(spec.out_dir / fmt::format("step-{:06d}", step));
    }
  }

  if (!spec.out_dir.empty()) {
    result.final_path = spec.out_dir / "final";
    save(result.final_path);
  }
  return result;
}

}  // namespace emotts::train
