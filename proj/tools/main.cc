// emotts command line: preprocess | train | synth | eval-intel | mos-serve | mock-corpus
#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <filesystem>
#include <optional>

#include "emotts/common/csv.h"
#include "emotts/common/error.h"
#include "emotts/common/kv_file.h"
#include "emotts/corpus/manifest.h"
#include "emotts/corpus/mock_corpus.h"
#include "emotts/corpus/preprocess.h"
#include "emotts/eval/asr.h"
#include "emotts/eval/intelligibility.h"
#include "emotts/model/checkpoint.h"
#include "emotts/mos/server.h"
#include "emotts/mos/service.h"
#include "emotts/synth/synthesis.h"
#include "emotts/train/stage.h"

namespace fs = std::filesystem;
using namespace emotts;

namespace {

constexpr int kOk = 0;
constexpr int kUserError = 1;
constexpr int kRuntimeFailure = 2;

int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNonFiniteLoss:
    case ErrorCode::kNoAlignment:
    case ErrorCode::kAsrTransport:
    case ErrorCode::kShapeMismatch:
    case ErrorCode::kIo:
      return kRuntimeFailure;
    default:
      return kUserError;
  }
}

struct Globals {
  std::string config;
  std::optional<uint64_t> seed;
  bool verbose = false;
  KeyValueFile settings;
};

KeyValueFile Section(const KeyValueFile& kv, const std::string& prefix) {
  KeyValueFile out;
  for (const auto& [k, v] : kv.values()) {
    if (k.rfind(prefix, 0) == 0) out.Set(k.substr(prefix.size()), v);
  }
  return out;
}

dsp::SpectroConfig SpectroFrom(const Globals& g) {
  dsp::SpectroConfig cfg = dsp::SpectroConfig::FromKeyValue(Section(g.settings, "spectro."));
  cfg.Validate();
  return cfg;
}

// ---------------------------------------------------------------- preprocess

struct PreprocessArgs {
  std::string root;
  std::string kind = "emotional";
  std::vector<std::string> emotions;
  std::string exclusions;
  std::string out;
};

int RunPreprocess(const Globals& g, const PreprocessArgs& a) {
  const dsp::SpectroConfig cfg = SpectroFrom(g);
  const fs::path out(a.out);
  corpus::Manifest all;
  std::vector<corpus::CorpusSummaryRow> rows;
  std::vector<corpus::ScanIssue> skipped;

  auto process = [&](const std::string& label, const corpus::Manifest& scanned,
                     const corpus::ScanReport& report) {
    corpus::Manifest done = corpus::PreprocessCorpus(scanned, cfg, out, &skipped);
    skipped.insert(skipped.end(), report.skipped.begin(), report.skipped.end());
    rows.push_back({label, done.size(), report.files_found, done.total_duration_s(),
                    report.duration_found_s});
    all.corpus_name = done.corpus_name;
    for (auto& u : done.utterances) all.utterances.push_back(std::move(u));
  };

  if (a.kind == "neutral") {
    corpus::ScanReport report;
    const corpus::Manifest m = corpus::ScanNeutralCorpus(a.root, &report);
    process("Neutral", m, report);
  } else if (a.kind == "emotional") {
    if (!fs::is_directory(a.root)) throw Error(ErrorCode::kMissingRoot, a.root);
    corpus::ExclusionList excl;
    fs::path excl_path = a.exclusions.empty() ? fs::path(a.root) / "exclusions.csv" : fs::path(a.exclusions);
    if (!a.exclusions.empty() || fs::exists(excl_path)) excl = corpus::LoadExclusions(excl_path);
    std::vector<std::string> emotions = a.emotions;
    if (emotions.empty()) {
      for (corpus::Emotion e : corpus::kAllEmotions) emotions.emplace_back(corpus::EmotionName(e));
    }
    for (const auto& name : emotions) {
      const corpus::Emotion e = corpus::ParseEmotion(name);
      corpus::ScanReport report;
      const corpus::Manifest m = corpus::ScanEmotionalCorpus(a.root, name, excl, &report);
      if (a.emotions.empty() && report.files_found == 0) continue;
      std::string label(corpus::EmotionName(e));
      label[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(label[0])));
      process(label, m, report);
    }
  } else {
    throw Error(ErrorCode::kInvalidConfig, "--kind must be 'neutral' or 'emotional'");
  }

  const fs::path manifest_path = out / "manifest.csv";
  corpus::SaveManifest(all, manifest_path);
  std::string summary = corpus::FormatCorpusSummary(rows);
  if (!skipped.empty()) {
    summary += "\nskipped:\n";
    for (const auto& s : skipped) summary += fmt::format("  {}: {}\n", s.id, s.message);
  }
  WriteFileAtomic(out / "summary.txt", summary);
  fmt::print("{}", summary);
  fmt::print("manifest: {}\n", manifest_path.string());
  return kOk;
}

// ---------------------------------------------------------------- train

int RunTrain(const Globals& g, const std::string& config_path) {
  train::StageSpec spec = train::StageSpec::Load(config_path);
  if (g.seed) spec.seed = *g.seed;
  const auto result = train::RunStage(spec, [](const train::LossRecord& r) {
    if (r.step % 50 == 0) spdlog::info("step {} loss {:.5f}", r.step, r.loss.total);
  });
  if (!result.log.empty()) {
    fmt::print("initial loss: {:.6f}\nfinal loss: {:.6f}\n", result.log.front().loss.total,
               result.log.back().loss.total);
  }
  std::string lineage;
  for (const auto& s : result.checkpoint.lineage) lineage += (lineage.empty() ? "" : " > ") + s;
  fmt::print("lineage: {}\n", lineage);
  if (!result.final_path.empty()) fmt::print("checkpoint: {}\n", result.final_path.string());
  return kOk;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string checkpoint;
  std::string ssrn_checkpoint;
  std::string text;
  std::string sentences;
  std::string out;
  int max_frames = 210;
};

int RunSynth(const Globals& g, const SynthArgs& a) {
  model::Checkpoint ckpt = model::LoadCheckpoint(a.checkpoint);
  if (!a.ssrn_checkpoint.empty()) {
    const model::Checkpoint other = model::LoadCheckpoint(a.ssrn_checkpoint);
    model::RequireSameConfigs(ckpt, other.hyper, other.spectro, "SSRN checkpoint");
    ckpt.ssrn = other.ssrn;
  }
  synth::SynthesisOptions opts;
  const KeyValueFile s = Section(g.settings, "synth.");
  opts.max_frames = static_cast<int>(s.GetInt("max_frames", a.max_frames));
  opts.window_back = static_cast<int>(s.GetInt("window_back", opts.window_back));
  opts.window_ahead = static_cast<int>(s.GetInt("window_ahead", opts.window_ahead));
  opts.stop_energy = s.GetDouble("stop_energy", opts.stop_energy);
  std::vector<std::string> texts;
  if (!a.sentences.empty()) {
    texts = eval::LoadSentences(a.sentences);
  } else {
    texts.push_back(a.text);
  }
  const auto items = synth::BatchSynthesize(ckpt, texts, a.out, opts);
  size_t ok = 0;
  for (const auto& it : items) ok += it.status == "ok";
  fmt::print("synthesized {}/{}\nreport: {}\n", ok, items.size(),
             (fs::path(a.out) / "report.csv").string());
  return kOk;
}

// ---------------------------------------------------------------- eval-intel

struct EvalArgs {
  std::string sentences;
  std::string wav_dir;
  std::string asr = "mock";
  std::string label = "system";
  std::string csv;
};

std::vector<fs::path> WavsFor(const fs::path& dir, size_t count) {
  std::vector<fs::path> wavs(count);
  for (size_t i = 0; i < count; ++i) wavs[i] = dir / fmt::format("{:04d}.wav", i);
  const fs::path report = dir / "report.csv";
  if (fs::exists(report)) {
    const auto rows = ParseCsv(ReadFile(report));
    for (size_t r = 1; r < rows.size(); ++r) {
      if (rows[r].size() < 3) continue;
      const size_t idx = std::stoul(rows[r][0]);
      if (idx < count && !rows[r][2].empty()) wavs[idx] = rows[r][2];
    }
  }
  return wavs;
}

int RunEvalIntel(const Globals& g, const EvalArgs& a) {
  const auto sentences = eval::LoadSentences(a.sentences);
  const auto wavs = WavsFor(a.wav_dir, sentences.size());
  auto asr = eval::MakeAsr(a.asr, g.seed.value_or(0));
  if (auto* mock = dynamic_cast<eval::MockAsr*>(asr.get())) {
    for (size_t i = 0; i < wavs.size(); ++i) {
      if (fs::exists(wavs[i])) mock->Register(wavs[i], sentences[i]);
    }
  }
  const auto result = eval::IntelligibilityEval(sentences, wavs, *asr);
  if (!sentences.empty() && result.failures == sentences.size()) {
    spdlog::error("every ASR call failed");
    return kRuntimeFailure;
  }
  const fs::path csv = a.csv.empty() ? fs::path(a.wav_dir) / "word_accuracy.csv" : fs::path(a.csv);
  if (csv.has_parent_path()) fs::create_directories(csv.parent_path());
  WriteFileAtomic(csv, eval::WordAccuracyCsv(result));
  fmt::print("{}", eval::WordAccuracyTable({{a.label, result}}));
  fmt::print("csv: {}\n", csv.string());
  return kOk;
}

// ---------------------------------------------------------------- mos-serve

struct ServeArgs {
  std::string survey;
  std::string store;
  std::string host = "0.0.0.0";
  int port = 0;
  bool allow_half = false;
};

int RunMosServe(const Globals& g, ServeArgs a) {
  const KeyValueFile s = Section(g.settings, "mos.");
  if (a.store.empty()) {
    const char* env = std::getenv("EMOTTS_MOS_STORE");
    a.store = env ? env : s.GetString("store", "ratings.jsonl");
  }
  if (a.port == 0) {
    const char* env = std::getenv("EMOTTS_MOS_PORT");
    a.port = env ? std::atoi(env) : static_cast<int>(s.GetInt("port", 8080));
  }
  mos::ServiceOptions opts;
  opts.allow_half_points = a.allow_half || s.GetBool("allow_half_points", false);
  mos::MosService service(mos::SurveyDefinition::Load(a.survey),
                          std::make_unique<mos::JsonlStore>(a.store), opts);
  if (!mos::Serve(service, a.host, a.port)) {
    throw Error(ErrorCode::kIo, fmt::format("cannot listen on {}:{}", a.host, a.port));
  }
  return kOk;
}

// ---------------------------------------------------------------- mock-corpus

struct MockArgs {
  std::string out;
  std::string kind = "emotional";
  std::string counts = "reference";
  std::string speaker = "spk1";
  size_t silent = 0;
  size_t rows = 20;
  size_t missing = 0;
};

int RunMockCorpus(const Globals& g, const MockArgs& a) {
  const uint64_t seed = g.seed.value_or(0);
  if (a.kind == "neutral") {
    corpus::GenerateNeutralCorpus(a.out, a.rows, a.missing, seed);
    fmt::print("neutral corpus: {} ({} rows)\n", a.out, a.rows);
    return kOk;
  }
  if (a.kind != "emotional") throw Error(ErrorCode::kInvalidConfig, "--kind must be 'neutral' or 'emotional'");
  corpus::MockCorpusOptions opts;
  opts.speaker = a.speaker;
  opts.counts = corpus::ParseEmotionCounts(a.counts);
  opts.seed = seed;
  opts.silent_per_emotion = a.silent;
  const auto r = corpus::GenerateEmotionalCorpus(a.out, opts);
  fmt::print("emotional corpus: {} ({} files)\nexclusions: {}\n", a.out, r.files_written,
             r.exclusions_path.string());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-resource emotional text-to-speech toolkit"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "key = value settings (spectro.*, synth.*, mos.*)");
  auto* seed_opt = app.add_option("--seed", "global seed");
  app.add_flag("-v,--verbose", g.verbose, "debug logging");

  PreprocessArgs pre;
  auto* c_pre = app.add_subcommand("preprocess", "scan, trim and summarize a corpus");
  c_pre->add_option("--root", pre.root, "corpus root")->required();
  c_pre->add_option("--kind", pre.kind, "neutral | emotional");
  c_pre->add_option("--emotion", pre.emotions, "emotion(s) to scan; default all present");
  c_pre->add_option("--exclusions", pre.exclusions, "exclusion list (default <root>/exclusions.csv)");
  c_pre->add_option("--out", pre.out, "output directory")->required();

  std::string stage_cfg;
  auto* c_train = app.add_subcommand("train", "run one training stage");
  c_train->add_option("stage_config", stage_cfg, "stage config file")->required();

  SynthArgs syn;
  auto* c_syn = app.add_subcommand("synth", "synthesize text to WAV");
  c_syn->add_option("--checkpoint", syn.checkpoint, "checkpoint directory")->required();
  c_syn->add_option("--ssrn-checkpoint", syn.ssrn_checkpoint, "take SSRN from another checkpoint");
  auto* text_opt = c_syn->add_option("--text", syn.text, "text to speak");
  auto* sent_opt = c_syn->add_option("--sentences", syn.sentences, "file with one sentence per line");
  text_opt->excludes(sent_opt);
  c_syn->add_option("--out", syn.out, "output directory")->required();
  c_syn->add_option("--max-frames", syn.max_frames, "decoder frame cap");

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval-intel", "word accuracy through an ASR adapter");
  c_eval->add_option("--sentences", ev.sentences, "reference sentences")->required();
  c_eval->add_option("--wav-dir", ev.wav_dir, "synth output directory")->required();
  c_eval->add_option("--asr", ev.asr, "command:<cmd> | http://host:port/path | mock | mock-empty | mock-drop:<p>");
  c_eval->add_option("--label", ev.label, "row label in the table");
  c_eval->add_option("--csv", ev.csv, "per-sentence CSV path");

  ServeArgs srv;
  auto* c_srv = app.add_subcommand("mos-serve", "run the listening-test backend");
  c_srv->add_option("--survey", srv.survey, "survey definition JSON")->required();
  c_srv->add_option("--store", srv.store, "ratings JSONL (env EMOTTS_MOS_STORE)");
  c_srv->add_option("--host", srv.host, "bind address");
  c_srv->add_option("--port", srv.port, "port (env EMOTTS_MOS_PORT)");
  c_srv->add_flag("--allow-half-points", srv.allow_half, "accept 0.5 steps");

  MockArgs mk;
  auto* c_mock = app.add_subcommand("mock-corpus", "generate a synthetic tone corpus");
  c_mock->add_option("--out", mk.out, "output directory")->required();
  c_mock->add_option("--kind", mk.kind, "neutral | emotional");
  c_mock->add_option("--counts", mk.counts, "reference or emotion:kept[:total[:edited]],...");
  c_mock->add_option("--speaker", mk.speaker, "speaker directory name");
  c_mock->add_option("--silent", mk.silent, "all-silent files per emotion");
  c_mock->add_option("--rows", mk.rows, "neutral: metadata rows");
  c_mock->add_option("--missing", mk.missing, "neutral: rows without audio");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUserError;
  }

  spdlog::set_level(g.verbose ? spdlog::level::debug : spdlog::level::info);
  try {
    if (*seed_opt) g.seed = seed_opt->as<uint64_t>();
    if (!g.config.empty()) g.settings = KeyValueFile::Load(g.config);
    if (*c_pre) return RunPreprocess(g, pre);
    if (*c_train) return RunTrain(g, stage_cfg);
    if (*c_syn) {
      if (syn.text.empty() && syn.sentences.empty()) {
        throw Error(ErrorCode::kEmptyText, "give --text or --sentences");
      }
      return RunSynth(g, syn);
    }
    if (*c_eval) return RunEvalIntel(g, ev);
    if (*c_srv) return RunMosServe(g, srv);
    if (*c_mock) return RunMockCorpus(g, mk);
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return ExitCodeFor(e.code());
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kRuntimeFailure;
  }
  return kUserError;
}
