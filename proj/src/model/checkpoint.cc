#include "emotts/model/checkpoint.h"

#include <fmt/format.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "emotts/common/error.h"
#include "emotts/common/kv_file.h"

namespace emotts::model {
namespace fs = std::filesystem;

namespace {

static_assert(std::endian::native == std::endian::little,
              "tensor files are written in native little-endian order");

void WriteTensor(const fs::path& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kUnwritableOutput, path.string());
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(m.size())));
  if (!out) throw Error(ErrorCode::kUnwritableOutput, path.string());
}

Matrix ReadTensor(const fs::path& path, Eigen::Index rows, Eigen::Index cols) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, path.string());
  Matrix m(rows, cols);
  const auto bytes = static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(m.size()));
  in.read(reinterpret_cast<char*>(m.data()), bytes);
  if (in.gcount() != bytes) throw Error(ErrorCode::kShapeMismatch, path.string() + ": truncated");
  return m;
}

void AppendModule(const ParamSet& set, const std::string& module, const fs::path& dir,
                  std::string& index) {
  for (size_t i = 0; i < set.size(); ++i) {
    const std::string name = module + "/" + set.name(i);
    const Matrix& m = set.value(i);
    index += fmt::format("{}\t{}\t{}\tf64\n", name, m.rows(), m.cols());
    WriteTensor(dir / "tensors" / (module + "." + set.name(i) + ".bin"), m);
  }
}

std::string JoinLineage(const std::vector<std::string>& lineage) {
  std::string out;
  for (size_t i = 0; i < lineage.size(); ++i) out += (i ? "," : "") + lineage[i];
  return out;
}

}  // namespace

Checkpoint InitCheckpoint(const ModelHyper& hyper, const dsp::SpectroConfig& spectro,
                          uint64_t seed) {
  Checkpoint c;
  c.hyper = hyper;
  c.spectro = spectro;
  c.text2mel = InitText2Mel(hyper, seed);
  c.ssrn = InitSsrn(hyper, seed);
  c.lineage = {"random"};
  return c;
}

void SaveCheckpoint(const Checkpoint& ckpt, const fs::path& dir) {
  fs::path tmp = dir;
  tmp += ".partial";
  std::error_code ec;
  fs::remove_all(tmp, ec);
  fs::create_directories(tmp / "tensors", ec);
  if (ec) throw Error(ErrorCode::kUnwritableOutput, tmp.string() + ": " + ec.message());

  std::string index;
  AppendModule(ckpt.text2mel, "text2mel", tmp, index);
  AppendModule(ckpt.ssrn, "ssrn", tmp, index);
  WriteFileAtomic(tmp / "tensors.tsv", index);
  ckpt.hyper.ToKeyValue().Save(tmp / "hyper.cfg");
  ckpt.spectro.ToKeyValue().Save(tmp / "spectro.cfg");
  KeyValueFile state;
  state.Set("step", static_cast<long long>(ckpt.step));
  state.Set("lineage", JoinLineage(ckpt.lineage));
  state.Save(tmp / "state.cfg");

  fs::path old = dir;
  old += ".old";
  fs::remove_all(old, ec);
  if (fs::exists(dir)) fs::rename(dir, old, ec);
  if (ec) throw Error(ErrorCode::kUnwritableOutput, dir.string() + ": " + ec.message());
  fs::rename(tmp, dir, ec);
  if (ec) throw Error(ErrorCode::kUnwritableOutput, dir.string() + ": " + ec.message());
  fs::remove_all(old, ec);
}

Checkpoint LoadCheckpoint(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::kMissingFile, dir.string());
  Checkpoint c;
  c.hyper = ModelHyper::FromKeyValue(KeyValueFile::Load(dir / "hyper.cfg"));
  c.spectro = dsp::SpectroConfig::FromKeyValue(KeyValueFile::Load(dir / "spectro.cfg"));
  const KeyValueFile state = KeyValueFile::Load(dir / "state.cfg");
  c.step = state.GetInt("step", 0);
  std::stringstream ls(state.GetString("lineage", ""));
  for (std::string item; std::getline(ls, item, ',');) {
    if (!item.empty()) c.lineage.push_back(item);
  }
  if (c.lineage.empty()) throw Error(ErrorCode::kInvalidConfig, dir.string() + ": empty lineage");

  std::stringstream index(ReadFile(dir / "tensors.tsv"));
  for (std::string line; std::getline(index, line);) {
    if (line.empty()) continue;
    std::stringstream ls2(line);
    std::string name, dtype;
    Eigen::Index rows = 0, cols = 0;
    ls2 >> name >> rows >> cols >> dtype;
    if (dtype != "f64" || rows < 0 || cols < 0) {
      throw Error(ErrorCode::kInvalidConfig, "bad tensor index line: " + line);
    }
    const auto slash = name.find('/');
    const std::string module = name.substr(0, slash);
    const std::string pname = name.substr(slash + 1);
    Matrix m = ReadTensor(dir / "tensors" / (module + "." + pname + ".bin"), rows, cols);
    if (module == "text2mel") {
      c.text2mel.Add(pname, std::move(m));
    } else if (module == "ssrn") {
      c.ssrn.Add(pname, std::move(m));
    } else {
      throw Error(ErrorCode::kInvalidConfig, "unknown module in tensor index: " + module);
    }
  }
  // Shapes must agree with what the hyperparameters describe.
  const ParamSet ref_t2m = InitText2Mel(c.hyper, 0);
  const ParamSet ref_ssrn = InitSsrn(c.hyper, 0);
  auto check = [&](const ParamSet& got, const ParamSet& want, const char* module) {
    if (got.size() != want.size()) {
      throw Error(ErrorCode::kShapeMismatch,
                  fmt::format("{}: {} tensors, expected {}", module, got.size(), want.size()));
    }
    for (size_t i = 0; i < want.size(); ++i) {
      const Matrix& g = got.Get(want.name(i));
      if (g.rows() != want.value(i).rows() || g.cols() != want.value(i).cols()) {
        throw Error(ErrorCode::kShapeMismatch, fmt::format("{}/{}", module, want.name(i)));
      }
    }
  };
  check(c.text2mel, ref_t2m, "text2mel");
  check(c.ssrn, ref_ssrn, "ssrn");
  return c;
}

void RequireSameConfigs(const Checkpoint& a, const ModelHyper& hyper,
                        const dsp::SpectroConfig& spectro, const std::string& context) {
  if (!(a.hyper == hyper)) {
    throw Error(ErrorCode::kConfigMismatch, context + ": model hyperparameters differ");
  }
  if (!(a.spectro == spectro)) {
    throw Error(ErrorCode::kConfigMismatch, context + ": spectrogram configs differ");
  }
}

}  // namespace emotts::model
