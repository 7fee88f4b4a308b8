#include "emotts/common/kv_file.h"

#include <fmt/format.h>

#include <charconv>
#include <fstream>
#include <sstream>

#include "emotts/common/error.h"

namespace emotts {
namespace {

std::string Trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace

KeyValueFile KeyValueFile::Parse(const std::string& text) {
  KeyValueFile kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string trimmed = Trim(line);
    if (trimmed.empty() || trimmed[0] == '#') continue;
    const auto eq = trimmed.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kInvalidConfig,
                  fmt::format("line {}: expected 'key = value'", lineno));
    }
    const std::string key = Trim(trimmed.substr(0, eq));
    if (key.empty()) {
      throw Error(ErrorCode::kInvalidConfig, fmt::format("line {}: empty key", lineno));
    }
    kv.values_[key] = Trim(trimmed.substr(eq + 1));
  }
  return kv;
}

KeyValueFile KeyValueFile::Load(const std::filesystem::path& path) {
  return Parse(ReadFile(path));
}

void KeyValueFile::Save(const std::filesystem::path& path) const {
  WriteFileAtomic(path, Serialize());
}

std::string KeyValueFile::Serialize() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

std::optional<std::string> KeyValueFile::Get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string KeyValueFile::GetString(const std::string& key,
                                    const std::string& fallback) const {
  return Get(key).value_or(fallback);
}

double KeyValueFile::GetDouble(const std::string& key, double fallback) const {
  auto v = Get(key);
  if (!v) return fallback;
  try {
    size_t used = 0;
    double d = std::stod(*v, &used);
    if (used != v->size()) throw std::invalid_argument(*v);
    return d;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kInvalidConfig, fmt::format("{}: not a number: '{}'", key, *v));
  }
}

long long KeyValueFile::GetInt(const std::string& key, long long fallback) const {
  auto v = Get(key);
  if (!v) return fallback;
  long long out = 0;
  auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || ptr != v->data() + v->size()) {
    throw Error(ErrorCode::kInvalidConfig, fmt::format("{}: not an integer: '{}'", key, *v));
  }
  return out;
}

bool KeyValueFile::GetBool(const std::string& key, bool fallback) const {
  auto v = Get(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw Error(ErrorCode::kInvalidConfig, fmt::format("{}: not a boolean: '{}'", key, *v));
}

void KeyValueFile::Set(const std::string& key, double value) {
  // Shortest round-trip representation keeps files diffable and exact.
  values_[key] = fmt::format("{}", value);
}

void KeyValueFile::Set(const std::string& key, long long value) {
  values_[key] = std::to_string(value);
}

void WriteFileAtomic(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kUnwritableOutput, path.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(ErrorCode::kUnwritableOutput, path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kUnwritableOutput, path.string() + ": " + ec.message());
}

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace emotts
