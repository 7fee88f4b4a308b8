#ifndef EMOTTS_COMMON_KV_FILE_H_
#define EMOTTS_COMMON_KV_FILE_H_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>

namespace emotts {

// Flat `key = value` text config. Lines starting with '#' are comments.
// Keys are kept sorted so serialization is deterministic.
class KeyValueFile {
 public:
  static KeyValueFile Parse(const std::string& text);
  static KeyValueFile Load(const std::filesystem::path& path);

  void Save(const std::filesystem::path& path) const;
  std::string Serialize() const;

  bool Has(const std::string& key) const { return values_.count(key) > 0; }
  std::optional<std::string> Get(const std::string& key) const;

  std::string GetString(const std::string& key, const std::string& fallback) const;
  double GetDouble(const std::string& key, double fallback) const;
  long long GetInt(const std::string& key, long long fallback) const;
  bool GetBool(const std::string& key, bool fallback) const;

  void Set(const std::string& key, const std::string& value) { values_[key] = value; }
  void Set(const std::string& key, double value);
  void Set(const std::string& key, long long value);
  void Set(const std::string& key, int value) { Set(key, static_cast<long long>(value)); }

  const std::map<std::string, std::string>& values() const& { return values_; }
  std::map<std::string, std::string> values() && { return std::move(values_); }

 private:
  std::map<std::string, std::string> values_;
};

// Writes `contents` to a sibling temp file and renames it over `path`.
void WriteFileAtomic(const std::filesystem::path& path, const std::string& contents);

std::string ReadFile(const std::filesystem::path& path);

}  // namespace emotts

#endif  // EMOTTS_COMMON_KV_FILE_H_
