#ifndef EMOTTS_MOS_STORE_H_
#define EMOTTS_MOS_STORE_H_

#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace emotts::mos {

// Durable append-only record log.
class RecordStore {
 public:
  virtual ~RecordStore() = default;
  // Returns only after the record is durable.
  virtual void Append(const nlohmann::json& record) = 0;
  virtual std::vector<nlohmann::json> ReadAll() const = 0;
};

// One JSON object per line. Each record is written with a single write(2) on
// an O_APPEND descriptor and fsync'd before Append returns. A torn final line
// (crash mid-write) is ignored on reload.
class JsonlStore : public RecordStore {
 public:
  explicit JsonlStore(std::filesystem::path path);
  ~JsonlStore() override;

  JsonlStore(const JsonlStore&) = delete;
  JsonlStore& operator=(const JsonlStore&) = delete;

  void Append(const nlohmann::json& record) override;
  std::vector<nlohmann::json> ReadAll() const override;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  int fd_ = -1;
  mutable std::mutex mu_;
};

class MemoryStore : public RecordStore {
 public:
  void Append(const nlohmann::json& record) override;
  std::vector<nlohmann::json> ReadAll() const override;

 private:
  std::vector<nlohmann::json> records_;
  mutable std::mutex mu_;
};

}  // namespace emotts::mos

#endif  // EMOTTS_MOS_STORE_H_
