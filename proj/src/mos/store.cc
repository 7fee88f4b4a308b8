#include "emotts/mos/store.h"

#include <fcntl.h>
#include <spdlog/spdlog.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>

#include "emotts/common/error.h"

namespace emotts::mos {

JsonlStore::JsonlStore(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path_.parent_path(), ec);
  }
  fd_ = ::open(path_.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) {
    throw Error(ErrorCode::kUnwritableOutput, path_.string() + ": " + std::strerror(errno));
  }
}

JsonlStore::~JsonlStore() {
  if (fd_ >= 0) ::close(fd_);
}

void JsonlStore::Append(const nlohmann::json& record) {
  const std::string line = record.dump() + "\n";
  std::lock_guard lock(mu_);
  const ssize_t n = ::write(fd_, line.data(), line.size());
  if (n != static_cast<ssize_t>(line.size())) {
    throw Error(ErrorCode::kIo, path_.string() + ": short write");
  }
  if (::fsync(fd_) != 0) throw Error(ErrorCode::kIo, path_.string() + ": fsync failed");
}

std::vector<nlohmann::json> JsonlStore::ReadAll() const {
  std::lock_guard lock(mu_);
  std::vector<nlohmann::json> out;
  std::ifstream in(path_);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::parse_error&) {
      spdlog::warn("{}:{}: skipping unreadable record", path_.string(), lineno);
    }
  }
  return out;
}

void MemoryStore::Append(const nlohmann::json& record) {
  std::lock_guard lock(mu_);
  records_.push_back(record);
}

std::vector<nlohmann::json> MemoryStore::ReadAll() const {
  std::lock_guard lock(mu_);
  return records_;
}

}  // namespace emotts::mos
