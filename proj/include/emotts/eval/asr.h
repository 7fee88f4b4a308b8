#ifndef EMOTTS_EVAL_ASR_H_
#define EMOTTS_EVAL_ASR_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>

namespace emotts::eval {

// Speech recognizer used in the loop. Transcribe throws AsrTransport when the
// recognizer cannot be reached or fails; an empty transcript is a valid result.
class AsrAdapter {
 public:
  virtual ~AsrAdapter() = default;
  virtual std::string Transcribe(const std::filesystem::path& wav) = 0;
};

// Runs `<command> <wav_path>` through the shell and returns its standard output.
class CommandAsr : public AsrAdapter {
 public:
  explicit CommandAsr(std::string command) : command_(std::move(command)) {}
  std::string Transcribe(const std::filesystem::path& wav) override;

 private:
  std::string command_;
};

// POSTs the WAV bytes to `url` (http://host[:port]/path, plain HTTP only) and reads the
// `transcript` field of the JSON response.
class HttpAsr : public AsrAdapter {
 public:
  explicit HttpAsr(const std::string& url, int timeout_s = 60);
  std::string Transcribe(const std::filesystem::path& wav) override;

 private:
  std::string scheme_host_port_;
  std::string path_;
  int timeout_s_;
};

// Deterministic stand-in: looks up the reference registered for a path and
// drops each word with probability `drop_prob`, seeded per (seed, path).
// Unregistered paths raise AsrTransport.
class MockAsr : public AsrAdapter {
 public:
  explicit MockAsr(double drop_prob = 0.0, uint64_t seed = 0, bool silent = false)
      : drop_prob_(drop_prob), seed_(seed), silent_(silent) {}

  void Register(const std::filesystem::path& wav, std::string reference);
  std::string Transcribe(const std::filesystem::path& wav) override;

 private:
  double drop_prob_;
  uint64_t seed_;
  bool silent_;
  std::map<std::string, std::string> refs_;
};

// "command:<cmd>", "http://...", or "mock" / "mock-empty" / "mock-drop:<p>".
std::unique_ptr<AsrAdapter> MakeAsr(const std::string& spec, uint64_t seed = 0);

}  // namespace emotts::eval

#endif  // EMOTTS_EVAL_ASR_H_
