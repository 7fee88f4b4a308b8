#include "emotts/eval/asr.h"

#include <fmt/format.h>
#include <httplib.h>
#include <sys/wait.h>

#include <cstdio>
#include <nlohmann/json.hpp>
#include <sstream>

#include "emotts/common/error.h"
#include "emotts/common/kv_file.h"
#include "emotts/common/random.h"

namespace emotts::eval {
namespace {

std::string ShellQuote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

uint64_t Fnv1a(const std::string& s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

std::string TrimNewlines(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

}  // namespace

std::string CommandAsr::Transcribe(const std::filesystem::path& wav) {
  const std::string cmd = command_ + " " + ShellQuote(wav.string());
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) throw Error(ErrorCode::kAsrTransport, "cannot start: " + cmd);
  std::string out;
  char buf[4096];
  size_t got;
  while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, got);
  const int status = ::pclose(pipe);
  if (status == -1 || !WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw Error(ErrorCode::kAsrTransport, fmt::format("'{}' failed (status {})", cmd, status));
  }
  return TrimNewlines(out);
}

HttpAsr::HttpAsr(const std::string& url, int timeout_s) : timeout_s_(timeout_s) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::kInvalidConfig, "ASR url needs a scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
}

std::string HttpAsr::Transcribe(const std::filesystem::path& wav) {
  const std::string body = ReadFile(wav);
  httplib::Client client(scheme_host_port_);
  client.set_connection_timeout(timeout_s_);
  client.set_read_timeout(timeout_s_);
  auto res = client.Post(path_, body, "audio/wav");
  if (!res) {
    throw Error(ErrorCode::kAsrTransport,
                fmt::format("{}{}: {}", scheme_host_port_, path_, httplib::to_string(res.error())));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::kAsrTransport, fmt::format("HTTP {}", res->status));
  }
  try {
    const auto j = nlohmann::json::parse(res->body);
    return j.at("transcript").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kAsrTransport, std::string("bad response: ") + e.what());
  }
}

void MockAsr::Register(const std::filesystem::path& wav, std::string reference) {
  refs_[wav.string()] = std::move(reference);
}

std::string MockAsr::Transcribe(const std::filesystem::path& wav) {
  const auto it = refs_.find(wav.string());
  if (it == refs_.end()) throw Error(ErrorCode::kAsrTransport, "mock: unknown " + wav.string());
  if (silent_) return "";
  if (drop_prob_ <= 0.0) return it->second;
  Rng rng(MixSeed(seed_, Fnv1a(it->first)));
  std::istringstream in(it->second);
  std::string word;
  std::string out;
  while (in >> word) {
    if (rng.Uniform() < drop_prob_) continue;
    out += (out.empty() ? "" : " ") + word;
  }
  return out;
}

std::unique_ptr<AsrAdapter> MakeAsr(const std::string& spec, uint64_t seed) {
  if (spec.rfind("command:", 0) == 0) return std::make_unique<CommandAsr>(spec.substr(8));
  if (spec.rfind("http://", 0) == 0) return std::make_unique<HttpAsr>(spec);
  if (spec == "mock") return std::make_unique<MockAsr>();
  if (spec == "mock-empty") return std::make_unique<MockAsr>(0.0, seed, true);
  if (spec.rfind("mock-drop:", 0) == 0) {
    return std::make_unique<MockAsr>(std::stod(spec.substr(10)), seed);
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown ASR adapter: " + spec);
}

}  // namespace emotts::eval
