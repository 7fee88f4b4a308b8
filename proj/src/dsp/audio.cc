#include "emotts/dsp/audio.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>

#include "emotts/common/error.h"

namespace emotts::dsp {
namespace {

uint32_t ReadU32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t ReadU16(const unsigned char* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

void PutU32(std::vector<unsigned char>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

void PutU16(std::vector<unsigned char>& out, uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>(v >> 8));
}

struct ParsedWav {
  WavInfo info;
  size_t data_offset = 0;
  size_t data_size = 0;
};

std::vector<unsigned char> ReadBytes(const std::filesystem::path& path, size_t limit) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw Error(ErrorCode::kMissingFile, path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, path.string());
  std::vector<unsigned char> bytes;
  const auto size = static_cast<size_t>(std::filesystem::file_size(path));
  bytes.resize(std::min(size, limit));
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  return bytes;
}

// `bytes` may be a prefix of the file when only the header is needed.
ParsedWav ParseHeader(const std::vector<unsigned char>& bytes, size_t file_size,
                      const std::string& name) {
  auto bad = [&](const char* why) {
    return Error(ErrorCode::kUndecodableAudio, fmt::format("{}: {}", name, why));
  };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw bad("not a RIFF/WAVE file");
  }
  ParsedWav out;
  bool have_fmt = false;
  int format_tag = 0;
  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const uint32_t size = ReadU32(chunk + 4);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || pos + 8 + size > bytes.size()) throw bad("truncated fmt chunk");
      format_tag = ReadU16(chunk + 8);
      out.info.channels = ReadU16(chunk + 10);
      out.info.rate = static_cast<int>(ReadU32(chunk + 12));
      out.info.bits_per_sample = ReadU16(chunk + 22);
      if (format_tag == 0xFFFE && size >= 26) format_tag = ReadU16(chunk + 32);
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) throw bad("data chunk before fmt chunk");
      out.data_offset = pos + 8;
      out.data_size = std::min<size_t>(size, file_size - out.data_offset);
      break;
    }
    pos += 8 + size + (size & 1);
  }
  if (!have_fmt || out.data_offset == 0) throw bad("missing fmt or data chunk");
  if (out.info.channels < 1 || out.info.rate <= 0) throw bad("invalid channel count or rate");
  const int bits = out.info.bits_per_sample;
  if (format_tag == 1) {
    if (bits != 8 && bits != 16 && bits != 24 && bits != 32) throw bad("unsupported PCM width");
  } else if (format_tag == 3) {
    if (bits != 32 && bits != 64) throw bad("unsupported float width");
    out.info.is_float = true;
  } else {
    throw bad("unsupported sample format");
  }
  const size_t frame_bytes = static_cast<size_t>(bits / 8) * out.info.channels;
  out.info.frames = out.data_size / frame_bytes;
  return out;
}

double DecodeSample(const unsigned char* p, int bits, bool is_float) {
  if (is_float) {
    if (bits == 32) {
      uint32_t u = ReadU32(p);
      float f;
      std::memcpy(&f, &u, 4);
      return f;
    }
    uint64_t u = static_cast<uint64_t>(ReadU32(p)) | (static_cast<uint64_t>(ReadU32(p + 4)) << 32);
    double d;
    std::memcpy(&d, &u, 8);
    return d;
  }
  switch (bits) {
    case 8: return (static_cast<int>(p[0]) - 128) / 128.0;
    case 16: return static_cast<int16_t>(ReadU16(p)) / 32768.0;
    case 24: {
      int32_t v = static_cast<int32_t>((p[0] << 8) | (p[1] << 16) | (p[2] << 24)) >> 8;
      return v / 8388608.0;
    }
    default: return static_cast<int32_t>(ReadU32(p)) / 2147483648.0;
  }
}

double Sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = M_PI * x;
  return std::sin(px) / px;
}

}  // namespace

WavInfo ReadWavInfo(const std::filesystem::path& path) {
  auto bytes = ReadBytes(path, 1 << 16);
  const auto size = static_cast<size_t>(std::filesystem::file_size(path));
  return ParseHeader(bytes, size, path.string()).info;
}

AudioBuffer ReadWav(const std::filesystem::path& path) {
  auto bytes = ReadBytes(path, static_cast<size_t>(-1));
  const ParsedWav parsed = ParseHeader(bytes, bytes.size(), path.string());
  const WavInfo& info = parsed.info;
  const int width = info.bits_per_sample / 8;
  AudioBuffer buf;
  buf.rate = info.rate;
  buf.samples.resize(info.frames);
  const unsigned char* data = bytes.data() + parsed.data_offset;
  for (size_t f = 0; f < info.frames; ++f) {
    double acc = 0.0;
    for (int c = 0; c < info.channels; ++c) {
      acc += DecodeSample(data + (f * info.channels + c) * width, info.bits_per_sample,
                          info.is_float);
    }
    const double v = acc / info.channels;
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kUndecodableAudio, path.string() + ": non-finite sample");
    }
    buf.samples[f] = v;
  }
  return buf;
}

std::vector<unsigned char> EncodeWav(const AudioBuffer& buf) {
  const uint32_t data_size = static_cast<uint32_t>(buf.samples.size() * 2);
  std::vector<unsigned char> out;
  out.reserve(44 + data_size);
  auto tag = [&](const char* t) { out.insert(out.end(), t, t + 4); };
  tag("RIFF");
  PutU32(out, 36 + data_size);
  tag("WAVE");
  tag("fmt ");
  PutU32(out, 16);
  PutU16(out, 1);
  PutU16(out, 1);
  PutU32(out, static_cast<uint32_t>(buf.rate));
  PutU32(out, static_cast<uint32_t>(buf.rate) * 2);
  PutU16(out, 2);
  PutU16(out, 16);
  tag("data");
  PutU32(out, data_size);
  for (double s : buf.samples) {
    const double c = std::clamp(std::isfinite(s) ? s : 0.0, -1.0, 1.0);
    const auto v = static_cast<int16_t>(std::lround(std::clamp(c * 32768.0, -32768.0, 32767.0)));
    PutU16(out, static_cast<uint16_t>(v));
  }
  return out;
}

void WriteWav(const std::filesystem::path& path, const AudioBuffer& buf) {
  const auto bytes = EncodeWav(buf);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kUnwritableOutput, path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kUnwritableOutput, path.string());
}

AudioBuffer Resample(const AudioBuffer& in, int target_rate) {
  if (target_rate <= 0 || in.rate <= 0) {
    throw Error(ErrorCode::kInvalidConfig, "sample rates must be positive");
  }
  if (in.rate == target_rate) return in;

  const long long g = std::gcd(in.rate, target_rate);
  const long long up = target_rate / g;    // phases
  const long long down = in.rate / g;
  const double ratio = static_cast<double>(target_rate) / in.rate;
  // Cutoff relative to the input Nyquist; slightly below the output Nyquist.
  const double cutoff = 0.97 * std::min(1.0, ratio);
  constexpr int kZeroCrossings = 16;
  const int half = static_cast<int>(std::ceil(kZeroCrossings / cutoff));
  const double beta = 8.6;
  const double i0_beta = std::cyl_bessel_i(0.0, beta);

  // Polyphase table: phase p covers fractional offset p / up.
  std::vector<std::vector<double>> table(static_cast<size_t>(up));
  for (long long p = 0; p < up; ++p) {
    const double frac = static_cast<double>(p) / up;
    auto& taps = table[static_cast<size_t>(p)];
    taps.resize(2 * half + 1);
    for (int k = -half; k <= half; ++k) {
      const double x = k - frac;  // distance from the output instant
      const double r = x / (half + 1);
      const double w = std::abs(r) >= 1.0
                           ? 0.0
                           : std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - r * r)) / i0_beta;
      taps[k + half] = cutoff * Sinc(cutoff * x) * w;
    }
  }

  AudioBuffer out;
  out.rate = target_rate;
  const long long n_in = static_cast<long long>(in.samples.size());
  const long long n_out = (n_in * up + down - 1) / down;
  out.samples.resize(static_cast<size_t>(n_out));
  for (long long m = 0; m < n_out; ++m) {
    const long long num = m * down;
    const long long base = num / up;
    const auto& taps = table[static_cast<size_t>(num % up)];
    double acc = 0.0;
    for (int k = -half; k <= half; ++k) {
      const long long idx = base + k;
      if (idx < 0 || idx >= n_in) continue;
      acc += in.samples[static_cast<size_t>(idx)] * taps[k + half];
    }
    out.samples[static_cast<size_t>(m)] = acc;
  }
  return out;
}

AudioBuffer LoadAudio(const std::filesystem::path& path, int target_rate) {
  return Resample(ReadWav(path), target_rate);
}

AudioBuffer TrimSilence(const AudioBuffer& buf, double top_db, const TrimOptions& opts) {
  if (opts.frame_length < 1 || opts.hop < 1 || top_db <= 0.0) {
    throw Error(ErrorCode::kInvalidConfig, "trim: frame_length, hop and top_db must be positive");
  }
  const size_t n = buf.samples.size();
  const size_t hop = static_cast<size_t>(opts.hop);
  const size_t frame = static_cast<size_t>(opts.frame_length);
  const size_t n_frames = n == 0 ? 0 : (n + hop - 1) / hop;

  std::vector<double> power(n_frames, 0.0);
  double peak = 0.0;
  for (size_t f = 0; f < n_frames; ++f) {
    const size_t begin = f * hop;
    const size_t end = std::min(n, begin + frame);
    double acc = 0.0;
    for (size_t i = begin; i < end; ++i) acc += buf.samples[i] * buf.samples[i];
    power[f] = acc / static_cast<double>(end - begin);
    peak = std::max(peak, power[f]);
  }
  if (peak <= 0.0) throw Error(ErrorCode::kEmptyAfterTrim, "signal is entirely silent");

  const double threshold = peak * std::pow(10.0, -top_db / 10.0);
  size_t first = n_frames;
  size_t last = 0;
  for (size_t f = 0; f < n_frames; ++f) {
    if (power[f] > threshold) {
      first = std::min(first, f);
      last = f;
    }
  }
  AudioBuffer out;
  out.rate = buf.rate;
  const size_t start = first * hop;
  const size_t stop = std::min(n, (last + 1) * hop);
  out.samples.assign(buf.samples.begin() + static_cast<std::ptrdiff_t>(start),
                     buf.samples.begin() + static_cast<std::ptrdiff_t>(stop));
  return out;
}

std::vector<double> PreEmphasis(std::span<const double> x, double coeff) {
  std::vector<double> y(x.size());
  for (size_t i = 0; i < x.size(); ++i) y[i] = i == 0 ? x[0] : x[i] - coeff * x[i - 1];
  return y;
}

std::vector<double> DeEmphasis(std::span<const double> x, double coeff) {
  std::vector<double> y(x.size());
  double prev = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    prev = x[i] + coeff * prev;
    y[i] = prev;
  }
  return y;
}

}  // namespace emotts::dsp
