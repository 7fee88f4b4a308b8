#include "emotts/eval/stats.h"

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

#include <cmath>
#include <cstdio>

#include "emotts/common/csv.h"
#include "emotts/common/error.h"

namespace emotts::eval {

MeanCi ComputeMeanCi(std::span<const double> values, CiMethod method) {
  if (values.empty()) throw Error(ErrorCode::kEmptyInput, "mean_ci needs at least one value");
  MeanCi r;
  r.n = values.size();
  const double n = static_cast<double>(r.n);
  double sum = 0.0;
  for (double v : values) sum += v;
  r.mean = sum / n;
  if (r.n == 1) return r;
  double ss = 0.0;
  for (double v : values) ss += (v - r.mean) * (v - r.mean);
  const double s = std::sqrt(ss / (n - 1.0));
  double z = 1.96;
  if (method == CiMethod::kStudentT) {
    z = boost::math::quantile(boost::math::students_t(n - 1.0), 0.975);
  }
  r.half_width = z * s / std::sqrt(n);
  return r;
}

std::string FormatPm(double mean, double half_width, int decimals) {
  if (decimals < 0) throw Error(ErrorCode::kInvalidConfig, "decimals must be >= 0");
  // printf rounds the exact binary value under the default round-half-even mode.
  char a[64];
  char b[64];
  std::snprintf(a, sizeof a, "%.*f", decimals, mean);
  std::snprintf(b, sizeof b, "%.*f", decimals, half_width);
  return std::string(a) + " ± " + b;
}

bool IsValidScore(double score, bool allow_half) {
  if (!(score >= 0.0 && score <= 5.0)) return false;
  const double scaled = allow_half ? score * 2.0 : score;
  return scaled == std::floor(scaled);
}

MosStats MosReport(const std::vector<RatingRecord>& ratings, CiMethod method, bool allow_half) {
  std::map<std::string, std::vector<double>> groups;
  for (const auto& r : ratings) {
    if (!IsValidScore(r.score, allow_half)) {
      throw Error(ErrorCode::kInvalidScore,
                  fmt::format("score {} for {} is outside the 0-5 scale", r.score, r.utterance_id));
    }
    groups[r.emotion].push_back(r.score);
  }
  MosStats out;
  for (const auto& [emotion, scores] : groups) out[emotion] = ComputeMeanCi(scores, method);
  return out;
}

std::string MosReportCsv(const MosStats& stats) {
  std::string out = "emotion,mean,ci95,n\n";
  for (const auto& [emotion, s] : stats) {
    out += CsvLine({emotion, fmt::format("{}", s.mean), fmt::format("{}", s.half_width),
                    std::to_string(s.n)});
  }
  return out;
}

std::string MosReportTable(const MosStats& stats) {
  size_t width = 7;
  for (const auto& [emotion, s] : stats) width = std::max(width, emotion.size());
  std::string out = fmt::format("{:<{}}  {}\n", "Emotion", width, "MOS");
  for (const auto& [emotion, s] : stats) {
    out += fmt::format("{:<{}}  {}\n", emotion, width, FormatPm(s.mean, s.half_width, 2));
  }
  return out;
}

std::string RatingsCsv(const std::vector<RatingRecord>& ratings) {
  std::string out = "timestamp,session_id,listener_id,utterance_id,emotion,kind,score\n";
  for (const auto& r : ratings) {
    out += CsvLine({fmt::format("{:.3f}", r.timestamp), r.session_id, r.listener_id,
                    r.utterance_id, r.emotion, r.kind, fmt::format("{}", r.score)});
  }
  return out;
}

std::vector<RatingRecord> ParseRatingsCsv(const std::string& text) {
  const auto rows = ParseCsv(text);
  std::vector<RatingRecord> out;
  for (size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() != 7) {
      throw Error(ErrorCode::kInvalidConfig, fmt::format("ratings row {}: expected 7 fields", i + 1));
    }
    RatingRecord r;
    try {
      r.timestamp = std::stod(row[0]);
      r.score = std::stod(row[6]);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidConfig, fmt::format("ratings row {}: bad number", i + 1));
    }
    r.session_id = row[1];
    r.listener_id = row[2];
    r.utterance_id = row[3];
    r.emotion = row[4];
    r.kind = row[5];
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace emotts::eval
