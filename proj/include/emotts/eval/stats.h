#ifndef EMOTTS_EVAL_STATS_H_
#define EMOTTS_EVAL_STATS_H_

#include <map>
#include <span>
#include <string>
#include <vector>

namespace emotts::eval {

enum class CiMethod {
  kNormal,    // 1.96 s / sqrt(n)
  kStudentT,  // t_{0.975, n-1} s / sqrt(n)
};

struct MeanCi {
  double mean = 0.0;
  double half_width = 0.0;
  size_t n = 0;
};

// 95% interval; half_width is 0 when n == 1. Throws EmptyInput.
MeanCi ComputeMeanCi(std::span<const double> values, CiMethod method = CiMethod::kNormal);

// "m ± h" with `decimals` fixed digits.
std::string FormatPm(double mean, double half_width, int decimals);

struct RatingRecord {
  std::string session_id;
  std::string listener_id;
  std::string utterance_id;
  std::string emotion;
  std::string kind;  // original | synthesized
  double score = 0;
  double timestamp = 0;  // UTC seconds

  bool operator==(const RatingRecord&) const = default;
};

// True for 0..5 in whole steps, or in half steps when allowed.
bool IsValidScore(double score, bool allow_half = false);

using MosStats = std::map<std::string, MeanCi>;

// Groups by emotion and applies ComputeMeanCi per group; emotions without
// ratings are omitted. Throws InvalidScore.
MosStats MosReport(const std::vector<RatingRecord>& ratings, CiMethod method = CiMethod::kNormal,
                   bool allow_half = false);

// `emotion,mean,ci95,n` rows.
std::string MosReportCsv(const MosStats& stats);
// Text table in the "m ± h" form with two decimals.
std::string MosReportTable(const MosStats& stats);

// `timestamp,session_id,listener_id,utterance_id,emotion,kind,score`
std::string RatingsCsv(const std::vector<RatingRecord>& ratings);
std::vector<RatingRecord> ParseRatingsCsv(const std::string& text);

}  // namespace emotts::eval

#endif  // EMOTTS_EVAL_STATS_H_
