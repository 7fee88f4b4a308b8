#ifndef EMOTTS_COMMON_CSV_H_
#define EMOTTS_COMMON_CSV_H_

#include <string>
#include <vector>

namespace emotts {

using CsvRow = std::vector<std::string>;

// RFC 4180 style: fields containing a comma, quote or newline are quoted.
std::string CsvEscape(const std::string& field);
std::string CsvLine(const CsvRow& row);

// Parses a whole document. A trailing newline does not produce an empty row.
std::vector<CsvRow> ParseCsv(const std::string& text);

}  // namespace emotts

#endif  // EMOTTS_COMMON_CSV_H_
