#pragma once

// RFC 4180 style CSV: comma separated, fields quoted when they contain a
// comma, quote or line break, quotes doubled inside quoted fields.

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace hexar {

using CsvRow = std::vector<std::string>;

class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string csv_escape(const std::string& field);
std::string csv_line(const CsvRow& row);  // no trailing newline

// Accepts \n and \r\n record endings. A trailing newline does not produce an
// empty record. Throws CsvError on an unterminated quote.
std::vector<CsvRow> parse_csv(std::istream& in);
std::vector<CsvRow> parse_csv(const std::string& text);

}  // namespace hexar
