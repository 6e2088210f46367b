#pragma once

#include <string>
#include <vector>

namespace lio {

/// Format a double with 17 significant digits, enough for bit-exact
/// round-trip through text.
std::string fmt_g17(double v);

/// Quote a field per RFC 4180 when it contains a comma, quote, or newline.
std::string csv_escape(const std::string& field);

/// Streaming CSV writer: header first, then rows.  All text is UTF-8.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void header(const std::vector<std::string>& names);
  void row(const std::vector<std::string>& fields);
  void flush();

 private:
  struct Impl;
  Impl* impl_;
};

/// Whole-file CSV reader handling RFC 4180 quoting.  Returns all records
/// including the header row.
std::vector<std::vector<std::string>> read_csv(const std::string& path);

/// Entire file as bytes; IoError if unreadable.
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace lio
