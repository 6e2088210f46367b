#include "lio/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "lio/errors.hpp"

namespace lio {

std::string fmt_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string csv_escape(const std::string& field) {
  bool needs = field.find_first_of(",\"\r\n") != std::string::npos;
  if (!needs) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

struct CsvWriter::Impl {
  std::ofstream out;
  std::string path;
  bool wrote_header = false;
};

CsvWriter::CsvWriter(const std::string& path) : impl_(new Impl) {
  impl_->path = path;
  impl_->out.open(path, std::ios::binary);
  if (!impl_->out) throw IoError("cannot open for writing: " + path);
}

CsvWriter::~CsvWriter() {
  impl_->out.close();
  delete impl_;
}

void CsvWriter::header(const std::vector<std::string>& names) {
  if (impl_->wrote_header) throw StateError("CsvWriter: header already written");
  impl_->wrote_header = true;
  row(names);
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  auto& out = impl_->out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << csv_escape(fields[i]);
  }
  out << '\n';
  if (!out) throw IoError("write failed: " + impl_->path);
}

void CsvWriter::flush() { impl_->out.flush(); }

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::string text = read_file(path);
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> cur;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t i = 0, n = text.size();
  auto end_field = [&] {
    cur.push_back(field);
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    rows.push_back(cur);
    cur.clear();
  };
  while (i < n) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < n && text[i + 1] == '"') {
          field += '"';
          i += 2;
        } else {
          in_quotes = false;
          ++i;
        }
      } else {
        field += c;
        ++i;
      }
    } else {
      if (c == '"' && !field_started && field.empty()) {
        in_quotes = true;
        field_started = true;
        ++i;
      } else if (c == ',') {
        end_field();
        ++i;
      } else if (c == '\r') {
        ++i;  // swallowed; \r\n and bare \n both end the row at the \n
        if (i < n && text[i] == '\n') {
          end_row();
          ++i;
        } else {
          field += '\r';
        }
      } else if (c == '\n') {
        end_row();
        ++i;
      } else {
        field += c;
        field_started = true;
        ++i;
      }
    }
  }
  if (in_quotes) throw IoError("unterminated quoted field in " + path);
  if (field_started || !field.empty() || !cur.empty()) end_row();
  return rows;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << content;
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace lio
