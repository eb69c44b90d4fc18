#pragma once

// Minimal CSV plumbing shared by every file format in the pipeline. Fields are
// plain comma-separated values without quoting; station ids must not contain
// commas.

#include "surge/core.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace surge::csv {

inline std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      break;
    }
    out.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r' || s[b] == '\n')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r' || s[e - 1] == '\n')) --e;
  return std::string(s.substr(b, e - b));
}

/// Shortest representation that parses back to the same double.
inline std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// One parsed record with its 1-based line number for diagnostics.
struct Row {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

/// Reads a whole table, verifying the header matches `expected` exactly.
class Table {
 public:
  static Table read(std::istream& in, const std::vector<std::string>& expected, const std::string& source) {
    Table t;
    t.source_ = source;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
      ++line_no;
      std::string clean = trim(line);
      if (line_no == 1 && clean.size() >= 3 && static_cast<unsigned char>(clean[0]) == 0xEF) clean = clean.substr(3);
      if (clean.empty()) continue;
      auto fields = split(clean);
      for (auto& f : fields) f = trim(f);
      if (!have_header) {
        if (fields != expected) {
          std::string want;
          for (std::size_t i = 0; i < expected.size(); ++i) want += (i ? "," : "") + expected[i];
          throw FormatError(source + ":" + std::to_string(line_no) + ": unexpected header, want '" + want + "'");
        }
        have_header = true;
        continue;
      }
      if (fields.size() != expected.size()) {
        throw FormatError(source + ":" + std::to_string(line_no) + ": expected " + std::to_string(expected.size()) +
                          " fields, got " + std::to_string(fields.size()));
      }
      t.rows_.push_back(Row{line_no, std::move(fields)});
    }
    if (!have_header) throw FormatError(source + ": missing header");
    return t;
  }

  static Table read_file(const std::string& path, const std::vector<std::string>& expected) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    return read(in, expected, path);
  }

  const std::vector<Row>& rows() const { return rows_; }
  const std::string& source() const { return source_; }

  /// Parses a finite number; empty fields yield std::nullopt.
  std::optional<double> number(const Row& row, std::size_t col) const {
    const std::string& f = row.fields.at(col);
    if (f.empty()) return std::nullopt;
    double v = 0.0;
    const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
    if (res.ec != std::errc() || res.ptr != f.data() + f.size() || !std::isfinite(v)) {
      throw FormatError(where(row) + ": field " + std::to_string(col + 1) + " is not a finite number: '" + f + "'");
    }
    return v;
  }

  double required_number(const Row& row, std::size_t col) const {
    auto v = number(row, col);
    if (!v) throw FormatError(where(row) + ": field " + std::to_string(col + 1) + " is empty");
    return *v;
  }

  long long integer(const Row& row, std::size_t col) const {
    const std::string& f = row.fields.at(col);
    long long v = 0;
    const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
    if (res.ec != std::errc() || res.ptr != f.data() + f.size()) {
      throw FormatError(where(row) + ": field " + std::to_string(col + 1) + " is not an integer: '" + f + "'");
    }
    return v;
  }

  std::string where(const Row& row) const { return source_ + ":" + std::to_string(row.line); }

 private:
  std::string source_;
  std::vector<Row> rows_;
};

inline void write_header(std::ostream& out, const std::vector<std::string>& cols) {
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
}

}  // namespace surge::csv
