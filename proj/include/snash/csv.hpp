#ifndef SNASH_CSV_HPP
#define SNASH_CSV_HPP

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <variant>
#include <vector>

#include "snash/errors.hpp"

namespace snash {

using CsvCell = std::variant<double, long long, std::string>;

inline std::string csv_format(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_format(const CsvCell& c) {
  if (const auto* d = std::get_if<double>(&c)) return csv_format(*d);
  if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
  const auto& s = std::get<std::string>(c);
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + "\"";
}

// Comma-separated, LF line endings, header first.
class CsvWriter {
public:
  CsvWriter(const std::filesystem::path& path, std::vector<std::string> header)
      : out_(path, std::ios::binary | std::ios::trunc), columns_(header.size()) {
    if (!out_) throw SolverError("cannot write " + path.string(), {});
    write_line(header);
  }

  void row(std::initializer_list<CsvCell> cells) { row(std::vector<CsvCell>(cells)); }

  void row(const std::vector<CsvCell>& cells) {
    if (cells.size() != columns_) throw SolverError("csv row width does not match header", {});
    std::string line;
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (k) line += ',';
      line += csv_format(cells[k]);
    }
    out_ << line << '\n';
  }

private:
  void write_line(const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (k) line += ',';
      line += cells[k];
    }
    out_ << line << '\n';
  }

  std::ofstream out_;
  std::size_t columns_;
};

}  // namespace snash

#endif  // SNASH_CSV_HPP
