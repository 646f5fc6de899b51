#pragma once
// Minimal CSV tables: header with units, %.17g numbers, LF line endings.
// Non-finite numbers are refused so NaN never reaches disk.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "cavmol/errors.hpp"

namespace cavmol {

inline std::string format_number(double v) {
  if (!std::isfinite(v)) throw ValidationError("csv", "refusing to write a non-finite value");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Table {
 public:
  using Cell = std::variant<double, int, std::string>;

  Table() = default;
  explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }

  void add_row(const std::vector<Cell>& cells) {
    if (cells.size() != columns_.size()) throw ValidationError("csv", "row width mismatch");
    std::vector<std::string> row;
    row.reserve(cells.size());
    for (const auto& c : cells) {
      if (auto d = std::get_if<double>(&c)) {
        row.push_back(format_number(*d));
      } else if (auto i = std::get_if<int>(&c)) {
        row.push_back(std::to_string(*i));
      } else {
        const auto& s = std::get<std::string>(c);
        if (s.find_first_of(",\n\r\"") != std::string::npos)
          throw ValidationError("csv", "text cell contains a separator");
        row.push_back(s);
      }
    }
    rows_.push_back(std::move(row));
  }

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i)
      if (columns_[i] == name) return i;
    throw ValidationError(name, "no such column");
  }

  std::vector<double> numeric(const std::string& name) const {
    const std::size_t c = column(name);
    std::vector<double> out;
    out.reserve(rows_.size());
    for (const auto& r : rows_) out.push_back(std::stod(r[c]));
    return out;
  }

  std::string to_string() const {
    std::string s;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) s += ',';
        s += cells[i];
      }
      s += '\n';
    };
    line(columns_);
    for (const auto& r : rows_) line(r);
    return s;
  }

  static Table parse(const std::string& text) {
    Table t;
    std::istringstream in(text);
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') throw ValidationError("csv", "CR line ending");
      std::vector<std::string> cells;
      std::size_t start = 0;
      for (;;) {
        const auto comma = line.find(',', start);
        cells.push_back(line.substr(start, comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
      if (header) {
        t.columns_ = std::move(cells);
        header = false;
      } else {
        if (cells.size() != t.columns_.size()) throw ValidationError("csv", "ragged row");
        t.rows_.push_back(std::move(cells));
      }
    }
    if (header) throw ValidationError("csv", "missing header");
    return t;
  }

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

/// Writes the table in binary mode so line endings are LF on every platform.
inline void emit_csv(const Table& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  const auto s = table.to_string();
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline Table read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return Table::parse(ss.str());
}

}  // namespace cavmol
