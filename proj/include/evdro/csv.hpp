#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "evdro/error.hpp"

namespace evdro {
namespace csv {

/// One parsed CSV file: header-indexed cells with per-row provenance.
class Table {
 public:
  static Table read_file(const std::filesystem::path& path);

  std::size_t rows() const { return cells_.size(); }
  const std::vector<std::string>& header() const { return header_; }
  bool has_column(const std::string& name) const;

  /// Cell accessors throw Error naming file, line and column on any problem.
  const std::string& cell(std::size_t row, const std::string& col) const;
  double number(std::size_t row, const std::string& col) const;
  long long integer(std::size_t row, const std::string& col) const;

  /// 1-based line number in the source file for error reporting.
  int line_of(std::size_t row) const { return lines_[row]; }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::vector<std::string> header_;
  std::map<std::string, std::size_t> index_;
  std::vector<std::vector<std::string>> cells_;
  std::vector<int> lines_;
};

/// Writes rows with fixed 9-significant-digit formatting so repeated runs
/// are byte-identical.
class Writer {
 public:
  explicit Writer(const std::filesystem::path& path);
  ~Writer();

  Writer& raw(const std::string& text);
  Writer& field(const std::string& value);
  Writer& field(double value);
  Writer& field(long long value);
  Writer& field(int value) { return field(static_cast<long long>(value)); }
  Writer& field(std::size_t value) { return field(static_cast<long long>(value)); }
  void end_row();

 private:
  std::string path_;
  std::string buffer_;
  bool row_open_ = false;
};

/// %.9g rendering used for every numeric output.
std::string format_number(double value);

}  // namespace csv
}  // namespace evdro
