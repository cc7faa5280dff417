#include "evdro/csv.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace evdro {
namespace csv {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

}  // namespace

Table Table::read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("missing file: " + path.string());

  Table t;
  t.path_ = path.string();
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split_line(line);
    for (auto& f : fields) f = trim(f);
    if (t.header_.empty()) {
      t.header_ = fields;
      for (std::size_t i = 0; i < fields.size(); ++i) t.index_[fields[i]] = i;
      continue;
    }
    if (fields.size() != t.header_.size()) {
      throw Error(t.path_ + ":" + std::to_string(lineno) + ": expected " +
                  std::to_string(t.header_.size()) + " columns, got " +
                  std::to_string(fields.size()));
    }
    t.cells_.push_back(std::move(fields));
    t.lines_.push_back(lineno);
  }
  if (t.header_.empty()) throw Error(t.path_ + ": empty file (header row required)");
  return t;
}

bool Table::has_column(const std::string& name) const {
  return index_.count(name) > 0;
}

const std::string& Table::cell(std::size_t row, const std::string& col) const {
  auto it = index_.find(col);
  if (it == index_.end())
    throw Error(path_ + ": missing column '" + col + "'");
  return cells_[row][it->second];
}

double Table::number(std::size_t row, const std::string& col) const {
  const std::string& s = cell(row, col);
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE) {
    throw Error(path_ + ":" + std::to_string(lines_[row]) + ": column '" + col +
                "': malformed number '" + s + "'");
  }
  return v;
}

long long Table::integer(std::size_t row, const std::string& col) const {
  const std::string& s = cell(row, col);
  errno = 0;
  char* end = nullptr;
  long long v = std::strtoll(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE) {
    throw Error(path_ + ":" + std::to_string(lines_[row]) + ": column '" + col +
                "': malformed integer '" + s + "'");
  }
  return v;
}

std::string format_number(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", value);
  return buf;
}

Writer::Writer(const std::filesystem::path& path) : path_(path.string()) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
}

Writer::~Writer() {
  std::ofstream out(path_, std::ios::binary);
  out << buffer_;
}

Writer& Writer::raw(const std::string& text) {
  buffer_ += text;
  return *this;
}

Writer& Writer::field(const std::string& value) {
  if (row_open_) buffer_ += ',';
  buffer_ += value;
  row_open_ = true;
  return *this;
}

Writer& Writer::field(double value) { return field(format_number(value)); }

Writer& Writer::field(long long value) { return field(std::to_string(value)); }

void Writer::end_row() {
  buffer_ += '\n';
  row_open_ = false;
}

}  // namespace csv
}  // namespace evdro
