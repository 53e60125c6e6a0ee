#include "stie/csv.hpp"

#include <array>
#include <charconv>
#include <sstream>
#include <stdexcept>

namespace stie {

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& path,
                     const std::vector<std::pair<std::string, std::string>>& metadata,
                     const std::vector<std::string>& columns)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc), columns_(columns.size()) {
  if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (const auto& [key, value] : metadata) out_ << "# " << key << " = " << value << '\n';
  for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
  out_ << '\n';
}

CsvWriter& CsvWriter::cell(const std::string& text) {
  row_.push_back(text);
  return *this;
}

void CsvWriter::end_row() {
  if (row_.size() != columns_) {
    throw std::logic_error("CsvWriter: row has " + std::to_string(row_.size()) + " cells, expected " +
                           std::to_string(columns_));
  }
  for (std::size_t i = 0; i < row_.size(); ++i) out_ << (i ? "," : "") << row_[i];
  out_ << '\n';
  row_.clear();
}

void CsvWriter::close() {
  out_.flush();
  if (!out_) throw std::runtime_error("write failed: " + path_.string());
  out_.close();
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  throw std::out_of_range("no column " + name);
}

std::optional<std::string> CsvTable::meta(const std::string& key) const {
  for (const auto& [k, v] : metadata) {
    if (k == key) return v;
  }
  return std::nullopt;
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  CsvTable t;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.rfind("# ", 0) == 0) {
      const auto eq = line.find(" = ");
      if (eq != std::string::npos) t.metadata.emplace_back(line.substr(2, eq - 2), line.substr(eq + 3));
      continue;
    }
    if (!header) {
      t.columns = split(line);
      header = true;
    } else {
      t.rows.push_back(split(line));
    }
  }
  return t;
}

}  // namespace stie
