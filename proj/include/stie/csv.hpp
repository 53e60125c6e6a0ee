#pragma once

// Flat CSV output with a leading '#' metadata block.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace stie {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

class CsvWriter {
 public:
  /// Throws std::runtime_error if the file cannot be opened.
  CsvWriter(const std::filesystem::path& path,
            const std::vector<std::pair<std::string, std::string>>& metadata,
            const std::vector<std::string>& columns);

  CsvWriter& cell(const std::string& text);
  CsvWriter& cell(double v) { return cell(format_double(v)); }
  CsvWriter& cell(std::int64_t v) { return cell(std::to_string(v)); }
  CsvWriter& cell(std::uint64_t v) { return cell(std::to_string(v)); }
  CsvWriter& cell(bool v) { return cell(std::string(v ? "1" : "0")); }
  template <typename T>
  CsvWriter& cell(const std::optional<T>& v) {
    return v ? cell(*v) : cell(std::string());
  }
  /// Throws std::logic_error if the row has the wrong number of cells.
  void end_row();
  /// Throws std::runtime_error on a write failure.
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t columns_;
  std::vector<std::string> row_;
};

struct CsvTable {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  /// Throws std::out_of_range for an unknown column.
  std::size_t column(const std::string& name) const;
  std::optional<std::string> meta(const std::string& key) const;
};

/// Reads a file written by CsvWriter. Throws std::runtime_error if it cannot
/// be opened.
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace stie
