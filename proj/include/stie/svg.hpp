#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace stie {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;  // non-finite values are skipped
};

/// Minimal SVG line chart, one polyline per series. Log axes drop
/// nonpositive points. Throws std::runtime_error if the file cannot be written.
void write_line_chart(const std::filesystem::path& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<Series>& series, bool log_x = false, bool log_y = false);

}  // namespace stie
