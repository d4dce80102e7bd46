#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace stochmech::io {

/// Shortest text that reads back to the same double ("nan", "inf" for
/// non-finite values).
std::string format_number(double v);
double parse_number(std::string_view text);

/// Column-major numeric table with its header metadata.
struct ColumnarOutput {
  std::string spec_hash;
  std::vector<std::string> columns;
  std::vector<std::string> units;
  std::vector<std::vector<double>> data;  ///< one vector per column

  void add_column(std::string name, std::string unit, std::vector<double> values);
  std::size_t rows() const { return data.empty() ? 0 : data.front().size(); }
  const std::vector<double>& column(std::string_view name) const;
};

/// Line 1: `# spec_hash=<hex> columns=<a,b> units=<u,v>`, line 2: the column
/// names, then one comma-separated row per line.
std::string render_csv(const ColumnarOutput& table);
void write_csv(const std::filesystem::path& path, const ColumnarOutput& table);
/// Throws InvalidArgument on a malformed header or ragged rows.
ColumnarOutput read_csv(const std::filesystem::path& path);

/// spec_hash of the first line, empty when the file has no such header.
std::string csv_header_hash(const std::filesystem::path& path);

}  // namespace stochmech::io
