#include "stochmech/io/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "stochmech/errors.hpp"

namespace stochmech::io {
namespace {

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ',';
    out += parts[i];
  }
  return out;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view field_after(std::string_view line, std::string_view key) {
  const auto pos = line.find(key);
  if (pos == std::string_view::npos) return {};
  auto rest = line.substr(pos + key.size());
  return rest.substr(0, rest.find(' '));
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_number(std::string_view text) {
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw InvalidArgument("csv: not a number: '" + std::string(text) + "'");
  return v;
}

void ColumnarOutput::add_column(std::string name, std::string unit, std::vector<double> values) {
  if (!data.empty() && values.size() != rows())
    throw InvalidArgument("csv: column '" + name + "' has " + std::to_string(values.size()) +
                          " rows, expected " + std::to_string(rows()));
  if (name.find_first_of(", \n") != std::string::npos || unit.find_first_of(", \n") != std::string::npos)
    throw InvalidArgument("csv: names and units may not contain commas or blanks");
  columns.push_back(std::move(name));
  units.push_back(std::move(unit));
  data.push_back(std::move(values));
}

const std::vector<double>& ColumnarOutput::column(std::string_view name) const {
  for (std::size_t c = 0; c < columns.size(); ++c)
    if (columns[c] == name) return data[c];
  throw InvalidArgument("csv: no column '" + std::string(name) + "'");
}

std::string render_csv(const ColumnarOutput& t) {
  std::string out = "# spec_hash=" + t.spec_hash + " columns=" + join(t.columns) +
                    " units=" + join(t.units) + "\n" + join(t.columns) + "\n";
  const std::size_t n = t.rows();
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < t.data.size(); ++c) {
      if (c) out += ',';
      out += format_number(t.data[c][r]);
    }
    out += '\n';
  }
  return out;
}

void write_csv(const std::filesystem::path& path, const ColumnarOutput& table) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw SimulationError("io", "cannot write " + path.string());
  f << render_csv(table);
  if (!f) throw SimulationError("io", "write failed: " + path.string());
}

ColumnarOutput read_csv(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InvalidArgument("csv: cannot open " + path.string());
  std::string header, names, line;
  if (!std::getline(f, header) || header.rfind("# spec_hash=", 0) != 0)
    throw InvalidArgument("csv: missing header line in " + path.string());
  ColumnarOutput t;
  t.spec_hash = std::string(field_after(header, "spec_hash="));
  t.columns = split(field_after(header, "columns="), ',');
  t.units = split(field_after(header, "units="), ',');
  if (t.columns.size() != t.units.size())
    throw InvalidArgument("csv: header lists " + std::to_string(t.columns.size()) + " columns and " +
                          std::to_string(t.units.size()) + " units");
  if (!std::getline(f, names) || split(names, ',') != t.columns)
    throw InvalidArgument("csv: column row does not match the header in " + path.string());
  t.data.assign(t.columns.size(), {});
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != t.columns.size())
      throw InvalidArgument("csv: ragged row in " + path.string());
    for (std::size_t c = 0; c < cells.size(); ++c) t.data[c].push_back(parse_number(cells[c]));
  }
  return t;
}

std::string csv_header_hash(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  std::string header;
  if (!f || !std::getline(f, header) || header.rfind("# spec_hash=", 0) != 0) return {};
  return std::string(field_after(header, "spec_hash="));
}

}  // namespace stochmech::io
