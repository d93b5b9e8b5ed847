#include "eparvi/csv.hpp"

#include "eparvi/error.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace eparvi {

namespace {

std::string trim(const std::string &s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string &line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) {
    out.push_back(trim(field));
  }
  if (!line.empty() && line.back() == ',') {
    out.emplace_back();
  }
  return out;
}

} // namespace

std::size_t CsvTable::index_of(const std::string &name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) {
      return i;
    }
  }
  throw DataError("missing column '" + name + "'");
}

std::vector<double> CsvTable::column(const std::string &name) const {
  const std::size_t idx = index_of(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto &row : rows) {
    out.push_back(row[idx]);
  }
  return out;
}

CsvTable read_csv(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open " + path.string());
  }
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) {
    throw DataError(path.string() + ": empty file");
  }
  table.header = split(line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) {
      continue;
    }
    const auto fields = split(line);
    if (fields.size() != table.header.size()) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": expected " + std::to_string(table.header.size()) +
                      " fields, got " + std::to_string(fields.size()));
    }
    std::vector<double> row(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const auto &f = fields[i];
      const auto *end = f.data() + f.size();
      const auto [ptr, ec] = std::from_chars(f.data(), end, row[i]);
      if (ec != std::errc() || ptr != end) {
        throw DataError(path.string() + ":" + std::to_string(line_no) +
                        ": column '" + table.header[i] +
                        "' is not numeric: '" + f + "'");
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) {
    return std::to_string(value);
  }
  return std::string(buf, ptr);
}

} // namespace eparvi
