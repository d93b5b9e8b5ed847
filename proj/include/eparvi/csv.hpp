#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace eparvi {

/// Numeric CSV with a single header row.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Column index by name; throws DataError naming the missing column.
  std::size_t index_of(const std::string &name) const;
  std::vector<double> column(const std::string &name) const;
};

/// Throws DataError if the file is missing, a field is not numeric or a row
/// has the wrong number of fields.
CsvTable read_csv(const std::filesystem::path &path);

/// Shortest round-trip decimal representation of a double.
std::string format_double(double value);

} // namespace eparvi
