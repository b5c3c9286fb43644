#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace odm {

/// Splits one line; double-quoted fields may contain the delimiter and "" escapes.
std::vector<std::string> split_delimited(const std::string& line, char delim);

/// %.9g, the float format of every CSV this project writes.
std::string format_real(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Throws std::out_of_range for an unknown column.
  std::size_t column(const std::string& name) const;
  std::vector<double> real_column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path, char delim = ',');

}  // namespace odm
