#pragma once

#include <string>
#include <variant>
#include <vector>

#include "pdelab/config.hpp"

namespace pdelab {

using CsvCell = std::variant<std::string, long, double>;

/// Header line with the run config, a column line, then one line per row.
/// Doubles print with 12 significant digits.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<CsvCell>> rows;

  void add(std::vector<CsvCell> row);
  std::string render(const ExperimentConfig& config) const;
};

std::string format_number(double value);

/// Writes `text` to `path`, creating parent directories. Throws Error on failure.
void write_text_file(const std::string& path, const std::string& text);

}  // namespace pdelab
