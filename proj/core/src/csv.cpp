#include "pdelab/csv.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "pdelab/errors.hpp"

namespace pdelab {

std::string format_number(double value) {
  char buf[64];
  if (value == 0.0) value = 0.0;  // no "-0"
  std::snprintf(buf, sizeof buf, "%.12g", value);
  return buf;
}

void CsvTable::add(std::vector<CsvCell> row) {
  if (row.size() != columns.size())
    throw DimensionMismatch("CSV row has " + std::to_string(row.size()) + " cells, expected " +
                            std::to_string(columns.size()));
  rows.push_back(std::move(row));
}

std::string CsvTable::render(const ExperimentConfig& config) const {
  std::string out = config.header() + "\n";
  for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + columns[i];
  out += "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ",";
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::string>)
              out += v;
            else if constexpr (std::is_same_v<T, long>)
              out += std::to_string(v);
            else
              out += format_number(v);
          },
          row[i]);
    }
    out += "\n";
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error("cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw Error("failed writing '" + path + "'");
}

}  // namespace pdelab
