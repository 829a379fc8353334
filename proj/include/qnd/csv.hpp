#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace qnd {

// 17 significant digits: doubles survive a write/parse round trip exactly.
// NaN serializes as an empty cell.
std::string csv_cell(double v);

class CsvWriter {
  public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

    void row(const std::vector<double>& values);
    void row(const std::vector<std::string>& cells);

  private:
    std::ofstream out_;
    size_t n_cols_;
};

}  // namespace qnd
