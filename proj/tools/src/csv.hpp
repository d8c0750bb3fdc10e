#pragma once

#include <string>
#include <vector>

#include "cbartgp/errors.hpp"

namespace cbartgp::cli {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int col(const std::string& name) const;
  bool has_col(const std::string& name) const;
  int n_rows() const { return static_cast<int>(rows.size()); }
};

// Numeric CSV with a header row; ragged rows or non-numeric cells are schema
// errors.
CsvTable read_csv(const std::string& path);

// Values are written with 17 significant digits so files round-trip exactly.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

}  // namespace cbartgp::cli
