#include "textattr/annotations.hpp"

#include <stdexcept>

#include "textattr/errors.hpp"
#include "textattr/textio.hpp"

namespace textattr {

std::vector<AnnotationRecord> load_annotations(const std::string& path) {
  auto rows = parse_csv(read_file(path), path);
  if (rows.empty()) throw SchemaError(path + ": empty file");
  const auto& header = rows[0];
  int y_col = -1, yh_col = -1, t_col = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "y") y_col = static_cast<int>(i);
    if (header[i] == "y_hat") yh_col = static_cast<int>(i);
    if (header[i] == "time_seconds") t_col = static_cast<int>(i);
  }
  if (y_col < 0 || yh_col < 0 || t_col < 0) {
    throw SchemaError(path + ": header must contain y, y_hat, time_seconds");
  }
  std::vector<AnnotationRecord> records;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::size_t needed = static_cast<std::size_t>(
        std::max(y_col, std::max(yh_col, t_col)) + 1);
    if (row.size() < needed) {
      throw SchemaError(path + ": row " + std::to_string(r + 1) +
                        " has too few fields");
    }
    AnnotationRecord rec;
    try {
      rec.label = std::stoi(row[static_cast<std::size_t>(y_col)]);
      rec.answer = std::stoi(row[static_cast<std::size_t>(yh_col)]);
      rec.seconds = std::stod(row[static_cast<std::size_t>(t_col)]);
    } catch (const std::exception&) {
      throw SchemaError(path + ": row " + std::to_string(r + 1) +
                        " has non-numeric fields");
    }
    records.push_back(rec);
  }
  if (records.empty()) throw SchemaError(path + ": no data rows");
  return records;
}

}  // namespace textattr
