#pragma once

#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

namespace leafheat {

/// %.17g, with "inf", "-inf" and "nan" for non-finite values.
std::string format_number(double v);
std::string format_number(long v);

/// Comma-separated output: a `# {json}` metadata line, a header row, then rows.
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, const nlohmann::json& meta, std::vector<std::string> columns);

  void row(const std::vector<std::string>& cells);
  std::size_t rows() const { return rows_; }

 private:
  std::ostream& out_;
  std::size_t width_;
  std::size_t rows_ = 0;
};

/// Writes via a temporary file and rename.
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace leafheat
