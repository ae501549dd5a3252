#include "leafheat/io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "leafheat/types.hpp"

namespace leafheat {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_number(long v) { return std::to_string(v); }

CsvWriter::CsvWriter(std::ostream& out, const nlohmann::json& meta,
                     std::vector<std::string> columns)
    : out_(out), width_(columns.size()) {
  out_ << "# " << meta.dump() << '\n';
  row(columns);
  rows_ = 0;
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != width_) throw InvalidArgument("csv: row width does not match header");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    out_ << cells[i];
  }
  out_ << '\n';
  ++rows_;
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw Error("cannot write " + tmp.string());
    f << contents;
    if (!f) throw Error("cannot write " + tmp.string());
  }
  fs::rename(tmp, target);
}

}  // namespace leafheat
