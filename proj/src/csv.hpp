#pragma once

#include "hotdissect/common.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace hotdissect::detail {

struct CsvTable {
  std::filesystem::path path;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;  // 1-based source line of each row

  /// "file:line: message"
  [[noreturn]] void fail(std::size_t row, const std::string& msg) const;
  [[noreturn]] void fail_header(const std::string& msg) const;
};

/// Reads a comma-separated file with a header line. Blank lines and lines
/// starting with '#' are skipped. Every row must match the header width.
CsvTable read_csv(const std::filesystem::path& path);

std::vector<std::string> split_csv_line(const std::string& line);

/// Parses a real number or "NA" (-> NaN). Returns false on malformed text.
bool parse_real(std::string_view text, double& out);

}  // namespace hotdissect::detail
