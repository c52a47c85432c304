#pragma once

#include <optional>
#include <string>
#include <vector>

#include "netmpg/types.hpp"

namespace netmpg {

// Fixed CSV dialect: comma separator, header row, decimal dot, LF line ends,
// no locale handling, doubles at 17 significant digits. Empty cells stay empty.
std::string format_real(Real v);

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);

  void add_row(const std::vector<std::string>& cells);
  std::string str() const;
  void write_file(const std::string& path) const;

  static std::string cell(Real v) { return format_real(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(long long v) { return std::to_string(v); }
  static std::string cell(const std::optional<Real>& v) {
    return v.has_value() ? format_real(*v) : std::string();
  }

 private:
  std::size_t columns_;
  std::string body_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv(const std::string& path);

} // namespace netmpg
