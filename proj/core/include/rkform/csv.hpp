#pragma once

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace rkform {

using CsvCell = std::variant<double, long, std::string>;

/// In-memory CSV table: header row, comma separated, LF line endings,
/// doubles printed with 17 significant digits.
class Csv {
 public:
  explicit Csv(std::vector<std::string> header);

  Csv& add_row(std::vector<CsvCell> cells);

  const std::vector<std::string>& header() const { return header_; }
  std::size_t num_rows() const { return rows_.size(); }
  const std::vector<CsvCell>& row(std::size_t i) const { return rows_[i]; }
  /// Column index by name; throws InvalidArgument if absent.
  std::size_t column(const std::string& name) const;

  std::string str() const;
  /// Writes to a temporary sibling file and renames it into place.
  void write_file(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<CsvCell>> rows_;
};

std::string format_double(double value);

}  // namespace rkform
