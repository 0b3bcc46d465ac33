#include "rkform/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "rkform/errors.hpp"

namespace rkform {

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

Csv::Csv(std::vector<std::string> header) : header_(std::move(header)) {
  if (header_.empty()) throw InvalidArgument("Csv: empty header");
}

Csv& Csv::add_row(std::vector<CsvCell> cells) {
  if (cells.size() != header_.size()) throw InvalidArgument("Csv::add_row: wrong column count");
  rows_.push_back(std::move(cells));
  return *this;
}

std::size_t Csv::column(const std::string& name) const {
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (header_[i] == name) return i;
  }
  throw InvalidArgument("Csv::column: no column named " + name);
}

std::string Csv::str() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < header_.size(); ++i) os << (i ? "," : "") << header_[i];
  os << '\n';
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) os << ',';
      std::visit(
          [&os](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) {
              os << format_double(v);
            } else {
              os << v;
            }
          },
          row[i]);
    }
    os << '\n';
  }
  return os.str();
}

void Csv::write_file(const std::filesystem::path& path) const {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("Csv::write_file: cannot open " + tmp.string());
    out << str();
    if (!out) throw Error("Csv::write_file: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace rkform
