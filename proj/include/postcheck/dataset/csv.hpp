#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace postcheck::dataset {

// Delimiter-separated text with RFC 4180 quoting: quoted fields may hold the
// delimiter, newlines and doubled quotes.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a header column, or -1.
  int column(std::string_view name) const;
};

CsvTable read_csv(std::istream& in, char delimiter = ',');
CsvTable read_csv_file(const std::filesystem::path& path);

// ',' unless the extension is .tsv.
char delimiter_for(const std::filesystem::path& path);

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields, char delimiter = ',');
void write_csv_file(const std::filesystem::path& path, const CsvTable& table);

}  // namespace postcheck::dataset
