#include "postcheck/dataset/csv.hpp"

#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>

#include "postcheck/common/error.hpp"

namespace postcheck::dataset {

int CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

CsvTable read_csv(std::istream& in, char delimiter) {
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool field_started = false;

  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    if (!(row.size() == 1 && row[0].empty())) records.push_back(std::move(row));
    row.clear();
  };

  std::size_t i = 0;
  // Skip a UTF-8 byte order mark.
  if (text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0) i = 3;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == delimiter) {
      end_field();
    } else if (c == '\n') {
      end_row();
    } else if (c == '\r') {
      if (i + 1 < text.size() && text[i + 1] == '\n') continue;
      end_row();
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (quoted) throw SchemaError("csv: unterminated quoted field");
  if (field_started || !row.empty()) end_row();

  CsvTable table;
  if (records.empty()) return table;
  table.header = std::move(records.front());
  table.rows.assign(std::make_move_iterator(records.begin() + 1),
                    std::make_move_iterator(records.end()));
  return table;
}

char delimiter_for(const std::filesystem::path& path) {
  return path.extension() == ".tsv" ? '\t' : ',';
}

CsvTable read_csv_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus file " + path.string());
  return read_csv(in, delimiter_for(path));
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields, char delimiter) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << delimiter;
    const std::string& f = fields[i];
    const bool needs_quotes = f.find_first_of(std::string{delimiter, '"', '\n', '\r'}) != std::string::npos;
    if (!needs_quotes) {
      out << f;
      continue;
    }
    out << '"';
    for (char c : f) {
      if (c == '"') out << '"';
      out << c;
    }
    out << '"';
  }
  out << '\n';
}

void write_csv_file(const std::filesystem::path& path, const CsvTable& table) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  const char d = delimiter_for(path);
  write_csv_row(out, table.header, d);
  for (const auto& r : table.rows) write_csv_row(out, r, d);
}

}  // namespace postcheck::dataset
