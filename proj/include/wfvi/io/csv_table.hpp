#ifndef WFVI_IO_CSV_TABLE_HPP
#define WFVI_IO_CSV_TABLE_HPP

#include <wfvi/diagnostics/reference_samples.hpp>

#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace wfvi {

/// Raw text table: column names plus string cells, row-major.
struct TextTable {
  std::vector<std::string> names;
  std::vector<std::vector<std::string>> rows;

  std::size_t cols() const { return names.size(); }

  /// @throw std::runtime_error if the column is missing
  std::size_t column(const std::string& name) const {
    for (std::size_t j = 0; j < names.size(); ++j)
      if (names[j] == name)
        return j;
    throw std::runtime_error("no column named '" + name + "'");
  }
};

enum class Delimiter { comma, whitespace };

namespace detail {
inline std::vector<std::string_view> split_whitespace(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i])))
      ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i])))
      ++i;
    if (i > start)
      out.push_back(line.substr(start, i - start));
  }
  return out;
}

inline std::string_view strip_quotes(std::string_view f) {
  if (f.size() >= 2 && f.front() == '"' && f.back() == '"')
    f = f.substr(1, f.size() - 2);
  return f;
}

inline std::optional<double> try_parse_double(std::string_view f) {
  if (!f.empty() && f.front() == '+')
    f.remove_prefix(1);
  double v = 0;
  const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  if (ec != std::errc() || ptr != f.data() + f.size() || f.empty())
    return std::nullopt;
  return v;
}
}  // namespace detail

/**
 * Reads a delimited table. Without a header the columns are named
 * V1, V2, ... Blank lines are skipped; ragged rows are an error.
 */
inline TextTable parse_text_table(std::istream& in, const std::string& source,
                                  Delimiter delim = Delimiter::comma,
                                  bool header = true) {
  auto split = [&](std::string_view line) {
    if (!line.empty() && line.back() == '\r')
      line.remove_suffix(1);
    return delim == Delimiter::comma ? detail::split_csv_line(line)
                                     : detail::split_whitespace(line);
  };
  TextTable t;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    const auto fields = split(line);
    if (first) {
      first = false;
      if (header) {
        for (auto f : fields)
          t.names.emplace_back(detail::strip_quotes(f));
        continue;
      }
      for (std::size_t j = 0; j < fields.size(); ++j)
        t.names.push_back("V" + std::to_string(j + 1));
    }
    if (fields.size() != t.names.size())
      throw std::runtime_error(source + ":" + std::to_string(line_no)
                               + ": expected " + std::to_string(t.names.size())
                               + " fields, found "
                               + std::to_string(fields.size()));
    std::vector<std::string> row;
    row.reserve(fields.size());
    for (auto f : fields)
      row.emplace_back(detail::strip_quotes(f));
    t.rows.push_back(std::move(row));
  }
  if (t.names.empty())
    throw std::runtime_error(source + ": empty file");
  return t;
}

/// @throw std::runtime_error naming the path if it cannot be opened
inline TextTable read_text_table(const std::string& path,
                                 Delimiter delim = Delimiter::comma,
                                 bool header = true) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open '" + path + "'");
  return parse_text_table(in, path, delim, header);
}

/// Numeric view of one column; throws naming the column on a bad cell.
inline std::vector<double> numeric_column(const TextTable& t, std::size_t j) {
  std::vector<double> v;
  v.reserve(t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto x = detail::try_parse_double(t.rows[i][j]);
    if (!x)
      throw std::runtime_error("column '" + t.names[j] + "', row "
                               + std::to_string(i + 1) + ": '" + t.rows[i][j]
                               + "' is not a number");
    v.push_back(*x);
  }
  return v;
}

}  // namespace wfvi

#endif
