#ifndef WFVI_DIAGNOSTICS_REFERENCE_SAMPLES_HPP
#define WFVI_DIAGNOSTICS_REFERENCE_SAMPLES_HPP

#include <Eigen/Dense>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace wfvi {

/// Posterior draws (rows) used as the gold standard, with their origin.
struct ReferenceSamples {
  Eigen::MatrixXd draws;
  std::vector<std::string> names;
  std::string provenance;

  Eigen::Index size() const { return draws.rows(); }
  Eigen::Index dim() const { return draws.cols(); }
};

namespace detail {
inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r')
    line.remove_suffix(1);
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    std::string_view f = line.substr(start, comma - start);
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t'))
      f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t'))
      f.remove_suffix(1);
    out.push_back(f);
    if (comma == std::string_view::npos)
      break;
    start = comma + 1;
  }
  return out;
}

inline double parse_double(std::string_view f, const std::string& where) {
  if (!f.empty() && f.front() == '+')
    f.remove_prefix(1);
  double v = 0;
  const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  if (ec != std::errc() || ptr != f.data() + f.size())
    throw std::runtime_error(where + ": cannot parse number '"
                             + std::string(f) + "'");
  return v;
}
}  // namespace detail

/**
 * Parses CSV text with a header row of variable names and one draw per line.
 *
 * @throw std::runtime_error on ragged rows, unparsable or non-finite values
 */
inline ReferenceSamples parse_reference_samples(std::istream& in,
                                                const std::string& provenance) {
  ReferenceSamples r;
  r.provenance = provenance;
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error(provenance + ": empty file");
  for (auto f : detail::split_csv_line(line))
    r.names.emplace_back(f);
  const std::size_t d = r.names.size();
  std::vector<double> values;
  std::size_t rows = 0, line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r")
      continue;
    const auto fields = detail::split_csv_line(line);
    const std::string where = provenance + ":" + std::to_string(line_no);
    if (fields.size() != d)
      throw std::runtime_error(where + ": expected " + std::to_string(d)
                               + " fields, found "
                               + std::to_string(fields.size()));
    for (auto f : fields) {
      const double v = detail::parse_double(f, where);
      if (!std::isfinite(v))
        throw std::runtime_error(where + ": non-finite value");
      values.push_back(v);
    }
    ++rows;
  }
  r.draws = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic,
                                           Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), static_cast<Eigen::Index>(rows),
      static_cast<Eigen::Index>(d));
  return r;
}

/// @throw std::runtime_error naming the path if it cannot be opened
inline ReferenceSamples read_reference_samples(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open '" + path + "'");
  return parse_reference_samples(in, path);
}

}  // namespace wfvi

#endif
