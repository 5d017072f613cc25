#ifndef WFVI_IO_LIBSVM_HPP
#define WFVI_IO_LIBSVM_HPP

#include <wfvi/io/csv_table.hpp>

#include <Eigen/Sparse>

#include <algorithm>
#include <fstream>
#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace wfvi {

struct LibsvmData {
  Eigen::SparseMatrix<double, Eigen::RowMajor> X;
  Eigen::VectorXd y;
};

/**
 * Parses `label idx:val ...` lines with 1-based indices. Labels +1/1 map to
 * 1 and −1/0 to 0. The feature count is the largest index seen; with
 * `intercept` a leading column of ones is added. A line with no features
 * is a zero row.
 *
 * @throw std::runtime_error on a repeated index within a row, a bad label
 *        or a malformed pair
 */
inline LibsvmData parse_libsvm(std::istream& in, const std::string& source,
                               bool intercept = false) {
  std::vector<Eigen::Triplet<double>> entries;
  std::vector<double> labels;
  std::string line;
  std::size_t line_no = 0;
  int max_index = 0;
  const int offset = intercept ? 1 : 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto comment = line.find('#');
    const auto fields =
        detail::split_whitespace(std::string_view(line).substr(0, comment));
    if (fields.empty())
      continue;
    const std::string where = source + ":" + std::to_string(line_no);
    const auto label = detail::try_parse_double(fields[0]);
    if (!label || (*label != 1.0 && *label != -1.0 && *label != 0.0))
      throw std::runtime_error(where + ": label must be +1, -1 or 0");
    const int row = static_cast<int>(labels.size());
    labels.push_back(*label > 0 ? 1.0 : 0.0);
    if (intercept)
      entries.emplace_back(row, 0, 1.0);
    std::vector<int> seen;
    for (std::size_t k = 1; k < fields.size(); ++k) {
      const auto f = fields[k];
      const auto colon = f.find(':');
      int idx = 0;
      const auto [p, ec] = std::from_chars(f.data(), f.data() + colon, idx);
      const auto val = colon == std::string_view::npos
                           ? std::nullopt
                           : detail::try_parse_double(f.substr(colon + 1));
      if (colon == std::string_view::npos || ec != std::errc()
          || p != f.data() + colon || idx < 1 || !val)
        throw std::runtime_error(where + ": malformed feature '"
                                 + std::string(f) + "'");
      if (std::find(seen.begin(), seen.end(), idx) != seen.end())
        throw std::runtime_error(where + ": duplicate index "
                                 + std::to_string(idx));
      seen.push_back(idx);
      max_index = std::max(max_index, idx);
      entries.emplace_back(row, idx - 1 + offset, *val);
    }
  }
  LibsvmData out;
  out.y = Eigen::Map<const Eigen::VectorXd>(labels.data(),
                                            static_cast<Eigen::Index>(labels.size()));
  out.X.resize(static_cast<Eigen::Index>(labels.size()), max_index + offset);
  out.X.setFromTriplets(entries.begin(), entries.end());
  return out;
}

/// @throw std::runtime_error naming the path if it cannot be opened
inline LibsvmData load_libsvm(const std::string& path, bool intercept = false) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open '" + path + "'");
  return parse_libsvm(in, path, intercept);
}

}  // namespace wfvi

#endif
