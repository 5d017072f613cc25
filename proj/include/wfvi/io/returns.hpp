#ifndef WFVI_IO_RETURNS_HPP
#define WFVI_IO_RETURNS_HPP

#include <wfvi/io/csv_table.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace wfvi {

/**
 * Mean-corrected log-returns in percent:
 *   y_t = 100 (log(r_t / r_{t−1}) − mean of the log-ratios), t = 1..n−1.
 *
 * @throw std::invalid_argument on fewer than two rates or a nonpositive rate
 */
inline Eigen::VectorXd log_returns(const std::vector<double>& r) {
  if (r.size() < 2)
    throw std::invalid_argument("log_returns: need at least two rates");
  for (std::size_t i = 0; i < r.size(); ++i)
    if (!(r[i] > 0) || !std::isfinite(r[i]))
      throw std::invalid_argument("log_returns: rate " + std::to_string(i + 1)
                                  + " is not positive");
  Eigen::VectorXd y(static_cast<Eigen::Index>(r.size() - 1));
  for (std::size_t t = 1; t < r.size(); ++t)
    y(t - 1) = std::log(r[t] / r[t - 1]);
  return 100.0 * (y.array() - y.mean()).matrix();
}

/**
 * Reads a rate series: one value per line, or the last column of a CSV. A
 * non-numeric first line is taken as a header.
 */
inline Eigen::VectorXd load_returns(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open '" + path + "'");
  std::vector<double> r;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = detail::split_csv_line(line);
    if (fields.empty() || (fields.size() == 1 && fields[0].empty()))
      continue;
    const auto v = detail::try_parse_double(detail::strip_quotes(fields.back()));
    if (!v) {
      if (r.empty() && line_no == 1)
        continue;
      throw std::runtime_error(path + ":" + std::to_string(line_no)
                               + ": not a number");
    }
    r.push_back(*v);
  }
  try {
    return log_returns(r);
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

}  // namespace wfvi

#endif
