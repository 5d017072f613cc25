#ifndef WFVI_IO_DESIGN_HPP
#define WFVI_IO_DESIGN_HPP

#include <wfvi/io/csv_table.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace wfvi {

struct DesignOptions {
  Delimiter delimiter = Delimiter::comma;
  bool header = true;
  /// Response column name (V<k> for headerless files).
  std::string response;
  /// Columns encoded as categorical. Non-numeric columns always are.
  std::vector<std::string> categorical;
  bool intercept = true;
  /// If set, y = 1 where the response equals this label and 0 elsewhere;
  /// otherwise the response must already be 0/1.
  std::optional<std::string> positive_label;
};

struct ColumnStandardization {
  std::string name;
  double mean = 0;
  double sd = 1;
};

struct Design {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::vector<std::string> names;
  std::vector<ColumnStandardization> standardization;
};

/**
 * Builds a logistic-regression design from a table.
 *
 * Numeric columns are standardized to mean 0 and sd 1 (n − 1 denominator).
 * Categorical columns get one indicator per level except the first level in
 * sorted order, which is the reference. Column order: intercept (named
 * "(Intercept)"), then predictors in file order, each categorical expanded
 * in place as "<name>=<level>".
 *
 * @throw std::runtime_error on a constant numeric column, a single-level
 *        categorical or a response that is not 0/1
 */
inline Design build_design(const TextTable& t, const DesignOptions& opt) {
  const std::size_t n = t.rows.size();
  if (n < 2)
    throw std::runtime_error("design: need at least two rows");
  const std::size_t resp = t.column(opt.response);
  for (const auto& c : opt.categorical)
    t.column(c);

  Design out;
  out.y.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const std::string& v = t.rows[i][resp];
    if (opt.positive_label) {
      out.y(i) = v == *opt.positive_label ? 1.0 : 0.0;
    } else {
      const auto x = detail::try_parse_double(v);
      if (!x || (*x != 0.0 && *x != 1.0))
        throw std::runtime_error("design: response '" + v + "' on row "
                                 + std::to_string(i + 1)
                                 + " is not 0/1 (set a positive label)");
      out.y(i) = *x;
    }
  }

  std::vector<Eigen::VectorXd> cols;
  if (opt.intercept) {
    cols.push_back(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n)));
    out.names.push_back("(Intercept)");
  }
  for (std::size_t j = 0; j < t.cols(); ++j) {
    if (j == resp)
      continue;
    const std::string& name = t.names[j];
    bool categorical = std::find(opt.categorical.begin(), opt.categorical.end(),
                                 name) != opt.categorical.end();
    std::vector<double> values;
    if (!categorical) {
      values.reserve(n);
      for (const auto& row : t.rows) {
        const auto x = detail::try_parse_double(row[j]);
        if (!x) {
          categorical = true;
          break;
        }
        values.push_back(*x);
      }
    }
    if (categorical) {
      std::set<std::string> levels;
      for (const auto& row : t.rows)
        levels.insert(row[j]);
      if (levels.size() < 2)
        throw std::runtime_error("design: categorical column '" + name
                                 + "' has a single level");
      for (auto it = std::next(levels.begin()); it != levels.end(); ++it) {
        Eigen::VectorXd c(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i)
          c(i) = t.rows[i][j] == *it ? 1.0 : 0.0;
        cols.push_back(std::move(c));
        out.names.push_back(name + "=" + *it);
      }
      continue;
    }
    const Eigen::Map<const Eigen::VectorXd> v(values.data(),
                                              static_cast<Eigen::Index>(n));
    const double mean = v.mean();
    const double sd =
        std::sqrt((v.array() - mean).square().sum() / static_cast<double>(n - 1));
    if (!(sd > 0))
      throw std::runtime_error("design: column '" + name
                               + "' is constant (zero sd)");
    cols.push_back(((v.array() - mean) / sd).matrix());
    out.names.push_back(name);
    out.standardization.push_back({name, mean, sd});
  }
  out.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k)
    out.X.col(static_cast<Eigen::Index>(k)) = cols[k];
  return out;
}

/// @throw std::runtime_error naming the path if it cannot be opened
inline Design load_csv_design(const std::string& path, const DesignOptions& opt) {
  return build_design(read_text_table(path, opt.delimiter, opt.header), opt);
}

}  // namespace wfvi

#endif
