#ifndef WFVI_IO_GLMM_RECIPES_HPP
#define WFVI_IO_GLMM_RECIPES_HPP

#include <wfvi/io/csv_table.hpp>
#include <wfvi/targets/glmm.hpp>

#include <Eigen/Dense>

#include <cctype>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace wfvi {

/// Subjects plus the fixed and random effect names, in column order.
struct GlmmData {
  GlmmFamily family = GlmmFamily::poisson_log;
  std::vector<GlmmSubject> subjects;
  std::vector<std::string> fixed_names;
  std::vector<std::string> random_names;
};

enum class EpilepsyModel { random_intercept, random_slope };

namespace detail {
/// Column index by case-insensitive name.
inline std::size_t column_ci(const TextTable& t, const std::string& name) {
  auto lower = [](std::string s) {
    for (auto& c : s)
      c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
  };
  for (std::size_t j = 0; j < t.names.size(); ++j)
    if (lower(t.names[j]) == name)
      return j;
  throw std::runtime_error("missing column '" + name + "'");
}

/// Row indices grouped by subject id, subjects in order of first appearance.
inline std::vector<std::vector<std::size_t>> group_rows(const TextTable& t,
                                                        std::size_t id_col) {
  std::map<std::string, std::size_t> slot;
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto [it, fresh] = slot.try_emplace(t.rows[i][id_col], groups.size());
    if (fresh)
      groups.emplace_back();
    groups[it->second].push_back(i);
  }
  return groups;
}

/// Assembles subjects from per-row fixed and random covariate rows.
template <typename RowFn>
std::vector<GlmmSubject> assemble_subjects(
    const std::vector<std::vector<std::size_t>>& groups,
    const std::vector<double>& y, int p, int r, RowFn&& fill) {
  std::vector<GlmmSubject> out;
  out.reserve(groups.size());
  for (const auto& g : groups) {
    GlmmSubject s;
    const auto ni = static_cast<Eigen::Index>(g.size());
    s.X.resize(ni, p);
    s.Z.resize(ni, r);
    s.y.resize(ni);
    for (Eigen::Index j = 0; j < ni; ++j) {
      Eigen::VectorXd x(p), z(r);
      fill(g[j], x, z);
      s.X.row(j) = x.transpose();
      s.Z.row(j) = z.transpose();
      s.y(j) = y[g[j]];
    }
    out.push_back(std::move(s));
  }
  return out;
}
}  // namespace detail

/**
 * Epilepsy seizure counts in long format with columns
 * subject, y, trt, base, age, visit (visit = 1..4).
 *
 * Base = log(base/4), Age = log(age) centered over subjects, Visit is coded
 * −0.3, −0.1, 0.1, 0.3 and V4 = 1[visit = 4]. Fixed effects are
 * (1, Base, Trt, Age, Base·Trt, V4) with a random intercept, or
 * (1, Base, Trt, Age, Base·Trt, Visit) with a random intercept and Visit
 * slope.
 */
inline GlmmData epilepsy_recipe(const TextTable& t, EpilepsyModel model) {
  const std::size_t cid = detail::column_ci(t, "subject");
  const auto y = numeric_column(t, detail::column_ci(t, "y"));
  const auto trt = numeric_column(t, detail::column_ci(t, "trt"));
  const auto base = numeric_column(t, detail::column_ci(t, "base"));
  const auto age = numeric_column(t, detail::column_ci(t, "age"));
  const auto visit = numeric_column(t, detail::column_ci(t, "visit"));
  const auto groups = detail::group_rows(t, cid);
  double mean_log_age = 0;
  for (const auto& g : groups)
    mean_log_age += std::log(age[g.front()]);
  mean_log_age /= static_cast<double>(groups.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (visit[i] != 1 && visit[i] != 2 && visit[i] != 3 && visit[i] != 4)
      throw std::runtime_error("epilepsy: visit must be 1..4");
    if (!(base[i] > 0) || !(age[i] > 0))
      throw std::runtime_error("epilepsy: base and age must be positive");
  }
  const bool slope = model == EpilepsyModel::random_slope;
  GlmmData d;
  d.family = GlmmFamily::poisson_log;
  d.fixed_names = {"(Intercept)", "Base", "Trt", "Age", "Base:Trt",
                   slope ? "Visit" : "V4"};
  d.random_names = slope ? std::vector<std::string>{"(Intercept)", "Visit"}
                         : std::vector<std::string>{"(Intercept)"};
  d.subjects = detail::assemble_subjects(
      groups, y, 6, slope ? 2 : 1,
      [&](std::size_t i, Eigen::VectorXd& x, Eigen::VectorXd& z) {
        const double b = std::log(base[i] / 4.0);
        const double a = std::log(age[i]) - mean_log_age;
        const double v = (2.0 * visit[i] - 5.0) / 10.0;
        x << 1.0, b, trt[i], a, b * trt[i], slope ? v : (visit[i] == 4 ? 1.0 : 0.0);
        if (slope)
          z << 1.0, v;
        else
          z << 1.0;
      });
  return d;
}

/**
 * Toenail separation in long format with columns id, y, trt, time (months).
 * Time is standardized to mean 0 and variance 1 over all visits. Fixed
 * effects (1, Trt, t, Trt·t), random intercept, logistic link.
 */
inline GlmmData toenail_recipe(const TextTable& t) {
  const std::size_t cid = detail::column_ci(t, "id");
  const auto y = numeric_column(t, detail::column_ci(t, "y"));
  const auto trt = numeric_column(t, detail::column_ci(t, "trt"));
  const auto time = numeric_column(t, detail::column_ci(t, "time"));
  const Eigen::Map<const Eigen::VectorXd> tv(time.data(),
                                             static_cast<Eigen::Index>(time.size()));
  const double mean = tv.mean();
  const double sd = std::sqrt((tv.array() - mean).square().sum()
                              / static_cast<double>(tv.size() - 1));
  if (!(sd > 0))
    throw std::runtime_error("toenail: time is constant");
  GlmmData d;
  d.family = GlmmFamily::bernoulli_logit;
  d.fixed_names = {"(Intercept)", "Trt", "t", "Trt:t"};
  d.random_names = {"(Intercept)"};
  d.subjects = detail::assemble_subjects(
      detail::group_rows(t, cid), y, 4, 1,
      [&](std::size_t i, Eigen::VectorXd& x, Eigen::VectorXd& z) {
        const double s = (time[i] - mean) / sd;
        x << 1.0, trt[i], s, trt[i] * s;
        z << 1.0;
      });
  return d;
}

/**
 * Polypharmacy in long format with columns id, y, gender, race, age, mhv,
 * inptmhv. Age enters as log(age/10); the outpatient visit count is coded
 * MHV1 = 1[1 ≤ mhv ≤ 5], MHV2 = 1[6 ≤ mhv ≤ 14], MHV3 = 1[mhv ≥ 15]; inptmhv
 * is reduced to 1[inptmhv > 0]. Fixed effects (1, Gender, Race, Age, MHV1,
 * MHV2, MHV3, INPTMHV), random intercept, logistic link.
 */
inline GlmmData polypharmacy_recipe(const TextTable& t) {
  const std::size_t cid = detail::column_ci(t, "id");
  const auto y = numeric_column(t, detail::column_ci(t, "y"));
  const auto gender = numeric_column(t, detail::column_ci(t, "gender"));
  const auto race = numeric_column(t, detail::column_ci(t, "race"));
  const auto age = numeric_column(t, detail::column_ci(t, "age"));
  const auto mhv = numeric_column(t, detail::column_ci(t, "mhv"));
  const auto inpt = numeric_column(t, detail::column_ci(t, "inptmhv"));
  for (double a : age)
    if (!(a > 0))
      throw std::runtime_error("polypharmacy: age must be positive");
  GlmmData d;
  d.family = GlmmFamily::bernoulli_logit;
  d.fixed_names = {"(Intercept)", "Gender", "Race", "Age",
                   "MHV1",        "MHV2",   "MHV3", "INPTMHV"};
  d.random_names = {"(Intercept)"};
  d.subjects = detail::assemble_subjects(
      detail::group_rows(t, cid), y, 8, 1,
      [&](std::size_t i, Eigen::VectorXd& x, Eigen::VectorXd& z) {
        const double m = mhv[i];
        x << 1.0, gender[i], race[i], std::log(age[i] / 10.0),
            (m >= 1 && m <= 5) ? 1.0 : 0.0, (m >= 6 && m <= 14) ? 1.0 : 0.0,
            m >= 15 ? 1.0 : 0.0, inpt[i] > 0 ? 1.0 : 0.0;
        z << 1.0;
      });
  return d;
}

}  // namespace wfvi

#endif
