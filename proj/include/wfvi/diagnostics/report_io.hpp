#ifndef WFVI_DIAGNOSTICS_REPORT_IO_HPP
#define WFVI_DIAGNOSTICS_REPORT_IO_HPP

#include <wfvi/diagnostics/compare.hpp>
#include <wfvi/diagnostics/marginal.hpp>
#include <wfvi/io/fit_json.hpp>

#include <json.hpp>

#include <string>

namespace wfvi {

inline Json comparison_report_to_json(const ComparisonReport& r) {
  auto with_nulls = [](const Eigen::VectorXd& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
      a.push_back(std::isfinite(v(i)) ? Json(v(i)) : Json(nullptr));
    return a;
  };
  return Json{
      {"reference", r.provenance},
      {"names", r.names},
      {"mean_error", with_nulls(r.mean_error)},
      {"mode_error", with_nulls(r.mode_error)},
      {"sd_ratio", with_nulls(r.sd_ratio)},
      {"degenerate", r.degenerate},
      {"reference_mean", to_json_array(r.reference.mean)},
      {"reference_mode", to_json_array(r.reference.mode)},
      {"reference_sd", to_json_array(r.reference.sd)},
      {"mstar", r.mstar},
      {"mstar_mean", r.mstar_mean},
      {"mstar_sd", r.mstar_sd},
      {"bandwidth", r.bandwidth},
      {"bandwidth_rule", "median pooled pairwise distance, first replicate"},
      {"mode_rule", "Gaussian KDE, Silverman 0.9 min(sd, IQR/1.34) n^-1/5, "
                    "512-point grid over mean +/- 4 sd"},
      {"m", r.m},
      {"replicates", r.mstar.size()},
      {"seed", r.seed}};
}

/// Per-coordinate table: variable, the three ratios, and the degenerate flag.
inline std::string comparison_report_csv(const ComparisonReport& r) {
  std::string s = "variable,mean_error,mode_error,sd_ratio,degenerate\n";
  auto num = [](double v) { return std::isfinite(v) ? Json(v).dump() : "NA"; };
  for (std::size_t j = 0; j < r.degenerate.size(); ++j) {
    const auto i = static_cast<Eigen::Index>(j);
    s += (j < r.names.size() ? r.names[j] : "theta" + std::to_string(j)) + ","
         + num(r.mean_error(i)) + "," + num(r.mode_error(i)) + ","
         + num(r.sd_ratio(i)) + "," + (r.degenerate[j] ? "1" : "0") + "\n";
  }
  return s;
}

inline std::string mstar_csv(const ComparisonReport& r) {
  std::string s = "replicate,mstar\n";
  for (std::size_t k = 0; k < r.mstar.size(); ++k)
    s += std::to_string(k) + "," + Json(r.mstar[k]).dump() + "\n";
  return s;
}

}  // namespace wfvi

#endif
