#ifndef WFVI_UNILAB_TABLES_HPP
#define WFVI_UNILAB_TABLES_HPP

#include <wfvi/unilab/uni_fit.hpp>

#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

namespace wfvi {

/// One (target, divergence) cell of a univariate comparison grid.
struct UniTableCell {
  std::string target;
  UniDivergence divergence;
  UniFit fit;
};

inline std::vector<UniTableCell> uni_table(const std::vector<UniTarget>& targets,
                                           const UniFitOptions& opt = {}) {
  std::vector<UniTableCell> out;
  for (const auto& t : targets)
    for (UniDivergence d :
         {UniDivergence::KLD, UniDivergence::FD, UniDivergence::SD})
      out.push_back({t.label(), d, uni_fit(t, d, opt)});
  return out;
}

/// Long-format CSV: target,divergence,metric,value.
inline void write_uni_table_csv(std::ostream& os,
                                const std::vector<UniTableCell>& cells) {
  os << "target,divergence,metric,value\n";
  os << std::setprecision(10);
  for (const auto& c : cells) {
    const char* d = to_string(c.divergence);
    const auto row = [&](const char* metric, double v) {
      os << '"' << c.target << "\"," << d << ',' << metric << ',' << v << '\n';
    };
    row("mu", c.fit.mu);
    row("sigma_sq", c.fit.sigma_sq);
    row("objective", c.fit.objective);
    row("mean_error", c.fit.mean_error);
    row("mode_error", c.fit.mode_error);
    row("variance_ratio", c.fit.variance_ratio);
    row("accuracy", c.fit.accuracy);
    row("collapsed", c.fit.collapsed ? 1.0 : 0.0);
  }
}

}  // namespace wfvi

#endif
