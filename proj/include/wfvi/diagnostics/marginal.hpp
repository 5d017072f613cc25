#ifndef WFVI_DIAGNOSTICS_MARGINAL_HPP
#define WFVI_DIAGNOSTICS_MARGINAL_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace wfvi {

inline constexpr int kKdeGridPoints = 512;
inline constexpr double kKdeGridHalfWidthSd = 4.0;

struct MarginalStats {
  Eigen::VectorXd mean, mode, sd;
};

/// Silverman's rule 0.9 min(s, IQR/1.34) n^{-1/5}; falls back to s when IQR = 0.
inline double silverman_bandwidth(std::vector<double> x, double sd) {
  const auto n = x.size();
  auto quantile = [&](double p) {
    const double pos = p * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    std::nth_element(x.begin(), x.begin() + lo, x.end());
    const double a = x[lo];
    if (lo + 1 >= n)
      return a;
    const double b = *std::min_element(x.begin() + lo + 1, x.end());
    return a + (pos - lo) * (b - a);
  };
  const double iqr = quantile(0.75) - quantile(0.25);
  const double spread = iqr > 0 ? std::min(sd, iqr / 1.34) : sd;
  return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

/// Argmax of a Gaussian-kernel density estimate on 512 points over mean ± 4 sd.
inline double kde_mode(const Eigen::VectorXd& x, double mean, double sd) {
  if (!(sd > 0))
    return mean;
  const double h =
      silverman_bandwidth(std::vector<double>(x.data(), x.data() + x.size()), sd);
  const double lo = mean - kKdeGridHalfWidthSd * sd;
  const double step = 2.0 * kKdeGridHalfWidthSd * sd / (kKdeGridPoints - 1);
  const double c = -0.5 / (h * h);
  double best = -1, arg = mean;
  for (int k = 0; k < kKdeGridPoints; ++k) {
    const double g = lo + k * step;
    const double dens = ((x.array() - g).square() * c).exp().sum();
    if (dens > best) {
      best = dens;
      arg = g;
    }
  }
  return arg;
}

/// Sample mean, KDE mode and sample sd (n - 1 divisor) of each column.
inline MarginalStats marginal_stats(const Eigen::MatrixXd& samples) {
  const Eigen::Index n = samples.rows(), d = samples.cols();
  if (n < 2)
    throw std::invalid_argument("marginal_stats: need at least two draws");
  MarginalStats s;
  s.mean = samples.colwise().mean().transpose();
  s.sd.resize(d);
  s.mode.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double var =
        (samples.col(j).array() - s.mean(j)).square().sum() / (n - 1.0);
    s.sd(j) = std::sqrt(var);
    s.mode(j) = kde_mode(samples.col(j), s.mean(j), s.sd(j));
  }
  return s;
}

}  // namespace wfvi

#endif
