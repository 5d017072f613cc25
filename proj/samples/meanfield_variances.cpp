// Mean-field variances under KL, Fisher and score-based divergences for a
// correlated 3 x 3 precision. The SD solution can set some variances to 0.

#include <wfvi/analytics/meanfield.hpp>

#include <cstdio>

int main() {
  using namespace wfvi;
  Eigen::Matrix3d lambda;
  lambda << 1.0, 0.7, 0.2,
            0.7, 1.0, 0.6,
            0.2, 0.6, 1.0;
  const auto kl = meanfield_kl(lambda);
  const auto fd = meanfield_weighted(lambda, Eigen::Vector3d::Ones());
  const auto sd = meanfield_sd_nqp(lambda);
  std::printf("coord      KL       FD       SD\n");
  for (int i = 0; i < 3; ++i)
    std::printf("%5d %8.4f %8.4f %8.4f%s\n", i, kl.sigma_diag(i),
                fd.sigma_diag(i), sd.sigma_diag(i),
                sd.kkt_cases[i] == KktCase::active ? "  (collapsed)" : "");
}
