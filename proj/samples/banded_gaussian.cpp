// Fits a 20-dimensional banded Gaussian with each divergence and prints how
// close the fitted mean and precision come to the truth.

#include <wfvi/optim/fit.hpp>
#include <wfvi/targets/synthetic.hpp>

#include <cstdio>

int main() {
  using namespace wfvi;
  const GaussianTarget target = banded_gaussian_target(20, 1, 42);
  for (Divergence div : {Divergence::KLD, Divergence::SDr, Divergence::FDb,
                         Divergence::SDb}) {
    FitConfig cfg;
    cfg.divergence = div;
    cfg.seed = 7;
    cfg.max_iter = 30000;
    const FitResult r = fit(target, cfg);
    const Eigen::MatrixXd omega = r.state.factor.precision();
    std::printf("%-4s %6lld iters  max|mu-nu| %.4f  rel. precision error %.4f\n",
                to_string(div).c_str(), r.iterations,
                (r.state.mu - target.nu()).cwiseAbs().maxCoeff(),
                (omega - target.lambda()).norm() / target.lambda().norm());
  }
}
