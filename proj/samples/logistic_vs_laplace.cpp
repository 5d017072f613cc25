// Logistic regression on simulated data: SDb and KLD fits next to the
// Laplace approximation.

#include <wfvi/optim/fit.hpp>
#include <wfvi/optim/laplace.hpp>
#include <wfvi/targets/synthetic.hpp>

#include <cstdio>

int main() {
  using namespace wfvi;
  const SimulatedLogistic data = simulate_logistic(200, 10, 3);
  const LogisticModel model(data.X, data.y);
  const LaplaceApprox laplace = laplace_approximation(model);
  const Eigen::VectorXd sd = laplace.covariance.diagonal().cwiseSqrt();
  for (Divergence div : {Divergence::KLD, Divergence::SDb}) {
    FitConfig cfg;
    cfg.divergence = div;
    cfg.batch_size = 3;
    cfg.seed = 11;
    cfg.max_iter = 60000;
    const FitResult r = fit(model, cfg);
    const double worst =
        ((r.state.mu - laplace.mode).cwiseAbs().cwiseQuotient(sd)).maxCoeff();
    std::printf("%-4s stopped after %lld iterations (%s); max |mu - mode|/sd = %.3f\n",
                to_string(div).c_str(), r.iterations, r.stop_reason.c_str(), worst);
  }
}
