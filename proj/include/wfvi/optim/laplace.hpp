#ifndef WFVI_OPTIM_LAPLACE_HPP
#define WFVI_OPTIM_LAPLACE_HPP

#include <wfvi/core/errors.hpp>
#include <wfvi/targets/target_model.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <optional>

namespace wfvi {

struct LaplaceApprox {
  Eigen::VectorXd mode;
  /// -∇² log h at the mode.
  Eigen::MatrixXd precision;
  Eigen::MatrixXd covariance;
  int iterations = 0;
};

/**
 * Newton's method with backtracking on log h, started at theta0 (zero by
 * default), followed by the Gaussian approximation at the mode.
 *
 * @throw ConvergenceError if the gradient norm is not below tol after
 *        max_iter steps or the negative Hessian is not positive definite
 */
template <TargetModel M>
LaplaceApprox laplace_approximation(const M& model,
                                    std::optional<Eigen::VectorXd> theta0 = {},
                                    double tol = 1e-9, int max_iter = 200) {
  const int d = model.dim();
  Eigen::VectorXd x = theta0 ? *theta0 : Eigen::VectorXd::Zero(d);
  LaplaceApprox out;
  double f = model.log_h(x);
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd g = model.grad_log_h(x);
    if (g.lpNorm<Eigen::Infinity>() < tol) {
      out.iterations = it;
      break;
    }
    const Eigen::MatrixXd negH = -Eigen::MatrixXd(model.hess_log_h(x));
    Eigen::LLT<Eigen::MatrixXd> llt(negH);
    Eigen::VectorXd step = llt.info() == Eigen::Success ? llt.solve(g) : g;
    // Near the mode the predicted gain falls below the rounding of log h and
    // the sufficient-increase test is meaningless; take the Newton step.
    if (g.dot(step) <= 1e-10 * (1.0 + std::abs(f))) {
      x += step;
      f = model.log_h(x);
    } else {
      double a = 1.0;
      for (int k = 0; k < 60; ++k, a *= 0.5) {
        const Eigen::VectorXd xn = x + a * step;
        const double fn = model.log_h(xn);
        if (std::isfinite(fn) && fn >= f + 1e-4 * a * g.dot(step)) {
          x = xn;
          f = fn;
          break;
        }
      }
    }
    out.iterations = it + 1;
    if (it + 1 == max_iter)
      throw ConvergenceError("laplace_approximation: Newton did not converge");
  }
  out.mode = x;
  out.precision = -Eigen::MatrixXd(model.hess_log_h(x));
  Eigen::LLT<Eigen::MatrixXd> llt(out.precision);
  if (llt.info() != Eigen::Success)
    throw ConvergenceError("laplace_approximation: Hessian not negative definite");
  out.covariance = llt.solve(Eigen::MatrixXd::Identity(d, d));
  return out;
}

}  // namespace wfvi

#endif
