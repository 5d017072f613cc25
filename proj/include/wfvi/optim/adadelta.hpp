#ifndef WFVI_OPTIM_ADADELTA_HPP
#define WFVI_OPTIM_ADADELTA_HPP

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace wfvi {

struct AdadeltaParams {
  double decay = 0.95;
  double eps = 1e-6;
};

/**
 * Elementwise Adadelta accumulators E[g²] and E[Δ²].
 *
 * update() takes a raw gradient in descent orientation and returns the step
 * to add to the parameters, so sign(step) = -sign(grad).
 */
class Adadelta {
 public:
  Adadelta() = default;
  explicit Adadelta(Eigen::Index n, AdadeltaParams params = {})
      : params_(params),
        eg2_(Eigen::VectorXd::Zero(n)),
        edx2_(Eigen::VectorXd::Zero(n)) {
    if (!(params.decay > 0 && params.decay < 1) || !(params.eps > 0))
      throw std::invalid_argument("Adadelta: decay must be in (0,1), eps > 0");
  }

  Eigen::Index size() const { return eg2_.size(); }
  const AdadeltaParams& params() const { return params_; }
  const Eigen::VectorXd& mean_sq_grad() const { return eg2_; }
  const Eigen::VectorXd& mean_sq_step() const { return edx2_; }

  /// Updates the accumulators for entries [offset, offset + grad.size()).
  Eigen::VectorXd update(const Eigen::VectorXd& grad, Eigen::Index offset = 0) {
    const Eigen::Index n = grad.size();
    if (offset < 0 || offset + n > size())
      throw std::invalid_argument("Adadelta: segment out of range");
    const double r = params_.decay, e = params_.eps;
    auto eg2 = eg2_.segment(offset, n);
    auto edx2 = edx2_.segment(offset, n);
    eg2 = r * eg2 + (1 - r) * grad.cwiseAbs2();
    Eigen::VectorXd step = -((edx2.array() + e).sqrt()
                             / (eg2.array() + e).sqrt() * grad.array())
                                .matrix();
    edx2 = r * edx2 + (1 - r) * step.cwiseAbs2();
    return step;
  }

 private:
  AdadeltaParams params_;
  Eigen::VectorXd eg2_, edx2_;
};

}  // namespace wfvi

#endif
