#ifndef WFVI_UNILAB_UNI_TARGET_HPP
#define WFVI_UNILAB_UNI_TARGET_HPP

#include <wfvi/core/numerics.hpp>

#include <boost/math/distributions/skew_normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>

namespace wfvi {

/**
 * Univariate non-Gaussian target with a normalized density, its score and
 * the score derivative.
 *
 * - student_t(ν): standard Student's t, ν > 2.
 * - log_inv_gamma(a₁, b₁): density of θ where exp(−θ) ~ Gamma(a₁, rate b₁).
 * - skew_normal(m, t, λ): 2 φ(θ | m, t²) Φ(λ(θ − m)).
 */
class UniTarget {
 public:
  enum class Kind { student_t, log_inv_gamma, skew_normal };

  static UniTarget student_t(double nu) {
    if (!(nu > 2.0))
      throw std::invalid_argument("student_t: nu must exceed 2");
    UniTarget t(Kind::student_t);
    t.p1_ = nu;
    t.log_norm_ = std::lgamma(0.5 * (nu + 1)) - std::lgamma(0.5 * nu)
                  - 0.5 * std::log(std::numbers::pi * nu);
    return t;
  }

  static UniTarget log_inv_gamma(double a1, double b1) {
    if (!(a1 > 0.5) || !(b1 > 0))
      throw std::invalid_argument("log_inv_gamma: need a1 > 1/2 and b1 > 0");
    UniTarget t(Kind::log_inv_gamma);
    t.p1_ = a1;
    t.p2_ = b1;
    t.log_norm_ = a1 * std::log(b1) - std::lgamma(a1);
    return t;
  }

  static UniTarget skew_normal(double m, double scale, double lambda) {
    if (!(scale > 0))
      throw std::invalid_argument("skew_normal: scale must be positive");
    UniTarget t(Kind::skew_normal);
    t.p1_ = m;
    t.p2_ = scale;
    t.p3_ = lambda;
    t.log_norm_ = std::log(2.0) - std::log(scale);
    return t;
  }

  Kind kind() const { return kind_; }

  double log_p(double theta) const {
    switch (kind_) {
      case Kind::student_t:
        return log_norm_
               - 0.5 * (p1_ + 1) * std::log1p(theta * theta / p1_);
      case Kind::log_inv_gamma:
        return log_norm_ - p1_ * theta - p2_ * std::exp(-theta);
      case Kind::skew_normal: {
        const double z = (theta - p1_) / p2_;
        return log_norm_ + log_normal_pdf(z)
               + log_normal_cdf(p3_ * (theta - p1_));
      }
    }
    return 0;
  }

  /// d/dθ log p(θ).
  double score(double theta) const {
    switch (kind_) {
      case Kind::student_t:
        return -(p1_ + 1) * theta / (p1_ + theta * theta);
      case Kind::log_inv_gamma:
        return -p1_ + p2_ * std::exp(-theta);
      case Kind::skew_normal: {
        const double r = theta - p1_;
        return -r / (p2_ * p2_) + p3_ * inverse_mills(p3_ * r);
      }
    }
    return 0;
  }

  /// d²/dθ² log p(θ).
  double score_derivative(double theta) const {
    switch (kind_) {
      case Kind::student_t: {
        const double q = p1_ + theta * theta;
        return -(p1_ + 1) * (p1_ - theta * theta) / (q * q);
      }
      case Kind::log_inv_gamma:
        return -p2_ * std::exp(-theta);
      case Kind::skew_normal:
        return -1.0 / (p2_ * p2_)
               + p3_ * p3_ * inverse_mills_derivative(p3_ * (theta - p1_));
    }
    return 0;
  }

  double cdf(double theta) const {
    switch (kind_) {
      case Kind::student_t:
        return boost::math::cdf(boost::math::students_t(p1_), theta);
      case Kind::log_inv_gamma:
        return boost::math::gamma_q(p1_, p2_ * std::exp(-theta));
      case Kind::skew_normal:
        return boost::math::cdf(
            boost::math::skew_normal(p1_, p2_, p3_ * p2_), theta);
    }
    return 0;
  }

  double mean() const {
    switch (kind_) {
      case Kind::student_t:
        return 0.0;
      case Kind::log_inv_gamma:
        return std::log(p2_) - boost::math::digamma(p1_);
      case Kind::skew_normal:
        return p1_ + p2_ * skew_delta() * std::sqrt(2.0 / std::numbers::pi);
    }
    return 0;
  }

  double variance() const {
    switch (kind_) {
      case Kind::student_t:
        return p1_ / (p1_ - 2.0);
      case Kind::log_inv_gamma:
        return boost::math::trigamma(p1_);
      case Kind::skew_normal: {
        const double d = skew_delta();
        return p2_ * p2_ * (1.0 - 2.0 * d * d / std::numbers::pi);
      }
    }
    return 0;
  }

  double mode() const {
    switch (kind_) {
      case Kind::student_t:
        return 0.0;
      case Kind::log_inv_gamma:
        return std::log(p2_ / p1_);
      case Kind::skew_normal: {
        if (p3_ == 0.0)
          return p1_;
        // The score is decreasing; at θ = m it equals λ sqrt(2/π), and it is
        // negative once θ − m exceeds t² λ sqrt(2/π) in the direction of λ.
        const double reach = p2_ * p2_ * p3_ * std::sqrt(2.0 / std::numbers::pi);
        double lo = std::min(p1_, p1_ + reach);
        double hi = std::max(p1_, p1_ + reach);
        std::uintmax_t iters = 200;
        auto tol = boost::math::tools::eps_tolerance<double>(52);
        auto r = boost::math::tools::toms748_solve(
            [this](double x) { return score(x); }, lo, hi, tol, iters);
        return 0.5 * (r.first + r.second);
      }
    }
    return 0;
  }

  double sd() const { return std::sqrt(variance()); }

  std::string label() const {
    std::ostringstream os;
    switch (kind_) {
      case Kind::student_t:
        os << "student_t(nu=" << p1_ << ")";
        break;
      case Kind::log_inv_gamma:
        os << "log_inv_gamma(a1=" << p1_ << ";b1=" << p2_ << ")";
        break;
      case Kind::skew_normal:
        os << "skew_normal(m=" << p1_ << ";t=" << p2_ << ";lambda=" << p3_
           << ")";
        break;
    }
    return os.str();
  }

  double nu() const { return p1_; }
  double a1() const { return p1_; }
  double b1() const { return p2_; }
  double location() const { return p1_; }
  double scale() const { return p2_; }
  double skewness() const { return p3_; }

 private:
  explicit UniTarget(Kind k) : kind_(k) {}

  double skew_delta() const {
    const double a = p3_ * p2_;
    return a / std::sqrt(1.0 + a * a);
  }

  Kind kind_;
  double p1_ = 0, p2_ = 0, p3_ = 0;
  double log_norm_ = 0;
};

}  // namespace wfvi

#endif
