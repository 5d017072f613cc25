#ifndef WFVI_CORE_ERRORS_HPP
#define WFVI_CORE_ERRORS_HPP

#include <cmath>
#include <stdexcept>
#include <string>

namespace wfvi {

/**
 * Raised when a model or objective evaluation produces a non-finite value.
 * The message names the offending term.
 */
class NonFiniteError : public std::domain_error {
 public:
  explicit NonFiniteError(const std::string& term)
      : std::domain_error("non-finite value in " + term), term_(term) {}
  const std::string& term() const { return term_; }

 private:
  std::string term_;
};

/// Raised when a triangular factor has a (numerically) zero diagonal.
class SingularFactorError : public std::domain_error {
 public:
  explicit SingularFactorError(int index)
      : std::domain_error("singular factor: |T_ii| below 1e-300 at i = "
                          + std::to_string(index)),
        index_(index) {}
  int index() const { return index_; }

 private:
  int index_;
};

/// Raised when an iterative solver runs out of iterations.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline double check_finite(double value, const char* term) {
  if (!std::isfinite(value))
    throw NonFiniteError(term);
  return value;
}

template <typename Derived>
const Derived& check_finite(const Derived& value, const char* term) {
  if (!value.allFinite())
    throw NonFiniteError(term);
  return value;
}

}  // namespace wfvi

#endif
