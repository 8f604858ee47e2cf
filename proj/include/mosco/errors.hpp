#ifndef MOSCO_ERRORS_HPP_
#define MOSCO_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace mosco {

// Incompatible truncation levels (vector/operator dims disagree).
class DimensionMismatch : public std::invalid_argument {
 public:
  DimensionMismatch(const std::string& where, int got, int expected)
      : std::invalid_argument(where + ": dimension mismatch (got " +
                              std::to_string(got) + ", expected " +
                              std::to_string(expected) + ")") {}
};

class InvariantViolation : public std::invalid_argument {
 public:
  explicit InvariantViolation(const std::string& what)
      : std::invalid_argument(what) {}
};

// Operator singular to tolerance; carries the offending eigenvalue.
class SingularOperator : public std::runtime_error {
 public:
  SingularOperator(const std::string& where, double smallest_eigenvalue)
      : std::runtime_error(where + ": operator singular to tolerance, smallest eigenvalue " +
                           std::to_string(smallest_eigenvalue)),
        smallest_eigenvalue_(smallest_eigenvalue) {}
  double smallest_eigenvalue() const { return smallest_eigenvalue_; }

 private:
  double smallest_eigenvalue_;
};

// Point outside the effective domain (e.g. subgradient of an indicator
// requested outside its set).
class DomainViolation : public std::domain_error {
 public:
  explicit DomainViolation(const std::string& what) : std::domain_error(what) {}
};

// Iterative inner loop failed to reach tolerance; carries the final residual.
class ConvergenceFailure : public std::runtime_error {
 public:
  ConvergenceFailure(const std::string& where, double residual, int iterations)
      : std::runtime_error(where + ": no convergence after " +
                           std::to_string(iterations) +
                           " iterations, residual " + std::to_string(residual)),
        residual_(residual),
        iterations_(iterations) {}
  double residual() const { return residual_; }
  int iterations() const { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

// Conjugate maximizer landed on the search boundary; the supremum may be
// unattained inside the search radius. Carries the boundary value.
class BoundaryWarning : public std::runtime_error {
 public:
  BoundaryWarning(double value, double maximizer_norm, double search_radius)
      : std::runtime_error("conjugate maximizer on search boundary (|theta| = " +
                           std::to_string(maximizer_norm) + ", radius " +
                           std::to_string(search_radius) + "); sup may be unattained"),
        value_(value),
        maximizer_norm_(maximizer_norm) {}
  double value() const { return value_; }
  double maximizer_norm() const { return maximizer_norm_; }

 private:
  double value_;
  double maximizer_norm_;
};

// Difference quotients too erratic for extrapolation.
class InstabilityError : public std::runtime_error {
 public:
  explicit InstabilityError(const std::string& what)
      : std::runtime_error(what + " (advice: increase the sample size or smooth the oracle)") {}
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mosco

#endif  // MOSCO_ERRORS_HPP_
