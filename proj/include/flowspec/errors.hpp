#pragma once

#include <stdexcept>
#include <string>

namespace flowspec {

// Fixed-point iteration ran out of iterations; carries the last residual.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

// Evaluation point is outside the operation's admissible region
// (e.g. a real z inside the bulk, or a window that contains no spectrum).
class DomainError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Support scan failed to bracket a spectral edge.
class EdgeDetectionError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Sign-change counting saw more structure than the time grid can resolve.
class ResolutionError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Linear system singular (possible only exactly at a bulk edge) or a root
// too degenerate to normalize.
class SingularityError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace flowspec
