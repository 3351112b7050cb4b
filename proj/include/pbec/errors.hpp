#ifndef PBEC_ERRORS_HPP
#define PBEC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace pbec {

/// Invalid parameter or input; message names the violated field/invariant.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Iterative solver failed to reach its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

/// Step-size underflow in an ODE integrator.
class StiffnessError : public ConvergenceError {
 public:
  explicit StiffnessError(const std::string& what) : ConvergenceError(what) {}
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace pbec

#endif
