#ifndef HPO_ERRORS_HPP
#define HPO_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace hpo {

/// Invalid configuration or violated precondition (dimension mismatch,
/// empty dataset, bad domain bounds, out-of-domain point, ...).
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// Non-finite intermediate, singular linear system, sensitivity overflow.
/// Numerical trouble is always reported, never silently returned.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Inner optimization blew past the divergence guard (objective grew
/// beyond 10x its initial value). Carries the offending step index.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, int step) : std::runtime_error(what), step_index(step) {}
  int step_index;
};

}  // namespace hpo

#endif
