#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ccopf {

/// Bad user input: malformed case documents, out-of-range parameters.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Case document is not well-formed. `position` is the byte offset reported by the parser.
class CaseSyntaxError : public InputError {
 public:
  CaseSyntaxError(const std::string& what, std::size_t position)
      : InputError(what), position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// Case document parsed but violates one or more invariants.
class CaseValidationError : public InputError {
 public:
  explicit CaseValidationError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

/// Numerical failures: singular networks, infeasible or unbounded programs,
/// non-converged outer loops.
class SolveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ccopf
