#pragma once

#include <stdexcept>
#include <string>

namespace abdsde {

enum class ErrorKind {
  Validation,  // invalid input or a violated structural assumption
  Numerical,   // singular/ill-conditioned matrices, regression failure
  Dimension,   // mismatched shapes between inputs
};

// Single exception type for the library. `assumption` names the violated
// hypothesis when one applies, e.g. "(A)", "(H1.1)(ii)", "(H2.2)".
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::string assumption = {});

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& assumption() const noexcept { return assumption_; }

 private:
  ErrorKind kind_;
  std::string assumption_;
};

[[noreturn]] void fail_validation(const std::string& message, std::string assumption = {});
[[noreturn]] void fail_numerical(const std::string& message);
[[noreturn]] void fail_dimension(const std::string& message);

}  // namespace abdsde
