#include "abdsde/error.hpp"

#include <utility>

namespace abdsde {

namespace {

std::string decorate(const std::string& message, const std::string& assumption) {
  if (assumption.empty()) return message;
  return "assumption " + assumption + " violated: " + message;
}

}  // namespace

Error::Error(ErrorKind kind, const std::string& message, std::string assumption)
    : std::runtime_error(decorate(message, assumption)),
      kind_(kind),
      assumption_(std::move(assumption)) {}

void fail_validation(const std::string& message, std::string assumption) {
  throw Error(ErrorKind::Validation, message, std::move(assumption));
}

void fail_numerical(const std::string& message) {
  throw Error(ErrorKind::Numerical, message);
}

void fail_dimension(const std::string& message) {
  throw Error(ErrorKind::Dimension, message);
}

}  // namespace abdsde
