#pragma once

#include <stdexcept>
#include <string>

namespace bedsense {

/// Precondition on a numeric argument was violated.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A corpus, feature table or model file could not be parsed or validated.
/// The message names the offending file and, where relevant, the line.
class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bedsense
