#pragma once

#include <stdexcept>
#include <string>

namespace mcce {

// Covariance that stays indefinite after the jitter policy was applied.
class NotPositiveDefinite : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Raised when a loss or gradient evaluation produces NaN/Inf.
class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Binary dataset / checkpoint decoding failures.
class FormatError : public std::runtime_error {
 public:
  enum class Kind { bad_magic, version_mismatch, truncated, checksum, shape_mismatch, io };

  FormatError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace mcce
