#pragma once

#include <stdexcept>
#include <string>

namespace ssb {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parameter or input outside its admissible domain. field() names the culprit.
class DomainError : public Error {
 public:
  DomainError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class InsufficientTimes : public Error {
 public:
  using Error::Error;
};

// Current-status likelihood is monotone in a scale direction.
class NoFiniteMle : public Error {
 public:
  using Error::Error;
};

class NonMonotoneProfile : public Error {
 public:
  using Error::Error;
};

class SingularInformation : public Error {
 public:
  using Error::Error;
};

class MissingBaseline : public Error {
 public:
  using Error::Error;
};

class RejectionBudgetExceeded : public Error {
 public:
  using Error::Error;
};

class SizeMismatch : public Error {
 public:
  using Error::Error;
};

class GridMismatch : public Error {
 public:
  using Error::Error;
};

class NotSymmetric : public Error {
 public:
  using Error::Error;
};

}  // namespace ssb
