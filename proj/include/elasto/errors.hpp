#pragma once

#include <stdexcept>
#include <string>

namespace elasto {

// Invalid spec, config key or parameter combination.
class ValidationError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Geometry or window configuration that cannot be applied to the given data.
class ConfigurationError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Argument outside the domain of the function (point outside the phantom,
// noise requested on a silent frame, ...).
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

// Zero-variance input to a correlation or statistic.
class DegenerateInputError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

class EstimationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Unreadable or unwritable file, or input data that does not fit together
// (e.g. pre and post frames of different shape).
class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Malformed RFF file. `offset` is the byte position where parsing failed.
class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"), detail_(what), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }
  const std::string& detail() const noexcept { return detail_; }

private:
  std::string detail_;
  std::size_t offset_;
};

}  // namespace elasto
