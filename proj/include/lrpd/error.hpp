#ifndef LRPD_ERROR_HPP
#define LRPD_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lrpd {

// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed text or binary input. Carries the 1-based line number and
// field name when the input is line-oriented (0 / empty otherwise).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0, std::string field = {})
      : Error(format(what, line, field)), line_(line), field_(std::move(field)) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  static std::string format(const std::string& what, std::size_t line,
                            const std::string& field) {
    std::string msg;
    if (line > 0) msg += "line " + std::to_string(line) + ": ";
    if (!field.empty()) msg += "field '" + field + "': ";
    return msg + what;
  }

  std::size_t line_;
  std::string field_;
};

// A value violates a documented invariant (box dims, calibration, masks...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace lrpd

#endif  // LRPD_ERROR_HPP
