#pragma once

#include <stdexcept>
#include <string>

namespace timecf {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed arguments: length mismatches, out-of-range intervals, empty inputs.
class InputError : public Error {
 public:
  using Error::Error;
};

// A UCR file could not be read. Carries the 1-based line number (0 = whole file).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// An API was used in a state or configuration it does not support.
class UsageError : public Error {
 public:
  using Error::Error;
};

// A model could not be fitted to the data it was given.
class FitError : public Error {
 public:
  using Error::Error;
};

// Training diverged. phase() names the stage that produced the non-finite loss.
class TrainingError : public Error {
 public:
  TrainingError(const std::string& phase, const std::string& what)
      : Error(phase + ": " + what), phase_(phase) {}
  const std::string& phase() const noexcept { return phase_; }

 private:
  std::string phase_;
};

}  // namespace timecf
