#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace fairclust {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unknown point or facility id.
class LookupError : public Error {
 public:
  using Error::Error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  explicit ParseError(const std::string& what) : Error(what), line_(0) {}
  /// 1-based; 0 when the error is not tied to a line.
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// Two input records share a location, so the minimum pairwise distance is zero.
class DuplicatePoints : public Error {
 public:
  using Error::Error;
};

class InvalidSolution : public Error {
 public:
  using Error::Error;
};

/// Enumeration would exceed the oracle's hard size caps.
class TooLarge : public Error {
 public:
  using Error::Error;
};

/// A structural invariant failed after construction; indicates an upstream bug.
class InternalError : public Error {
 public:
  using Error::Error;
};

/// A solver value is farther than the tolerance from the requested grid, or the
/// snapped point no longer satisfies the constraints.
class SnapFailure : public Error {
 public:
  SnapFailure(const std::string& what, std::vector<std::size_t> offending)
      : Error(what), offending_(std::move(offending)) {}
  const std::vector<std::size_t>& offending() const { return offending_; }

 private:
  std::vector<std::size_t> offending_;
};

}  // namespace fairclust
