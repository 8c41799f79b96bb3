#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace safetree {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file; line numbers are 1-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// A value violates a documented invariant or precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A leaf of a reduced tree lost every pure action (minimum split size too large).
class NoPureActionError : public Error {
 public:
  NoPureActionError(std::size_t node, std::size_t configurations, const std::string& what)
      : Error(what), node_(node), configurations_(configurations) {}

  std::size_t node() const noexcept { return node_; }
  std::size_t configurations() const noexcept { return configurations_; }

 private:
  std::size_t node_;
  std::size_t configurations_;
};

// Safety synthesis found an initial state outside the winning region.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

class CapacityError : public Error {
 public:
  using Error::Error;
};

}  // namespace safetree
