#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace topo {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Malformed native mesh file. `line()` is 1-based; 0 means end of file.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class UnsupportedElement : public Error {
 public:
  using Error::Error;
};

class SingularElement : public Error {
 public:
  using Error::Error;
};

class SingularMatrix : public Error {
 public:
  using Error::Error;
};

/// Iterative solve stopped at max_iterations without meeting its tolerance.
class IterationLimit : public Error {
 public:
  IterationLimit(std::size_t iterations, double relative_residual);
  std::size_t iterations() const noexcept { return iterations_; }
  double relative_residual() const noexcept { return residual_; }

 private:
  std::size_t iterations_;
  double residual_;
};

/// The Lagrange multiplier bracket does not contain the volume root.
class BracketExhausted : public Error {
 public:
  using Error::Error;
};

class Divergence : public Error {
 public:
  using Error::Error;
};

class CatalogError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace topo
