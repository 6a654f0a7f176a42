#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mtp2 {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  DimensionMismatch(std::size_t lhs, std::size_t rhs)
      : Error("dimension mismatch: " + std::to_string(lhs) + " vs " + std::to_string(rhs)),
        lhs_(lhs),
        rhs_(rhs) {}
  std::size_t lhs() const noexcept { return lhs_; }
  std::size_t rhs() const noexcept { return rhs_; }

 private:
  std::size_t lhs_;
  std::size_t rhs_;
};

/// Raised when a matrix offered as symmetric is grossly asymmetric.
class AsymmetricInput : public Error {
 public:
  explicit AsymmetricInput(double asymmetry)
      : Error("input matrix is not symmetric (max asymmetry " + std::to_string(asymmetry) + ")"),
        asymmetry_(asymmetry) {}
  double asymmetry() const noexcept { return asymmetry_; }

 private:
  double asymmetry_;
};

/// Cholesky pivot at `index` fell at or below the pivot floor.
class NotPositiveDefinite : public Error {
 public:
  explicit NotPositiveDefinite(std::size_t index)
      : Error("matrix is not positive definite (pivot " + std::to_string(index) + ")"),
        index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class ConvergenceFailure : public Error {
 public:
  using Error::Error;
};

class NonpositiveScale : public Error {
 public:
  using Error::Error;
};

class ZeroVariance : public Error {
 public:
  explicit ZeroVariance(std::size_t index)
      : Error("variable " + std::to_string(index) + " has nonpositive variance"), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class InvalidT : public InvalidArgument {
 public:
  explicit InvalidT(double t) : InvalidArgument("deviation parameter t must exceed 2, got " + std::to_string(t)) {}
};

class NonpositiveEntry : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class OutOfPsdRange : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class InvalidEps : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class InfeasiblePattern : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace mtp2
