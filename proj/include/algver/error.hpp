#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace algver {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operands disagree on a size (variable count, vector length, layer shape).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A computation would exceed a configured size budget (term count, path count).
class BudgetError : public Error {
 public:
  BudgetError(const std::string& what, std::size_t requested, std::size_t limit)
      : Error(what + " (requested " + std::to_string(requested) + ", limit " +
              std::to_string(limit) + ")"),
        requested_(requested),
        limit_(limit) {}

  std::size_t requested() const noexcept { return requested_; }
  std::size_t limit() const noexcept { return limit_; }

 private:
  std::size_t requested_;
  std::size_t limit_;
};

/// Malformed input file or record.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// The predicted class at the test point is not unique.
class NotCertifiableError : public Error {
 public:
  using Error::Error;
};

/// Every homotopy path of some solve failed.
class SolveError : public Error {
 public:
  using Error::Error;
};

/// Numeric rank relations fell between the cases of the quadric rank theorem.
class QuadricRankError : public Error {
 public:
  using Error::Error;
};

/// Benchmark training could not meet its post-training sanity checks.
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace algver
