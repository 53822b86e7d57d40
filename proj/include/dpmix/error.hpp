#pragma once

#include <stdexcept>
#include <string>

namespace dpmix {

// Base for all library errors. `code()` is a stable machine-readable name
// ("NotPositiveDefinite", "RaggedRows", ...) used by the CLI error JSON.
class Error : public std::runtime_error {
public:
  Error(std::string code, const std::string& msg)
      : std::runtime_error(code + ": " + msg), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

private:
  std::string code_;
};

// Bad numeric domain (x <= 0 for digamma, a0 <= 0, ...).
struct DomainError : Error {
  explicit DomainError(const std::string& msg) : Error("DomainError", msg) {}
};

// Factorization hit a non-positive pivot.
struct NotPositiveDefinite : Error {
  explicit NotPositiveDefinite(const std::string& msg)
      : Error("NotPositiveDefinite", msg) {}
};

struct IndexOutOfRange : Error {
  explicit IndexOutOfRange(const std::string& msg)
      : Error("IndexOutOfRange", msg) {}
};

// Hyperparameter validation failure; `code` names the violated invariant
// (IWDegreesTooSmall, NonPositiveRate, ...).
struct ValidationError : Error {
  ValidationError(const std::string& code, const std::string& msg)
      : Error(code, msg) {}
};

// Cluster parameter block does not match the requested covariance model.
struct ModelMismatch : Error {
  explicit ModelMismatch(const std::string& msg) : Error("ModelMismatch", msg) {}
};

// log-sum-exp still produced non-finite values: state is corrupt.
struct NumericalOverflow : Error {
  explicit NumericalOverflow(const std::string& msg)
      : Error("NumericalOverflow", msg) {}
};

// Input file problems. Row/column are 1-based for reporting.
struct ParseError : Error {
  ParseError(const std::string& code, const std::string& msg)
      : Error(code, msg) {}
};

struct NoEstimate : Error {
  explicit NoEstimate(const std::string& msg) : Error("NoEstimate", msg) {}
};

}  // namespace dpmix
