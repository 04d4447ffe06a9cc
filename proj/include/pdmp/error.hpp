#pragma once

#include <stdexcept>
#include <string>

namespace pdmp {

enum class ErrorCode {
  contract_violation,
  domain_error,
  numerical_overflow,
  bound_violation,
  quadrature_failure,
  parse_error,
  io_error,
  unsupported_model,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised when adaptive quadrature cannot meet its tolerance at maximum depth.
class QuadratureError : public Error {
 public:
  QuadratureError(const std::string& what, double achieved_error)
      : Error(ErrorCode::quadrature_failure, what), achieved_error_(achieved_error) {}

  double achieved_error() const noexcept { return achieved_error_; }

 private:
  double achieved_error_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool condition, const std::string& what) {
  if (!condition) fail(ErrorCode::contract_violation, what);
}

}  // namespace pdmp
