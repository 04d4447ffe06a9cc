#include "pdmp/error.hpp"

namespace pdmp {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::contract_violation: return "contract violation";
    case ErrorCode::domain_error: return "domain error";
    case ErrorCode::numerical_overflow: return "numerical overflow";
    case ErrorCode::bound_violation: return "rate bound violation";
    case ErrorCode::quadrature_failure: return "quadrature failure";
    case ErrorCode::parse_error: return "parse error";
    case ErrorCode::io_error: return "I/O error";
    case ErrorCode::unsupported_model: return "unsupported model";
  }
  return "unknown error";
}

}  // namespace pdmp
