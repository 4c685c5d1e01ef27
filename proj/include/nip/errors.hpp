#pragma once

#include <stdexcept>
#include <string>

namespace nip {

// Exit-code category for the CLI: 0 success, 1 validation failure,
// 2 numeric failure.
enum class ErrorCategory { Validation = 1, Numeric = 2 };

class Error : public std::runtime_error {
 public:
  Error(std::string msg, ErrorCategory cat)
      : std::runtime_error(std::move(msg)), category_(cat) {}
  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

#define NIP_DEFINE_ERROR(Name, Cat)                                   \
  class Name : public Error {                                         \
   public:                                                            \
    explicit Name(const std::string& msg)                             \
        : Error(std::string(#Name) + ": " + msg, ErrorCategory::Cat) {} \
  }

NIP_DEFINE_ERROR(ShapeMismatch, Validation);
NIP_DEFINE_ERROR(IoError, Validation);
NIP_DEFINE_ERROR(ValidationError, Validation);
NIP_DEFINE_ERROR(NotFound, Validation);
NIP_DEFINE_ERROR(CorruptStore, Validation);
NIP_DEFINE_ERROR(ParseError, Validation);
NIP_DEFINE_ERROR(EmptyOrbit, Validation);
NIP_DEFINE_ERROR(DomainError, Validation);
NIP_DEFINE_ERROR(AxisReused, Validation);
NIP_DEFINE_ERROR(DimError, Validation);
NIP_DEFINE_ERROR(MetricError, Validation);
NIP_DEFINE_ERROR(OracleTooLarge, Validation);
NIP_DEFINE_ERROR(DegenerateData, Numeric);
NIP_DEFINE_ERROR(NumericalDivergence, Numeric);

#undef NIP_DEFINE_ERROR

}  // namespace nip
