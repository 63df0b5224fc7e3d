#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace asymdec {

// Broad error classes. The CLI maps them onto exit codes.
enum class ErrorCategory {
  Config,      // bad flags or configuration documents
  Data,        // malformed or mismatched input data
  Assumption,  // loss quartet violates the positivity assumptions
  Domain,      // argument outside the mathematical domain
  Numeric,     // non-finite objective and similar
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& name, const std::string& what)
      : std::runtime_error(name + ": " + what), category_(category), name_(name) {}

  ErrorCategory category() const noexcept { return category_; }
  const std::string& name() const noexcept { return name_; }

 private:
  ErrorCategory category_;
  std::string name_;
};

#define ASYMDEC_DEFINE_ERROR(Type, Category)                 \
  class Type : public Error {                                \
   public:                                                   \
    explicit Type(const std::string& what)                   \
        : Error(ErrorCategory::Category, #Type, what) {}     \
  };

ASYMDEC_DEFINE_ERROR(ConfigError, Config)
ASYMDEC_DEFINE_ERROR(SchemaError, Data)
ASYMDEC_DEFINE_ERROR(ParseError, Data)
ASYMDEC_DEFINE_ERROR(EmptyData, Data)
ASYMDEC_DEFINE_ERROR(DimensionMismatch, Data)
ASYMDEC_DEFINE_ERROR(UnknownCrimeType, Data)
ASYMDEC_DEFINE_ERROR(NegativeDuration, Data)
ASYMDEC_DEFINE_ERROR(SingleClass, Data)
ASYMDEC_DEFINE_ERROR(OracleMismatch, Data)
ASYMDEC_DEFINE_ERROR(SupportTooLarge, Config)
ASYMDEC_DEFINE_ERROR(DegenerateLoss, Assumption)
ASYMDEC_DEFINE_ERROR(DomainError, Domain)
ASYMDEC_DEFINE_ERROR(NonFiniteObjective, Numeric)

#undef ASYMDEC_DEFINE_ERROR

// Raised when one or more rows break the net-loss positivity or boundedness
// requirements; carries every offending row index.
class AssumptionViolation : public Error {
 public:
  AssumptionViolation(const std::string& what, std::vector<std::size_t> rows)
      : Error(ErrorCategory::Assumption, "AssumptionViolation", what), rows_(std::move(rows)) {}

  const std::vector<std::size_t>& rows() const noexcept { return rows_; }

 private:
  std::vector<std::size_t> rows_;
};

}  // namespace asymdec
