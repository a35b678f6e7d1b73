#pragma once

#include <stdexcept>
#include <string>

namespace tsdec {

// Base of every error raised by the library. Each subclass corresponds to one
// failure contract so callers (and tests) can discriminate by type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define TSDEC_DECLARE_ERROR(Name)          \
  class Name : public Error {              \
   public:                                 \
    using Error::Error;                    \
  }

TSDEC_DECLARE_ERROR(DimensionError);
TSDEC_DECLARE_ERROR(NumericError);
TSDEC_DECLARE_ERROR(ContractError);
TSDEC_DECLARE_ERROR(ContextTooShortError);
TSDEC_DECLARE_ERROR(CapacityError);
TSDEC_DECLARE_ERROR(FeatureError);
TSDEC_DECLARE_ERROR(CalendarError);
TSDEC_DECLARE_ERROR(ParseError);
TSDEC_DECLARE_ERROR(StrideError);
TSDEC_DECLARE_ERROR(ConfigError);
TSDEC_DECLARE_ERROR(DegenerateBatchError);
TSDEC_DECLARE_ERROR(DivergenceError);
TSDEC_DECLARE_ERROR(RequestError);
TSDEC_DECLARE_ERROR(TaskError);
TSDEC_DECLARE_ERROR(CheckpointError);

#undef TSDEC_DECLARE_ERROR

}  // namespace tsdec
