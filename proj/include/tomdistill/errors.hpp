#pragma once

#include <stdexcept>
#include <string>

namespace tomdistill {

// Base of every error raised by the library. The CLI maps these to exit
// codes and per-sample failure records.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define TOMDISTILL_DEFINE_ERROR(Name)        \
  class Name : public Error {                \
   public:                                   \
    using Error::Error;                      \
  };

TOMDISTILL_DEFINE_ERROR(DomainError)
TOMDISTILL_DEFINE_ERROR(DimensionError)
TOMDISTILL_DEFINE_ERROR(SpaceMismatchError)
TOMDISTILL_DEFINE_ERROR(FormatError)
TOMDISTILL_DEFINE_ERROR(ClassMapError)
TOMDISTILL_DEFINE_ERROR(ManifestError)
TOMDISTILL_DEFINE_ERROR(BackendError)
TOMDISTILL_DEFINE_ERROR(AggregationError)
TOMDISTILL_DEFINE_ERROR(InsufficientSupport)
TOMDISTILL_DEFINE_ERROR(DegenerateFit)
TOMDISTILL_DEFINE_ERROR(EmptySplit)
TOMDISTILL_DEFINE_ERROR(IoError)

#undef TOMDISTILL_DEFINE_ERROR

}  // namespace tomdistill
