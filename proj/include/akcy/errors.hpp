#pragma once

#include <stdexcept>
#include <string>

namespace akcy {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

#define AKCY_DEFINE_ERROR(Name)                                                \
  class Name : public Error {                                                  \
  public:                                                                      \
    explicit Name(const std::string &what) : Error(#Name ": " + what) {}       \
  }

AKCY_DEFINE_ERROR(InvalidGrid);
AKCY_DEFINE_ERROR(ShapeMismatch);
AKCY_DEFINE_ERROR(NonFiniteField);
AKCY_DEFINE_ERROR(NonPositiveDensity);
AKCY_DEFINE_ERROR(NonZeroMean);
AKCY_DEFINE_ERROR(NotCompatible);
AKCY_DEFINE_ERROR(NotTaming);
AKCY_DEFINE_ERROR(NotAlmostKahler);
AKCY_DEFINE_ERROR(InvalidStructure);
AKCY_DEFINE_ERROR(Degenerate);
AKCY_DEFINE_ERROR(InconsistentRHS);
AKCY_DEFINE_ERROR(LinearSolveFailure);
AKCY_DEFINE_ERROR(DimensionMismatch);
AKCY_DEFINE_ERROR(LostPositivity);
AKCY_DEFINE_ERROR(NewtonDivergence);
AKCY_DEFINE_ERROR(PathStalled);
AKCY_DEFINE_ERROR(ScenarioInvalid);
AKCY_DEFINE_ERROR(ConfigError);
AKCY_DEFINE_ERROR(FormatError);

#undef AKCY_DEFINE_ERROR

} // namespace akcy
