#pragma once

#include <stdexcept>
#include <string>

namespace spectral {

// Common base so callers can catch the whole family at once.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define SPECTRAL_DEFINE_ERROR(Name)                                \
  struct Name : Error {                                            \
    explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
  }

SPECTRAL_DEFINE_ERROR(ConstraintViolation);
SPECTRAL_DEFINE_ERROR(TraceViolation);
SPECTRAL_DEFINE_ERROR(PoleEvaluation);
SPECTRAL_DEFINE_ERROR(DegenerateSpectrum);
SPECTRAL_DEFINE_ERROR(GenerationFailure);
SPECTRAL_DEFINE_ERROR(SingularCurve);
SPECTRAL_DEFINE_ERROR(ReducibleCurve);
SPECTRAL_DEFINE_ERROR(NearBranchPoint);
SPECTRAL_DEFINE_ERROR(ContinuationAmbiguous);
SPECTRAL_DEFINE_ERROR(InfinityIsBranchPoint);
SPECTRAL_DEFINE_ERROR(BasisDegenerate);
SPECTRAL_DEFINE_ERROR(QuadratureFailure);
SPECTRAL_DEFINE_ERROR(TruncationFailure);
SPECTRAL_DEFINE_ERROR(OddCharDegenerate);
SPECTRAL_DEFINE_ERROR(OnThetaDivisor);
SPECTRAL_DEFINE_ERROR(NearDiagonal);
SPECTRAL_DEFINE_ERROR(NonDiagonalToric);
SPECTRAL_DEFINE_ERROR(LogBranchAmbiguity);
SPECTRAL_DEFINE_ERROR(FDInstability);
SPECTRAL_DEFINE_ERROR(ParameterError);

#undef SPECTRAL_DEFINE_ERROR

}  // namespace spectral
