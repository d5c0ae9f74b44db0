#pragma once

#include <stdexcept>
#include <string>

namespace jacobi {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define JACOBI_DEFINE_ERROR(NAME)                       \
  struct NAME : Error {                                 \
    explicit NAME(const std::string& what) : Error(#NAME ": " + what) {} \
  }

JACOBI_DEFINE_ERROR(NonPositiveEntry);
JACOBI_DEFINE_ERROR(OutsideBand);
JACOBI_DEFINE_ERROR(BandEdge);
JACOBI_DEFINE_ERROR(ZeroPhi);
JACOBI_DEFINE_ERROR(SingularSystem);
JACOBI_DEFINE_ERROR(NoConvergence);
JACOBI_DEFINE_ERROR(PoleHit);
JACOBI_DEFINE_ERROR(NoAdmissibleN0);
JACOBI_DEFINE_ERROR(ZeroLambda);
JACOBI_DEFINE_ERROR(SeedDegenerate);
JACOBI_DEFINE_ERROR(NoAdmissibleIndices);
JACOBI_DEFINE_ERROR(NoStabilization);
JACOBI_DEFINE_ERROR(CriticalParameter);
JACOBI_DEFINE_ERROR(ParseError);
JACOBI_DEFINE_ERROR(HypothesisViolation);

#undef JACOBI_DEFINE_ERROR

}  // namespace jacobi
