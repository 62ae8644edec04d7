#pragma once

#include <stdexcept>
#include <string>

namespace compdes {

// Base of all library errors. Each subclass names one failure mode so callers
// (and the CLI exit-code mapping) can dispatch on type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define COMPDES_DEFINE_ERROR(Name)          \
  class Name : public Error {               \
   public:                                  \
    using Error::Error;                     \
  };

COMPDES_DEFINE_ERROR(ShapeMismatch)
COMPDES_DEFINE_ERROR(NotPositiveDefinite)
COMPDES_DEFINE_ERROR(NotSymmetric)
COMPDES_DEFINE_ERROR(IndexOutOfRange)
COMPDES_DEFINE_ERROR(InvalidDesign)
COMPDES_DEFINE_ERROR(CountMismatch)
COMPDES_DEFINE_ERROR(InvalidModel)
COMPDES_DEFINE_ERROR(ZeroVector)
COMPDES_DEFINE_ERROR(MeasureNotNormalized)
COMPDES_DEFINE_ERROR(CriterionMismatch)
COMPDES_DEFINE_ERROR(Infeasible)
COMPDES_DEFINE_ERROR(NoFeasibleStart)
COMPDES_DEFINE_ERROR(GroupsNotIdentical)
COMPDES_DEFINE_ERROR(RankDeficient)
COMPDES_DEFINE_ERROR(DomainError)
COMPDES_DEFINE_ERROR(InputError)

#undef COMPDES_DEFINE_ERROR

}  // namespace compdes
