#pragma once
#include <stdexcept>
#include <string>

namespace expcap {

#define EXPCAP_ERROR(Name)                                        \
  class Name : public std::runtime_error {                        \
   public:                                                        \
    explicit Name(const std::string& what) : std::runtime_error(what) {} \
  };

EXPCAP_ERROR(Overflow)
EXPCAP_ERROR(ZeroField)
EXPCAP_ERROR(GridMismatch)
EXPCAP_ERROR(TooCoarse)
EXPCAP_ERROR(SolverDiverged)
EXPCAP_ERROR(SupportError)
EXPCAP_ERROR(NotAdmissible)
EXPCAP_ERROR(NoConvergence)
EXPCAP_ERROR(TestNotAdmissible)
EXPCAP_ERROR(NotComparable)
EXPCAP_ERROR(Infeasible)
EXPCAP_ERROR(BadLambda)
EXPCAP_ERROR(LadderTooCoarse)

#undef EXPCAP_ERROR

}  // namespace expcap
