#include "relaxbc/error.hpp"

namespace relaxbc {

const char* to_string(Err kind) {
  switch (kind) {
    case Err::Parse: return "ParseError";
    case Err::Schema: return "SchemaError";
    case Err::DimensionMismatch: return "DimensionMismatch";
    case Err::NotValidated: return "NotValidated";
    case Err::NotTypeII: return "NotTypeII";
    case Err::SingularA1: return "SingularA1";
    case Err::RankDeficientK: return "RankDeficientK";
    case Err::InertiaMismatch: return "InertiaMismatch";
    case Err::StableCountMismatch: return "StableCountMismatch";
    case Err::Incompatible: return "Incompatible";
    case Err::GkcFailed: return "GkcFailed";
    case Err::GkcViolatedAtReference: return "GkcViolatedAtReference";
    case Err::DegenerateNullSpace: return "DegenerateNullSpace";
    case Err::CouplingSingular: return "CouplingSingular";
    case Err::NotSymmetric: return "NotSymmetric";
    case Err::NotDefinite: return "NotDefinite";
    case Err::SplitAmbiguous: return "SplitAmbiguous";
    case Err::NegativeRealEigenvalue: return "NegativeRealEigenvalue";
    case Err::NotStable: return "NotStable";
    case Err::SingularFrequencyBlock: return "SingularFrequencyBlock";
    case Err::SingularTraceSystem: return "SingularTraceSystem";
    case Err::BoundarySolveSingular: return "BoundarySolveSingular";
    case Err::CflViolation: return "CflViolation";
    case Err::UnstableStep: return "UnstableStep";
    case Err::NumericalFailure: return "NumericalFailure";
  }
  return "UnknownError";
}

int exit_code(Err kind) {
  switch (kind) {
    case Err::Parse:
    case Err::Schema:
      return 2;
    case Err::DimensionMismatch:
    case Err::NotValidated:
    case Err::NotTypeII:
    case Err::SingularA1:
    case Err::RankDeficientK:
    case Err::InertiaMismatch:
    case Err::StableCountMismatch:
    case Err::Incompatible:
      return 3;
    case Err::GkcFailed:
    case Err::GkcViolatedAtReference:
    case Err::DegenerateNullSpace:
    case Err::CouplingSingular:
      return 4;
    default:
      return 5;
  }
}

}  // namespace relaxbc
