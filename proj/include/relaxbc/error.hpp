#pragma once

#include <stdexcept>
#include <string>

namespace relaxbc {

/// Failure categories.  Each maps onto one of the process exit codes:
/// configuration errors (2), admissibility failures (3), Kreiss-condition
/// failures (4) and numerical failures (5).
enum class Err {
  // configuration
  Parse,
  Schema,
  // admissibility
  DimensionMismatch,
  NotValidated,
  NotTypeII,
  SingularA1,
  RankDeficientK,
  InertiaMismatch,
  StableCountMismatch,
  Incompatible,
  // Kreiss condition / reduced boundary
  GkcFailed,
  GkcViolatedAtReference,
  DegenerateNullSpace,
  CouplingSingular,
  // numerical
  NotSymmetric,
  NotDefinite,
  SplitAmbiguous,
  NegativeRealEigenvalue,
  NotStable,
  SingularFrequencyBlock,
  SingularTraceSystem,
  BoundarySolveSingular,
  CflViolation,
  UnstableStep,
  NumericalFailure,
};

const char* to_string(Err kind);

/// Exit code for the CLI: 2 config, 3 admissibility, 4 GKC/UKC, 5 numerical.
int exit_code(Err kind);

class Error : public std::runtime_error {
 public:
  Error(Err kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  Err kind() const { return kind_; }
  int exit_code() const { return relaxbc::exit_code(kind_); }

 private:
  Err kind_;
};

[[noreturn]] inline void fail(Err kind, const std::string& msg) { throw Error(kind, msg); }

}  // namespace relaxbc
