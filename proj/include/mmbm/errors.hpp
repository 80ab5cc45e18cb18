#pragma once

#include <stdexcept>
#include <string>

namespace mmbm {

/// Error taxonomy. Input/validation errors map to CLI exit code 2,
/// numerical failures to exit code 3.
enum class ErrorCode {
    // input / validation
    NotAGenerator,
    NotIrreducible,
    ZeroVariance,
    ZeroMeanDrift,
    BadBuffer,
    BadInput,
    EpsTooLarge,
    OutOfRange,
    EmptySample,
    NegativeRate,
    // numerical
    NonFinite,
    NoConvergence,
    SubspaceIllConditioned,
    SingularSystem,
    SingularN,
    SingularBlock,
    NotBalanced,
};

const char* error_code_name(ErrorCode code);

/// True for errors caused by bad inputs rather than numerical breakdown.
bool is_input_error(ErrorCode code);

class SolverError : public std::runtime_error {
  public:
    SolverError(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const { return code_; }

  private:
    ErrorCode code_;
};

}  // namespace mmbm
