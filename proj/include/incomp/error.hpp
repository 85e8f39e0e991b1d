#pragma once

#include <stdexcept>
#include <string>

namespace incomp {

enum class ErrorCode {
  InvalidParameters,
  ConnectivityFailure,
  DisconnectedGraph,
  ParseError,
  RepeatedOperand,
  ArityMismatch,
  NotPowerOfTwo,
  NonSibling,
  RoundMismatch,
  RootHasNoParent,
  IdNotInTree,
  NonInjectiveMapping,
  SourcesNotDistinct,
  SizeMismatch,
  PeriodicChain,
  NumericalFailure,
  SingularSystem,
  RateAtCritical,
  HorizonTooShort,
  SlotCapReached,
  Config,
  Io,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace incomp
