#include "incomp/error.hpp"

namespace incomp {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidParameters: return "invalid-parameters";
    case ErrorCode::ConnectivityFailure: return "connectivity-failure";
    case ErrorCode::DisconnectedGraph: return "disconnected-graph";
    case ErrorCode::ParseError: return "parse-error";
    case ErrorCode::RepeatedOperand: return "repeated-operand";
    case ErrorCode::ArityMismatch: return "arity-mismatch";
    case ErrorCode::NotPowerOfTwo: return "not-power-of-two";
    case ErrorCode::NonSibling: return "non-sibling";
    case ErrorCode::RoundMismatch: return "round-mismatch";
    case ErrorCode::RootHasNoParent: return "root-has-no-parent";
    case ErrorCode::IdNotInTree: return "id-not-in-tree";
    case ErrorCode::NonInjectiveMapping: return "non-injective-mapping";
    case ErrorCode::SourcesNotDistinct: return "sources-not-distinct";
    case ErrorCode::SizeMismatch: return "size-mismatch";
    case ErrorCode::PeriodicChain: return "periodic-chain";
    case ErrorCode::NumericalFailure: return "numerical-failure";
    case ErrorCode::SingularSystem: return "singular-system";
    case ErrorCode::RateAtCritical: return "rate-at-critical";
    case ErrorCode::HorizonTooShort: return "horizon-too-short";
    case ErrorCode::SlotCapReached: return "slot-cap-reached";
    case ErrorCode::Config: return "config";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

}  // namespace incomp
