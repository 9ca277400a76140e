#include "shellforge/util/error.hpp"

namespace shellforge {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedArchive: return "MalformedArchive";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::AmbiguousPath: return "AmbiguousPath";
    case ErrorCode::UnclassifiedFlow: return "UnclassifiedFlow";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::BuildError: return "BuildError";
    case ErrorCode::UnsupportedKind: return "UnsupportedKind";
    case ErrorCode::ResourceExceeded: return "ResourceExceeded";
    case ErrorCode::ServiceCrashed: return "ServiceCrashed";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::SandboxViolation: return "SandboxViolation";
    case ErrorCode::ProtocolError: return "ProtocolError";
    case ErrorCode::EmptyWindow: return "EmptyWindow";
    case ErrorCode::UnknownVariable: return "UnknownVariable";
    case ErrorCode::PortInUse: return "PortInUse";
    case ErrorCode::Disconnected: return "Disconnected";
    case ErrorCode::NotParameterized: return "NotParameterized";
    case ErrorCode::InvalidQuery: return "InvalidQuery";
    case ErrorCode::StrategyForbidsSync: return "StrategyForbidsSync";
    case ErrorCode::EndpointUnreachable: return "EndpointUnreachable";
    case ErrorCode::DelegationFailed: return "DelegationFailed";
    case ErrorCode::TypeMismatch: return "TypeMismatch";
    case ErrorCode::ModelImmutable: return "ModelImmutable";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::NotAProperty: return "NotAProperty";
    case ErrorCode::UnboundOperation: return "UnboundOperation";
    case ErrorCode::Unauthorized: return "Unauthorized";
    case ErrorCode::FeatureUnavailable: return "FeatureUnavailable";
    case ErrorCode::NotExecutableInPassiveRuntime:
      return "NotExecutableInPassiveRuntime";
    case ErrorCode::TargetUnreachable: return "TargetUnreachable";
    case ErrorCode::UsageError: return "UsageError";
    case ErrorCode::IoError: return "IoError";
  }
  return "UnknownError";
}

}  // namespace shellforge
