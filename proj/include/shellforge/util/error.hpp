#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace shellforge {

// Machine-readable failure categories. HTTP handlers and the CLI map these
// to status codes / exit codes; tests assert on them.
enum class ErrorCode {
  // model-core
  MalformedArchive,
  SchemaViolation,
  ChecksumMismatch,
  NotFound,
  AmbiguousPath,
  // classification
  UnclassifiedFlow,
  // service-engine
  ParseError,
  BuildError,
  UnsupportedKind,
  ResourceExceeded,
  ServiceCrashed,
  SchemaMismatch,
  SandboxViolation,
  ProtocolError,
  EmptyWindow,
  // asset-link
  UnknownVariable,
  PortInUse,
  Disconnected,
  NotParameterized,
  InvalidQuery,
  StrategyForbidsSync,
  EndpointUnreachable,
  // runtime-server
  DelegationFailed,
  TypeMismatch,
  ModelImmutable,
  DuplicateId,
  NotAProperty,
  UnboundOperation,
  Unauthorized,
  // packager
  FeatureUnavailable,
  // cli
  NotExecutableInPassiveRuntime,
  TargetUnreachable,
  UsageError,
  IoError,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, std::string message)
      : std::runtime_error(std::string(error_code_name(code)) +
                           (message.empty() ? "" : ": " + message)),
        code_(code), detail_(std::move(message)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace shellforge
