#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace shellforge::model {

// IRI-style identifier. Must be non-empty, free of control characters, and
// unique among the identifiable entities (shells, submodels) of one package.
struct Identifier {
  std::string value;
  auto operator<=>(const Identifier&) const = default;
};

enum class ValueType { Double, Int64, String, Bool };

std::string_view value_type_name(ValueType t);
ValueType value_type_from_name(std::string_view name);  // throws SchemaViolation

using ScalarValue = std::variant<double, int64_t, std::string, bool>;

struct Property {
  std::string id_short;
  ValueType value_type = ValueType::Double;
  ScalarValue value;
  bool operator==(const Property&) const = default;
};

struct Qualifier {
  std::string kind;   // e.g. "delegation", "service"
  std::string value;  // e.g. a callback URL or artifact name
  bool operator==(const Qualifier&) const = default;
};

struct OperationElement {
  std::string id_short;
  std::vector<Property> input_vars;   // templates: value holds the default
  std::vector<Property> output_vars;
  std::vector<Qualifier> qualifiers;
  bool operator==(const OperationElement&) const = default;
};

struct FileElement {
  std::string id_short;
  std::string content_type;
  std::string artifact_path;  // package-relative, e.g. "artifacts/avg.pipeline.json"
  bool operator==(const FileElement&) const = default;
};

using SubmodelElement = std::variant<Property, OperationElement, FileElement>;

std::string_view element_id_short(const SubmodelElement& e);

struct Submodel {
  Identifier id;
  std::string id_short;
  std::vector<SubmodelElement> elements;
  bool operator==(const Submodel&) const = default;
};

struct AasShell {
  Identifier id;
  Identifier asset_id;
  std::vector<Identifier> submodel_refs;
  bool operator==(const AasShell&) const = default;
};

// ---- service artifacts (descriptive part; execution lives in engine) ----

enum class ArtifactKind { PipelineScript, SourceBundle, Executable };

std::string_view artifact_kind_name(ArtifactKind k);
ArtifactKind artifact_kind_from_name(std::string_view name);

// Value types allowed in service I/O schemas. The extra array type exists
// only at the service boundary; model Properties stay scalar.
enum class IoType { Double, Int64, String, Bool, DoubleArray };

std::string_view io_type_name(IoType t);
IoType io_type_from_name(std::string_view name);

struct IoSchema {
  std::map<std::string, IoType> inputs;
  std::map<std::string, IoType> outputs;
  bool operator==(const IoSchema&) const = default;
};

struct ResourceBudget {
  double cpu_time_s = 2.0;
  double wall_time_s = 5.0;
  uint64_t memory_bytes = 256ull * 1024 * 1024;
  bool network_allowed = false;
  bool operator==(const ResourceBudget&) const = default;
};

struct ServiceArtifact {
  std::string name;  // file stem of artifacts/<name>.artifact.json
  ArtifactKind kind = ArtifactKind::PipelineScript;
  std::string entrypoint;  // package-relative path
  IoSchema io;
  std::vector<std::string> dependencies;
  ResourceBudget budget;
  bool operator==(const ServiceArtifact&) const = default;
};

// ---- asset endpoints and synchronization ----

struct EndpointVariable {
  std::string name;
  ValueType value_type = ValueType::Double;
  bool operator==(const EndpointVariable&) const = default;
};

struct EndpointCommand {
  std::string name;
  std::vector<ValueType> arg_types;
  bool operator==(const EndpointCommand&) const = default;
};

struct EndpointDescriptor {
  std::string host;
  int port = 0;
  std::vector<EndpointVariable> variables;
  bool parameterized = false;  // false: single named-variable fetches only
  std::vector<EndpointCommand> commands;
  bool operator==(const EndpointDescriptor&) const = default;
};

enum class FlowMode { Manual, Automatic };

std::string_view flow_mode_name(FlowMode m);
FlowMode flow_mode_from_name(std::string_view name);

struct SyncMapping {
  std::string var;     // simulator variable
  std::string target;  // dotted element path, e.g. "Telemetry.temp"
  bool operator==(const SyncMapping&) const = default;
};

struct WriteBackCommand {
  std::string var;
  double value = 0;
  bool operator==(const WriteBackCommand&) const = default;
};

struct WriteBackRule {
  std::string trigger;  // "temp > 24" or "mean(temp, 4) > 24"
  WriteBackCommand command;
  bool operator==(const WriteBackRule&) const = default;
};

struct SyncConfig {
  FlowMode inbound = FlowMode::Manual;
  FlowMode outbound = FlowMode::Manual;
  double poll_interval_s = 0;  // > 0 required when any direction automatic
  std::vector<SyncMapping> mappings;
  std::vector<WriteBackRule> write_back_rules;
  bool operator==(const SyncConfig&) const = default;
};

// ---- manifest and package ----

struct PackageManifest {
  std::string format_version = "1.0.0";
  std::string created_at = "1970-01-01T00:00:00Z";
  std::optional<int> declared_level;
  bool model_immutable = false;
  std::map<std::string, std::string> checksums;  // artifact path -> sha256 hex
  bool operator==(const PackageManifest&) const = default;
};

struct AasPackage {
  std::vector<AasShell> shells;
  std::vector<Submodel> submodels;
  std::vector<ServiceArtifact> artifacts;
  std::vector<EndpointDescriptor> endpoints;
  std::optional<SyncConfig> sync_config;
  PackageManifest manifest;
  // Raw payloads of everything under artifacts/ (descriptors excluded).
  std::map<std::string, std::string> artifact_files;
  bool operator==(const AasPackage&) const = default;

  const Submodel* find_submodel(const Identifier& id) const;
  const Submodel* find_submodel_by_short(std::string_view id_short) const;
  const AasShell* find_shell(const Identifier& id) const;
  const ServiceArtifact* find_artifact(std::string_view name) const;
};

}  // namespace shellforge::model
