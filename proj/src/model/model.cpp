#include "shellforge/model/model.hpp"

#include "shellforge/util/error.hpp"

namespace shellforge::model {

std::string_view value_type_name(ValueType t) {
  switch (t) {
    case ValueType::Double: return "double";
    case ValueType::Int64: return "int64";
    case ValueType::String: return "string";
    case ValueType::Bool: return "bool";
  }
  return "double";
}

ValueType value_type_from_name(std::string_view name) {
  if (name == "double") return ValueType::Double;
  if (name == "int64") return ValueType::Int64;
  if (name == "string") return ValueType::String;
  if (name == "bool") return ValueType::Bool;
  throw Error(ErrorCode::SchemaViolation,
              "unknown value type: " + std::string(name));
}

std::string_view element_id_short(const SubmodelElement& e) {
  return std::visit([](const auto& v) -> std::string_view { return v.id_short; },
                    e);
}

std::string_view artifact_kind_name(ArtifactKind k) {
  switch (k) {
    case ArtifactKind::PipelineScript: return "pipeline_script";
    case ArtifactKind::SourceBundle: return "source_bundle";
    case ArtifactKind::Executable: return "executable";
  }
  return "pipeline_script";
}

ArtifactKind artifact_kind_from_name(std::string_view name) {
  if (name == "pipeline_script") return ArtifactKind::PipelineScript;
  if (name == "source_bundle") return ArtifactKind::SourceBundle;
  if (name == "executable") return ArtifactKind::Executable;
  throw Error(ErrorCode::SchemaViolation,
              "unknown artifact kind: " + std::string(name));
}

std::string_view io_type_name(IoType t) {
  switch (t) {
    case IoType::Double: return "double";
    case IoType::Int64: return "int64";
    case IoType::String: return "string";
    case IoType::Bool: return "bool";
    case IoType::DoubleArray: return "double[]";
  }
  return "double";
}

IoType io_type_from_name(std::string_view name) {
  if (name == "double") return IoType::Double;
  if (name == "int64") return IoType::Int64;
  if (name == "string") return IoType::String;
  if (name == "bool") return IoType::Bool;
  if (name == "double[]") return IoType::DoubleArray;
  throw Error(ErrorCode::SchemaViolation,
              "unknown io type: " + std::string(name));
}

std::string_view flow_mode_name(FlowMode m) {
  return m == FlowMode::Automatic ? "automatic" : "manual";
}

FlowMode flow_mode_from_name(std::string_view name) {
  if (name == "manual") return FlowMode::Manual;
  if (name == "automatic") return FlowMode::Automatic;
  throw Error(ErrorCode::SchemaViolation,
              "unknown flow mode: " + std::string(name));
}

const Submodel* AasPackage::find_submodel(const Identifier& id) const {
  for (const auto& sm : submodels) {
    if (sm.id == id) return &sm;
  }
  return nullptr;
}

const Submodel* AasPackage::find_submodel_by_short(
    std::string_view id_short) const {
  for (const auto& sm : submodels) {
    if (sm.id_short == id_short) return &sm;
  }
  return nullptr;
}

const AasShell* AasPackage::find_shell(const Identifier& id) const {
  for (const auto& sh : shells) {
    if (sh.id == id) return &sh;
  }
  return nullptr;
}

const ServiceArtifact* AasPackage::find_artifact(std::string_view name) const {
  for (const auto& a : artifacts) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

}  // namespace shellforge::model
