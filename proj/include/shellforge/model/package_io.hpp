#pragma once

#include <string>
#include <string_view>

#include "shellforge/model/model.hpp"

namespace shellforge::model {

// Parses a `.aaspkg` archive (ZIP with manifest.json, model.json and
// artifacts/). Verifies manifest checksums over every artifacts/ entry and
// enforces all structural invariants.
// Throws Error{MalformedArchive | SchemaViolation | ChecksumMismatch}.
AasPackage parse_package(std::string_view bytes);

// Canonical serialization: sorted object keys, compact UTF-8 JSON, shortest
// round-trip number literals, archive entries sorted by path, fixed epoch
// timestamps. parse_package(serialize_package(p)) == p, and serialize is a
// byte-level fixpoint on its own output.
std::string serialize_package(const AasPackage& pkg);

// Registers an artifact: writes its canonical descriptor and payload files
// into pkg.artifact_files, appends to pkg.artifacts, updates checksums.
// `payload_files` maps package-relative paths (the entrypoint and any
// companion files) to contents.
void attach_artifact(AasPackage& pkg, ServiceArtifact artifact,
                     const std::map<std::string, std::string>& payload_files);

// Refreshes manifest checksums from the current artifact_files (plus
// regenerated descriptors). Used by mutation helpers in tests.
void refresh_checksums(AasPackage& pkg);

std::string descriptor_path(std::string_view artifact_name);
std::string canonical_descriptor_json(const ServiceArtifact& a);

}  // namespace shellforge::model
