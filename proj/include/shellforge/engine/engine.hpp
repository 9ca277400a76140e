#pragma once

#include <string>
#include <variant>

#include "shellforge/engine/doc.hpp"
#include "shellforge/engine/pipeline.hpp"
#include "shellforge/engine/process.hpp"
#include "shellforge/model/model.hpp"

namespace shellforge::engine {

struct LoadedService {
  model::ServiceArtifact artifact;
  // Pipeline spec for interpreted services; absolute binary path for
  // translated bundles and prebuilt executables.
  std::variant<PipelineSpec, std::string> impl;
};

struct EngineConfig {
  // Root for the build cache, extracted executables, and bundle sources.
  std::string work_dir;
};

// Executes embedded services under a uniform I/O and sandbox contract.
// Invocations are one-shot: no state survives between calls. Safe for
// concurrent invocations; builds of the same bundle are serialized.
class ServiceEngine {
public:
  explicit ServiceEngine(EngineConfig cfg);

  // Pipelines are parsed and validated; source bundles are translated with
  // the system compiler and cached content-addressed; executables are
  // checksum-verified against the manifest and staged runnable.
  // Throws Error{ParseError | BuildError | UnsupportedKind | ChecksumMismatch}.
  LoadedService load(const model::ServiceArtifact& artifact,
                     const model::AasPackage& pkg);

  // Runs the service on one input document under the budget.
  // Throws Error{ResourceExceeded | ServiceCrashed | SchemaMismatch |
  // SandboxViolation | ProtocolError | EmptyWindow}.
  ServiceDoc invoke(const LoadedService& service, const ServiceDoc& input,
                    const model::ResourceBudget& budget) const;

  // True when a source bundle's build product is already cached.
  bool has_cached_build(const model::ServiceArtifact& artifact,
                        const model::AasPackage& pkg) const;

  const std::string& work_dir() const { return cfg_.work_dir; }

private:
  std::string build_bundle(const model::ServiceArtifact& artifact,
                           const model::AasPackage& pkg);
  std::string bundle_cache_key(const model::ServiceArtifact& artifact,
                               const model::AasPackage& pkg) const;

  EngineConfig cfg_;
};

// Stdio protocol for executable services: one JSON document in, one out,
// newline-terminated UTF-8; exit code 0 required.
ServiceDoc run_executable(const std::string& binary_path,
                          const ServiceDoc& input,
                          const model::ResourceBudget& budget,
                          std::string_view service_name);

// Splits a document with array-valued fields into a per-sample stream for
// the pipeline interpreter: arrays must share one length; scalars broadcast.
std::vector<ServiceDoc> explode_to_stream(const ServiceDoc& input);

}  // namespace shellforge::engine
