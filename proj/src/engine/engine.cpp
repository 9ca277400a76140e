#include "shellforge/engine/engine.hpp"

#include <filesystem>
#include <fstream>
#include <mutex>

#include "shellforge/util/codec.hpp"
#include "shellforge/util/error.hpp"

namespace shellforge::engine {

namespace fs = std::filesystem;
using model::ArtifactKind;

namespace {

std::mutex build_mutex;

void write_file(const fs::path& path, std::string_view data,
                bool executable = false) {
  fs::create_directories(path.parent_path());
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error(ErrorCode::IoError, "cannot write " + path.string());
    }
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
  }
  fs::permissions(path, executable ? fs::perms::owner_all |
                                         fs::perms::group_read |
                                         fs::perms::others_read
                                   : fs::perms::owner_read |
                                         fs::perms::owner_write |
                                         fs::perms::group_read |
                                         fs::perms::others_read);
}

// Package-relative paths of all files belonging to a bundle: everything
// under the entrypoint's directory.
std::vector<std::string> bundle_files(const model::ServiceArtifact& artifact,
                                      const model::AasPackage& pkg) {
  std::string dir = artifact.entrypoint.substr(
      0, artifact.entrypoint.find_last_of('/') + 1);
  std::vector<std::string> files;
  for (const auto& [path, data] : pkg.artifact_files) {
    if (path.starts_with(dir) && !path.ends_with(".artifact.json")) {
      files.push_back(path);
    }
  }
  return files;
}

}  // namespace

ServiceEngine::ServiceEngine(EngineConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.work_dir.empty()) {
    cfg_.work_dir = (fs::temp_directory_path() / "shellforge-work").string();
  }
  fs::create_directories(cfg_.work_dir);
}

std::string ServiceEngine::bundle_cache_key(
    const model::ServiceArtifact& artifact,
    const model::AasPackage& pkg) const {
  std::string acc;
  for (const auto& path : bundle_files(artifact, pkg)) {
    acc += path;
    acc.push_back('\0');
    acc += pkg.artifact_files.at(path);
    acc.push_back('\0');
  }
  acc += artifact.entrypoint;
  return util::sha256_hex(acc);
}

bool ServiceEngine::has_cached_build(const model::ServiceArtifact& artifact,
                                     const model::AasPackage& pkg) const {
  if (artifact.kind != ArtifactKind::SourceBundle) return false;
  return fs::exists(fs::path(cfg_.work_dir) / "bin" /
                    bundle_cache_key(artifact, pkg));
}

std::string ServiceEngine::build_bundle(const model::ServiceArtifact& artifact,
                                        const model::AasPackage& pkg) {
  if (!artifact.entrypoint.ends_with(".cpp")) {
    throw Error(ErrorCode::BuildError,
                "unsupported source language for " + artifact.entrypoint);
  }
  std::string key = bundle_cache_key(artifact, pkg);
  fs::path bin = fs::path(cfg_.work_dir) / "bin" / key;

  std::lock_guard<std::mutex> lock(build_mutex);
  if (fs::exists(bin)) return bin.string();

  fs::path src_root = fs::path(cfg_.work_dir) / "src" / key;
  std::string dir = artifact.entrypoint.substr(
      0, artifact.entrypoint.find_last_of('/') + 1);
  for (const auto& path : bundle_files(artifact, pkg)) {
    write_file(src_root / path.substr(dir.size()), pkg.artifact_files.at(path));
  }
  fs::create_directories(bin.parent_path());

  std::string entry = artifact.entrypoint.substr(dir.size());
  RunLimits limits;
  limits.wall_time_s = 120;
  limits.cpu_time_s = 110;
  RunResult r = run_supervised(
      {"c++", "-std=c++17", "-O2", "-o", bin.string(), entry}, "", limits,
      src_root.string());
  if (r.exec_failed) {
    throw Error(ErrorCode::BuildError, "translator 'c++' not found");
  }
  if (r.term_signal != 0 || r.exit_code != 0) {
    std::error_code ec;
    fs::remove(bin, ec);
    throw Error(ErrorCode::BuildError, r.stderr_data);
  }
  return bin.string();
}

LoadedService ServiceEngine::load(const model::ServiceArtifact& artifact,
                                  const model::AasPackage& pkg) {
  auto it = pkg.artifact_files.find(artifact.entrypoint);
  if (it == pkg.artifact_files.end()) {
    throw Error(ErrorCode::ParseError,
                "entrypoint " + artifact.entrypoint + " not in package");
  }
  LoadedService svc;
  svc.artifact = artifact;
  switch (artifact.kind) {
    case ArtifactKind::PipelineScript:
      svc.impl = parse_pipeline(it->second);
      break;
    case ArtifactKind::SourceBundle:
      svc.impl = build_bundle(artifact, pkg);
      break;
    case ArtifactKind::Executable: {
      auto sum = pkg.manifest.checksums.find(artifact.entrypoint);
      std::string actual = util::sha256_hex(it->second);
      if (sum == pkg.manifest.checksums.end() || sum->second != actual) {
        throw Error(ErrorCode::ChecksumMismatch, artifact.entrypoint);
      }
      fs::path staged = fs::path(cfg_.work_dir) / "exec" / actual;
      if (!fs::exists(staged)) {
        write_file(staged, it->second, /*executable=*/true);
      }
      svc.impl = staged.string();
      break;
    }
    default:
      throw Error(ErrorCode::UnsupportedKind, artifact.name);
  }
  return svc;
}

std::vector<ServiceDoc> explode_to_stream(const ServiceDoc& input) {
  size_t n = 0;
  bool has_array = false;
  for (const auto& [name, value] : input.fields) {
    if (const auto* arr = std::get_if<std::vector<double>>(&value)) {
      if (has_array && arr->size() != n) {
        throw Error(ErrorCode::SchemaMismatch,
                    "array fields must share one length");
      }
      has_array = true;
      n = arr->size();
    }
  }
  if (!has_array) return {input};
  std::vector<ServiceDoc> stream;
  stream.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    ServiceDoc doc;
    doc.ts = static_cast<double>(i);
    doc.source = input.source;
    for (const auto& [name, value] : input.fields) {
      if (const auto* arr = std::get_if<std::vector<double>>(&value)) {
        doc.fields[name] = (*arr)[i];
      } else {
        doc.fields[name] = value;
      }
    }
    stream.push_back(std::move(doc));
  }
  return stream;
}

ServiceDoc run_executable(const std::string& binary_path,
                          const ServiceDoc& input,
                          const model::ResourceBudget& budget,
                          std::string_view service_name) {
  RunLimits limits;
  limits.cpu_time_s = budget.cpu_time_s;
  limits.wall_time_s = budget.wall_time_s;
  limits.memory_bytes = budget.memory_bytes;
  limits.allow_network = budget.network_allowed;

  RunResult r =
      run_supervised({binary_path}, doc_to_json(input) + "\n", limits);
  if (r.sandbox_killed) {
    throw Error(ErrorCode::SandboxViolation,
                std::string(service_name) + " attempted a blocked syscall "
                "(network is denied by policy)");
  }
  if (r.wall_exceeded) {
    throw Error(ErrorCode::ResourceExceeded, "wall time budget");
  }
  if (r.cpu_exceeded) {
    throw Error(ErrorCode::ResourceExceeded, "cpu time budget");
  }
  if (r.term_signal != 0) {
    throw Error(ErrorCode::ServiceCrashed,
                std::string(service_name) + " killed by signal " +
                    std::to_string(r.term_signal));
  }
  if (r.exec_failed) {
    throw Error(ErrorCode::ServiceCrashed,
                "cannot execute " + binary_path);
  }
  if (r.exit_code != 0) {
    throw Error(ErrorCode::ServiceCrashed,
                std::string(service_name) + " exited with code " +
                    std::to_string(r.exit_code) +
                    (r.stderr_data.empty() ? "" : "; stderr: " + r.stderr_data));
  }
  ServiceDoc out;
  try {
    out = doc_from_json(r.stdout_data);
  } catch (const Error&) {
    throw Error(ErrorCode::ProtocolError,
                std::string(service_name) + " emitted a non-JSON document");
  }
  out.ts = input.ts;
  out.source = std::string(service_name);
  return out;
}

ServiceDoc ServiceEngine::invoke(const LoadedService& service,
                                 const ServiceDoc& input,
                                 const model::ResourceBudget& budget) const {
  check_schema(input, service.artifact.io.inputs, "input");
  ServiceDoc out;
  if (const auto* spec = std::get_if<PipelineSpec>(&service.impl)) {
    out = run_pipeline(*spec, explode_to_stream(input));
    out.source = service.artifact.name;
  } else {
    out = run_executable(std::get<std::string>(service.impl), input, budget,
                         service.artifact.name);
  }
  check_schema(out, service.artifact.io.outputs, "output");
  // Normalize integral JSON literals into the declared double type so the
  // output document is type-stable under the schema.
  for (const auto& [name, type] : service.artifact.io.outputs) {
    if (type != model::IoType::Double) continue;
    if (const auto* i = std::get_if<int64_t>(&out.fields.at(name))) {
      out.fields[name] = static_cast<double>(*i);
    }
  }
  return out;
}

}  // namespace shellforge::engine
