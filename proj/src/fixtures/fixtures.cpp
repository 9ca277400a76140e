#include "shellforge/fixtures/fixtures.hpp"

#include <filesystem>
#include <fstream>

#include "shellforge/engine/process.hpp"
#include "shellforge/model/package_io.hpp"
#include "shellforge/util/error.hpp"

namespace shellforge::fixtures {

namespace fs = std::filesystem;
using namespace shellforge::model;

namespace {

constexpr std::string_view fixture_created_at = "2025-01-01T00:00:00Z";

constexpr std::string_view avg_source = R"(#include <cstdio>
#include <cstring>
#include <cstdlib>
#include <string>
#include <vector>

// Reads {"samples":[...]} from stdin, prints {"avg": mean} to stdout.
int main() {
  std::string in;
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof buf, stdin)) > 0) in.append(buf, n);
  const char* p = strstr(in.c_str(), "\"samples\"");
  if (!p) return 2;
  p = strchr(p, '[');
  if (!p) return 2;
  ++p;
  std::vector<double> xs;
  while (*p && *p != ']') {
    char* end = nullptr;
    double v = strtod(p, &end);
    if (end == p) { ++p; continue; }
    xs.push_back(v);
    p = end;
    while (*p == ',' || *p == ' ' || *p == '\t' || *p == '\n') ++p;
  }
  if (xs.empty()) return 3;
  double sum = 0;
  for (double v : xs) sum += v;
  printf("{\"avg\":%.17g}\n", sum / (double)xs.size());
  return 0;
}
)";

constexpr std::string_view crash_source = "int main() { return 3; }\n";

constexpr std::string_view avg_pipeline_json =
    R"({"steps":[{"op":"mean"},{"expr":"samples","op":"map","target":"avg"},{"fields":["avg"],"op":"select"}]})";

Submodel make_nameplate(const std::string& ns) {
  Submodel sm;
  sm.id.value = "urn:sm:" + ns + ":nameplate";
  sm.id_short = "Nameplate";
  sm.elements = {
      Property{"manufacturer", ValueType::String, std::string("ACME Pumps")},
      Property{"model", ValueType::String, std::string("P-100")},
      Property{"year", ValueType::Int64, int64_t{2024}},
      Property{"inService", ValueType::Bool, true},
  };
  return sm;
}

Submodel make_telemetry(const std::string& ns) {
  Submodel sm;
  sm.id.value = "urn:sm:" + ns + ":telemetry";
  sm.id_short = "Telemetry";
  sm.elements = {
      Property{"temp", ValueType::Double, 20.0},
      Property{"rpm", ValueType::Double, 1000.0},
      Property{"jobs", ValueType::Double, 0.0},
      Property{"cooling", ValueType::Double, 0.0},
  };
  return sm;
}

EndpointDescriptor make_endpoint(const FixtureOptions& opts, bool parameterized) {
  EndpointDescriptor ep;
  ep.host = opts.sim_host;
  ep.port = opts.sim_port;
  ep.parameterized = parameterized;
  ep.variables = {
      {"temp", ValueType::Double},
      {"rpm", ValueType::Double},
      {"jobs", ValueType::Double},
      {"cooling", ValueType::Double},
  };
  if (parameterized) {
    ep.commands = {{"set_cooling", {ValueType::Int64}}};
  }
  return ep;
}

IoSchema avg_io() {
  IoSchema io;
  io.inputs["samples"] = IoType::DoubleArray;
  io.outputs["avg"] = IoType::Double;
  return io;
}

OperationElement make_avg_operation() {
  OperationElement op;
  op.id_short = "AvgTemp";
  op.output_vars = {Property{"avg", ValueType::Double, 0.0}};
  op.qualifiers = {Qualifier{"service", "avg"}};
  return op;
}

AasShell make_shell(const std::string& ns,
                    const std::vector<Identifier>& refs) {
  AasShell shell;
  shell.id.value = "urn:" + ns;
  shell.asset_id.value = "urn:asset:" + ns;
  shell.submodel_refs = refs;
  return shell;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::IoError, "cannot read " + path.string());
  }
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

}  // namespace

std::string_view avg_service_source() { return avg_source; }

std::string compile_tool(std::string_view source, const std::string& build_dir,
                         const std::string& name) {
  fs::create_directories(build_dir);
  fs::path bin = fs::path(build_dir) / name;
  if (fs::exists(bin)) return bin.string();
  fs::path src = fs::path(build_dir) / (name + ".cpp");
  {
    std::ofstream out(src, std::ios::binary | std::ios::trunc);
    out.write(source.data(), static_cast<std::streamsize>(source.size()));
  }
  engine::RunLimits limits;
  limits.wall_time_s = 120;
  engine::RunResult r = engine::run_supervised(
      {"c++", "-std=c++17", "-O2", "-o", bin.string(), src.string()}, "",
      limits);
  if (r.exit_code != 0 || r.term_signal != 0) {
    throw Error(ErrorCode::BuildError,
                "compiling " + name + " failed: " + r.stderr_data);
  }
  return bin.string();
}

model::AasPackage make_level_package(int level, const FixtureOptions& opts) {
  if (level < 0 || level > 5) {
    throw Error(ErrorCode::SchemaViolation, "level must be in [0, 5]");
  }
  AasPackage pkg;
  pkg.manifest.format_version = "1.0.0";
  pkg.manifest.created_at = std::string(fixture_created_at);
  pkg.manifest.declared_level = level;

  const std::string ns = level <= 2 ? "pump" + std::to_string(level + 1)
                                    : "avg" + std::to_string(level);
  Submodel tele = make_telemetry(ns);

  if (level == 0) {
    // Model only, marked read-only: the knowledge-store configuration.
    pkg.manifest.model_immutable = true;
    Submodel plate = make_nameplate(ns);
    pkg.shells = {make_shell(ns, {plate.id, tele.id})};
    pkg.submodels = {plate, tele};
    return pkg;
  }

  if (level == 1 || level == 2) {
    Submodel plate = make_nameplate(ns);
    pkg.shells = {make_shell(ns, {plate.id, tele.id})};
    pkg.submodels = {plate, tele};
    pkg.endpoints = {make_endpoint(opts, level == 2)};
    SyncConfig sync;
    sync.inbound = FlowMode::Automatic;
    sync.outbound = level == 2 ? FlowMode::Automatic : FlowMode::Manual;
    sync.poll_interval_s = opts.poll_interval_s;
    sync.mappings = {{"temp", "Telemetry.temp"}, {"rpm", "Telemetry.rpm"}};
    if (level == 2) {
      sync.write_back_rules = {
          WriteBackRule{"mean(temp, 4) > 24", WriteBackCommand{"cooling", 1}}};
    }
    pkg.sync_config = sync;
    return pkg;
  }

  // Levels 3-5 embed the reference averaging service.
  Submodel services;
  services.id.value = "urn:sm:" + ns + ":services";
  services.id_short = "SoftwareServices";

  pkg.shells = {make_shell(ns, {tele.id, services.id})};

  ServiceArtifact avg;
  avg.name = "avg";
  avg.io = avg_io();

  if (level == 3) {
    avg.kind = ArtifactKind::PipelineScript;
    avg.entrypoint = "artifacts/avg.pipeline.json";
    services.elements = {
        FileElement{"avg_pipeline", "application/json", avg.entrypoint},
        make_avg_operation(),
    };
    pkg.submodels = {tele, services};
    attach_artifact(pkg, avg, {{avg.entrypoint, std::string(avg_pipeline_json)}});
    return pkg;
  }

  if (level == 4) {
    avg.kind = ArtifactKind::SourceBundle;
    avg.entrypoint = "artifacts/avg4/main.cpp";
    services.elements = {
        FileElement{"avg_source", "text/x-c++src", avg.entrypoint},
        make_avg_operation(),
    };
    pkg.submodels = {tele, services};
    attach_artifact(pkg, avg, {{avg.entrypoint, std::string(avg_source)}});
    return pkg;
  }

  // Level 5: prebuilt executables. Needs a compile step.
  std::string build_dir = opts.build_dir.empty()
                              ? (fs::temp_directory_path() / "shellforge-fixture-build").string()
                              : opts.build_dir;
  std::string avg_bin = compile_tool(avg_source, build_dir, "avg_exe");
  std::string crash_bin = compile_tool(crash_source, build_dir, "crash_exe");

  avg.kind = ArtifactKind::Executable;
  avg.entrypoint = "artifacts/avg.exe.bin";

  ServiceArtifact crash;
  crash.name = "crash";
  crash.kind = ArtifactKind::Executable;
  crash.entrypoint = "artifacts/crash.exe.bin";
  crash.io.outputs["ok"] = IoType::Bool;

  OperationElement crash_op;
  crash_op.id_short = "Crash";
  crash_op.output_vars = {Property{"ok", ValueType::Bool, true}};
  crash_op.qualifiers = {Qualifier{"service", "crash"}};

  services.elements = {
      FileElement{"avg_executable", "application/octet-stream", avg.entrypoint},
      FileElement{"crash_executable", "application/octet-stream",
                  crash.entrypoint},
      make_avg_operation(),
      crash_op,
  };
  pkg.submodels = {tele, services};
  attach_artifact(pkg, avg, {{avg.entrypoint, read_file(avg_bin)}});
  attach_artifact(pkg, crash, {{crash.entrypoint, read_file(crash_bin)}});
  return pkg;
}

std::string fixture_filename(int level) {
  static const char* names[] = {"lvl0_pump.aaspkg", "lvl1_pump.aaspkg",
                                "lvl2_pump.aaspkg", "lvl3_avg.aaspkg",
                                "lvl4_avg.aaspkg", "lvl5_avg.aaspkg"};
  return names[level];
}

std::string write_level_fixtures(const std::string& out_dir,
                                 FixtureOptions opts) {
  fs::create_directories(out_dir);
  if (opts.build_dir.empty()) {
    opts.build_dir = (fs::path(out_dir) / ".build").string();
  }
  for (int level = 0; level <= 5; ++level) {
    AasPackage pkg = make_level_package(level, opts);
    std::string bytes = serialize_package(pkg);
    std::ofstream out(fs::path(out_dir) / fixture_filename(level),
                      std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  return opts.build_dir;
}

}  // namespace shellforge::fixtures
