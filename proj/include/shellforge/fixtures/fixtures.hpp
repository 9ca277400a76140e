#pragma once

#include <string>

#include "shellforge/model/model.hpp"

namespace shellforge::fixtures {

struct FixtureOptions {
  std::string sim_host = "127.0.0.1";
  int sim_port = 1;  // nothing listens there unless a simulator is started
  double poll_interval_s = 0.1;
  // Where level 4/5 reference services get compiled; reused across calls.
  std::string build_dir;
};

// The six reference packages, one per heaviness level:
//   0 pump model only          3 interpreted pipeline service
//   1 fixed-variable endpoint  4 C++ source bundle
//   2 parameterized endpoint   5 prebuilt executable (plus a crash op)
// Levels 4 and 5 compile the reference service with the system compiler.
model::AasPackage make_level_package(int level, const FixtureOptions& opts);

std::string fixture_filename(int level);  // "lvl0_pump.aaspkg", ...

// Writes all six fixtures under <out_dir>/; returns the directory used for
// compiled helpers.
std::string write_level_fixtures(const std::string& out_dir,
                                 FixtureOptions opts);

// Reference service: reads {"samples":[...]} on stdin, prints {"avg": mean}.
// Shared verbatim by the level 4 bundle and the level 5 executable so the
// cross-level equivalence is about the runtime path, not the algorithm.
std::string_view avg_service_source();

// Compiles a single-file C++ tool into build_dir/<name>; caches by name.
std::string compile_tool(std::string_view source, const std::string& build_dir,
                         const std::string& name);

}  // namespace shellforge::fixtures
