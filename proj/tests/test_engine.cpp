#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <chrono>
#include <random>

#include "shellforge/engine/engine.hpp"
#include "shellforge/fixtures/fixtures.hpp"
#include "shellforge/model/package_io.hpp"
#include "shellforge/util/error.hpp"
#include "support.hpp"

using namespace shellforge;
using namespace shellforge::engine;
using nlohmann::json;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::IoError;
}

std::vector<ServiceDoc> temp_stream(const std::vector<double>& ts) {
  std::vector<ServiceDoc> docs;
  for (double t : ts) {
    ServiceDoc d;
    d.ts = t;
    d.fields["temp"] = testsupport::oracle_temp(t);
    docs.push_back(std::move(d));
  }
  return docs;
}

model::AasPackage exe_package(std::string_view source, const std::string& name,
                              model::IoSchema io) {
  std::string bin = fixtures::compile_tool(source, testsupport::shared_build_dir(),
                                           name);
  model::AasPackage pkg;
  pkg.manifest.created_at = "2025-01-01T00:00:00Z";
  model::Submodel services;
  services.id.value = "urn:sm:test:" + name;
  services.id_short = "SoftwareServices";
  model::ServiceArtifact a;
  a.name = name;
  a.kind = model::ArtifactKind::Executable;
  a.entrypoint = "artifacts/" + name + ".exe.bin";
  a.io = std::move(io);
  services.elements.push_back(
      model::FileElement{name, "application/octet-stream", a.entrypoint});
  model::AasShell shell;
  shell.id.value = "urn:test:" + name;
  shell.asset_id.value = "urn:asset:test";
  shell.submodel_refs = {services.id};
  pkg.shells = {shell};
  pkg.submodels = {services};
  model::attach_artifact(pkg, a, {{a.entrypoint, testsupport::read_file(bin)}});
  return pkg;
}

model::IoSchema empty_in_bool_out() {
  model::IoSchema io;
  io.outputs["ok"] = model::IoType::Bool;
  return io;
}

}  // namespace

TEST_CASE("expr: arithmetic over fields") {
  auto e = ArithExpr::parse("2 * temp + (rpm - 1000) / 4");
  CHECK(e.eval({{"temp", 20.0}, {"rpm", 1100.0}}) == doctest::Approx(65.0));
  CHECK(ArithExpr::parse("-3 + 5").eval({}) == 2.0);
  CHECK(ArithExpr::parse("1.5e2").eval({}) == 150.0);
  CHECK(code_of([] { ArithExpr::parse("2 +"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { ArithExpr::parse("(1"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { ArithExpr::parse("a $ b"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { ArithExpr::parse("x + 1").eval({{"y", 1.0}}); }) ==
        ErrorCode::SchemaMismatch);
}

TEST_CASE("pipeline: parse and validation errors") {
  PipelineSpec spec =
      parse_pipeline(R"({"steps":[{"op":"window","n":4},{"op":"mean"}]})");
  CHECK(spec.steps.size() == 2);
  CHECK(code_of([] { parse_pipeline(R"({"steps":[{"op":"window","n":0}]})"); }) ==
        ErrorCode::ParseError);
  CHECK(code_of([] { parse_pipeline(R"({"steps":[{"op":"wat"}]})"); }) ==
        ErrorCode::ParseError);
  CHECK(code_of([] { parse_pipeline("[]"); }) == ErrorCode::ParseError);
  CHECK(code_of([] {
          parse_pipeline(R"({"steps":[{"op":"regex_extract","pattern":"(","group":1,"from":"x"}]})");
        }) == ErrorCode::ParseError);
  CHECK(code_of([] {
          parse_pipeline(R"({"steps":[{"op":"map","target":"y","expr":"1 +"}]})");
        }) == ErrorCode::ParseError);
}

TEST_CASE("pipeline: windowed mean equals the generator oracle") {
  // Five samples of temp at t = 0, 15, 30, 45, 60.
  std::vector<double> ts{0, 15, 30, 45, 60};
  auto docs = temp_stream(ts);
  std::vector<double> values;
  for (double t : ts) values.push_back(testsupport::oracle_temp(t));

  PipelineSpec spec = parse_pipeline(R"({"steps":[{"op":"window","n":5},{"op":"mean"}]})");
  ServiceDoc out = run_pipeline(spec, docs);
  double expected = testsupport::oracle_mean(values);  // 20.0 for this grid
  CHECK(expected == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(std::get<double>(out.fields.at("temp")) == expected);
  CHECK(out.ts == 60.0);
}

TEST_CASE("pipeline: filter then max equals the oracle") {
  auto docs = temp_stream({0, 15, 30, 45, 60});
  PipelineSpec spec = parse_pipeline(
      R"({"steps":[{"op":"filter","field":"temp","cmp":">","literal":22},{"op":"window","n":1},{"op":"max"}]})");
  ServiceDoc out = run_pipeline(spec, docs);
  // Oracle: keep temp(t) > 22, take the max.
  double expected = -1e300;
  for (double t : {0.0, 15.0, 30.0, 45.0, 60.0}) {
    double v = testsupport::oracle_temp(t);
    if (v > 22.0) expected = std::max(expected, v);
  }
  CHECK(expected == doctest::Approx(25.0).epsilon(1e-12));
  CHECK(std::get<double>(out.fields.at("temp")) == expected);
}

TEST_CASE("pipeline: select projects one document") {
  ServiceDoc doc;
  doc.fields["temp"] = 20.0;
  doc.fields["rpm"] = 1000.0;
  PipelineSpec spec = parse_pipeline(R"({"steps":[{"op":"select","fields":["temp"]}]})");
  ServiceDoc out = run_pipeline(spec, {doc});
  CHECK(out.fields.size() == 1);
  CHECK(std::get<double>(out.fields.at("temp")) == 20.0);
  CHECK(code_of([&] {
          run_pipeline(parse_pipeline(R"({"steps":[{"op":"select","fields":["gone"]}]})"),
                       {doc});
        }) == ErrorCode::SchemaMismatch);
}

TEST_CASE("pipeline: regex_extract pulls capture groups") {
  ServiceDoc doc;
  doc.fields["msg"] = std::string("ALARM:E042 overheat");
  PipelineSpec spec = parse_pipeline(
      R"json({"steps":[{"op":"regex_extract","pattern":"E([0-9]+)","group":1,"from":"msg","to":"code"},{"op":"select","fields":["code"]}]})json");
  ServiceDoc out = run_pipeline(spec, {doc});
  CHECK(std::get<std::string>(out.fields.at("code")) == "042");

  // Non-matching documents drop out of the stream.
  ServiceDoc quiet;
  quiet.fields["msg"] = std::string("all well");
  CHECK(code_of([&] { run_pipeline(spec, {quiet}); }) == ErrorCode::EmptyWindow);
}

TEST_CASE("pipeline: map evaluates arithmetic per document") {
  auto docs = temp_stream({0, 15});
  PipelineSpec spec = parse_pipeline(
      R"({"steps":[{"op":"map","target":"fahrenheit","expr":"temp * 9 / 5 + 32"}]})");
  ServiceDoc out = run_pipeline(spec, docs);  // last doc
  CHECK(std::get<double>(out.fields.at("fahrenheit")) ==
        testsupport::oracle_temp(15) * 9.0 / 5.0 + 32.0);
}

TEST_CASE("pipeline: empty windows raise EmptyWindow") {
  auto docs = temp_stream({0, 15});
  CHECK(code_of([&] {
          run_pipeline(parse_pipeline(R"({"steps":[{"op":"window","n":5}]})"), docs);
        }) == ErrorCode::EmptyWindow);
  CHECK(code_of([&] {
          run_pipeline(parse_pipeline(R"({"steps":[{"op":"mean"}]})"), {});
        }) == ErrorCode::EmptyWindow);
  CHECK(code_of([&] {
          run_pipeline(parse_pipeline(
                           R"({"steps":[{"op":"filter","field":"temp","cmp":">","literal":1000},{"op":"mean"}]})"),
                       docs);
        }) == ErrorCode::EmptyWindow);
}

TEST_CASE("pipeline: bit-identical output across runs") {
  std::mt19937 rng(77);
  for (int iter = 0; iter < 30; ++iter) {
    std::vector<ServiceDoc> docs;
    size_t n = 3 + rng() % 40;
    for (size_t i = 0; i < n; ++i) {
      ServiceDoc d;
      d.ts = double(i);
      d.fields["temp"] =
          std::uniform_real_distribution<double>(-100, 100)(rng);
      d.fields["rpm"] = std::uniform_real_distribution<double>(0, 3000)(rng);
      docs.push_back(std::move(d));
    }
    PipelineSpec spec = parse_pipeline(
        R"({"steps":[{"op":"map","target":"load","expr":"rpm / 1000 + temp * 0.01"},
                     {"op":"window","n":3},{"op":"mean"}]})");
    ServiceDoc a = run_pipeline(spec, docs);
    ServiceDoc b = run_pipeline(spec, docs);
    CHECK(doc_to_json(a) == doc_to_json(b));
    CHECK(a == b);
  }
}

TEST_CASE("engine: pipeline service via invoke") {
  fixtures::FixtureOptions opts;
  model::AasPackage pkg = fixtures::make_level_package(3, opts);
  testsupport::TempDir work("engine-pipe");
  ServiceEngine engine(EngineConfig{work.str()});
  LoadedService svc = engine.load(*pkg.find_artifact("avg"), pkg);

  ServiceDoc input;
  input.fields["samples"] = std::vector<double>{20, 25, 20, 15};
  ServiceDoc out = engine.invoke(svc, input, pkg.artifacts[0].budget);
  CHECK(std::get<double>(out.fields.at("avg")) == 20.0);
  CHECK(out.fields.size() == 1);

  // Input schema violations surface as SchemaMismatch.
  ServiceDoc bad;
  bad.fields["nope"] = 1.0;
  CHECK(code_of([&] { engine.invoke(svc, bad, pkg.artifacts[0].budget); }) ==
        ErrorCode::SchemaMismatch);
}

TEST_CASE("engine: executable service honors the stdio protocol") {
  model::IoSchema io;
  io.inputs["samples"] = model::IoType::DoubleArray;
  io.outputs["avg"] = model::IoType::Double;
  model::AasPackage pkg =
      exe_package(fixtures::avg_service_source(), "avg_exe_t", io);
  testsupport::TempDir work("engine-exe");
  ServiceEngine engine(EngineConfig{work.str()});
  LoadedService svc = engine.load(pkg.artifacts[0], pkg);

  ServiceDoc input;
  input.fields["samples"] = std::vector<double>{20, 25, 20, 15};
  ServiceDoc out = engine.invoke(svc, input, pkg.artifacts[0].budget);
  CHECK(std::get<double>(out.fields.at("avg")) == 20.0);

  // Two invocations with identical input, with a foreign call between them.
  ServiceDoc rerun = engine.invoke(svc, input, pkg.artifacts[0].budget);
  CHECK(doc_to_json(out) == doc_to_json(rerun));
}

TEST_CASE("engine: staged executable checksum is verified at load") {
  model::IoSchema io;
  io.inputs["samples"] = model::IoType::DoubleArray;
  io.outputs["avg"] = model::IoType::Double;
  model::AasPackage pkg =
      exe_package(fixtures::avg_service_source(), "avg_exe_t", io);
  pkg.manifest.checksums[pkg.artifacts[0].entrypoint] =
      std::string(64, '0');  // poison the recorded digest
  testsupport::TempDir work("engine-sum");
  ServiceEngine engine(EngineConfig{work.str()});
  CHECK(code_of([&] { engine.load(pkg.artifacts[0], pkg); }) ==
        ErrorCode::ChecksumMismatch);
}

TEST_CASE("engine: crash, protocol, and sandbox failures") {
  testsupport::TempDir work("engine-fail");
  ServiceEngine engine(EngineConfig{work.str()});

  model::AasPackage crash =
      exe_package(testsupport::crash3_source, "crash_t", empty_in_bool_out());
  LoadedService crash_svc = engine.load(crash.artifacts[0], crash);
  try {
    engine.invoke(crash_svc, ServiceDoc{}, crash.artifacts[0].budget);
    FAIL("expected ServiceCrashed");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ServiceCrashed);
    CHECK(e.detail().find("3") != std::string::npos);
  }

  model::AasPackage bad =
      exe_package(testsupport::badjson_source, "badjson_t", empty_in_bool_out());
  LoadedService bad_svc = engine.load(bad.artifacts[0], bad);
  CHECK(code_of([&] { engine.invoke(bad_svc, ServiceDoc{}, bad.artifacts[0].budget); }) ==
        ErrorCode::ProtocolError);

  if (probe_sandbox().seccomp_network_block) {
    model::IoSchema net_io;
    net_io.outputs["net"] = model::IoType::Bool;
    model::AasPackage net =
        exe_package(testsupport::netcheck_source, "netcheck_t", net_io);
    LoadedService net_svc = engine.load(net.artifacts[0], net);
    CHECK(code_of([&] {
            engine.invoke(net_svc, ServiceDoc{}, net.artifacts[0].budget);
          }) == ErrorCode::SandboxViolation);

    // With network allowed the same binary runs to completion.
    model::ResourceBudget open = net.artifacts[0].budget;
    open.network_allowed = true;
    ServiceDoc out = engine.invoke(net_svc, ServiceDoc{}, open);
    CHECK(std::get<bool>(out.fields.at("net")) == true);
  }
}

TEST_CASE("engine: budgets terminate runaway services") {
  testsupport::TempDir work("engine-budget");
  ServiceEngine engine(EngineConfig{work.str()});

  // A sleeper burning wall time dies within budget + 0.5 s.
  model::AasPackage sleeper =
      exe_package(testsupport::sleeper_source, "sleeper_t", empty_in_bool_out());
  LoadedService sleeper_svc = engine.load(sleeper.artifacts[0], sleeper);
  model::ResourceBudget tight;
  tight.cpu_time_s = 5;
  tight.wall_time_s = 0.5;
  auto t0 = std::chrono::steady_clock::now();
  try {
    engine.invoke(sleeper_svc, ServiceDoc{}, tight);
    FAIL("expected ResourceExceeded");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ResourceExceeded);
    CHECK(e.detail().find("wall") != std::string::npos);
  }
  double elapsed = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - t0).count();
  CHECK(elapsed < 1.0);  // 0.5 s budget + 0.5 s termination latency

  // An infinite loop trips the cpu rlimit.
  model::AasPackage spinner =
      exe_package(testsupport::spinner_source, "spinner_t", empty_in_bool_out());
  LoadedService spinner_svc = engine.load(spinner.artifacts[0], spinner);
  model::ResourceBudget cpu_budget;
  cpu_budget.cpu_time_s = 1;
  cpu_budget.wall_time_s = 10;
  t0 = std::chrono::steady_clock::now();
  try {
    engine.invoke(spinner_svc, ServiceDoc{}, cpu_budget);
    FAIL("expected ResourceExceeded");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ResourceExceeded);
    CHECK(e.detail().find("cpu") != std::string::npos);
  }
  elapsed = std::chrono::duration<double>(
                std::chrono::steady_clock::now() - t0).count();
  CHECK(elapsed < 1.5);  // 1 s cpu budget + 0.5 s latency
}

TEST_CASE("engine: source bundles translate, cache, and surface build logs") {
  fixtures::FixtureOptions opts;
  model::AasPackage pkg = fixtures::make_level_package(4, opts);
  testsupport::TempDir work("engine-bundle");
  ServiceEngine engine(EngineConfig{work.str()});
  const model::ServiceArtifact& avg = pkg.artifacts[0];

  CHECK_FALSE(engine.has_cached_build(avg, pkg));
  LoadedService svc = engine.load(avg, pkg);
  CHECK(engine.has_cached_build(avg, pkg));

  ServiceDoc input;
  input.fields["samples"] = std::vector<double>{20, 25, 20, 15};
  ServiceDoc out = engine.invoke(svc, input, avg.budget);
  CHECK(std::get<double>(out.fields.at("avg")) == 20.0);

  // Loading again reuses the cache (no rebuild: same product path).
  LoadedService again = engine.load(avg, pkg);
  CHECK(std::get<std::string>(again.impl) == std::get<std::string>(svc.impl));

  // A bundle with a syntax error reports the translator log.
  model::AasPackage broken = pkg;
  std::string entry = broken.artifacts[0].entrypoint;
  broken.artifact_files[entry] = "int main( { this does not compile\n";
  model::refresh_checksums(broken);
  try {
    engine.load(broken.artifacts[0], broken);
    FAIL("expected BuildError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BuildError);
    CHECK(e.detail().find("error") != std::string::npos);
  }
}

TEST_CASE("engine: explode_to_stream broadcasting") {
  ServiceDoc input;
  input.fields["samples"] = std::vector<double>{1, 2, 3};
  input.fields["scale"] = 2.0;
  auto stream = explode_to_stream(input);
  REQUIRE(stream.size() == 3);
  CHECK(std::get<double>(stream[1].fields.at("samples")) == 2.0);
  CHECK(std::get<double>(stream[1].fields.at("scale")) == 2.0);
  CHECK(stream[2].ts == 2.0);

  ServiceDoc ragged;
  ragged.fields["a"] = std::vector<double>{1, 2};
  ragged.fields["b"] = std::vector<double>{1, 2, 3};
  CHECK(code_of([&] { explode_to_stream(ragged); }) == ErrorCode::SchemaMismatch);
}
