#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <httplib.h>
#include <json.hpp>

#include <algorithm>

#include "shellforge/fixtures/fixtures.hpp"
#include "shellforge/model/package_io.hpp"
#include "shellforge/pack/packager.hpp"
#include "shellforge/server/repository.hpp"
#include "shellforge/util/codec.hpp"
#include "shellforge/util/error.hpp"
#include "support.hpp"

using namespace shellforge;
using classify::RuntimeStrategy;
using nlohmann::json;

namespace {

bool contains(const std::vector<std::string>& v, const std::string& x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

model::AasPackage level_pkg(int level) {
  fixtures::FixtureOptions opts;
  opts.build_dir = testsupport::shared_build_dir();
  return fixtures::make_level_package(level, opts);
}

}  // namespace

TEST_CASE("features_of: passive offers nothing; levels gate the rest") {
  for (int level = 0; level <= 5; ++level) {
    CHECK(pack::features_of(level_pkg(level), RuntimeStrategy::Passive).empty());
  }
  CHECK(pack::features_of(level_pkg(0), RuntimeStrategy::ServerHosted).empty());
  auto lvl2 = pack::features_of(level_pkg(2), RuntimeStrategy::ServerHosted);
  CHECK(contains(lvl2, "api"));
  CHECK(contains(lvl2, "sync"));
  CHECK_FALSE(contains(lvl2, "service_engine"));
  auto lvl4 = pack::features_of(level_pkg(4), RuntimeStrategy::ServerHosted);
  CHECK(contains(lvl4, "service_engine"));
  CHECK(contains(lvl4, "build_cache"));
}

TEST_CASE("conversion_report: retained and dropped partition the source set") {
  for (int level = 0; level <= 5; ++level) {
    model::AasPackage pkg = level_pkg(level);
    for (auto from : {RuntimeStrategy::Passive, RuntimeStrategy::ServerHosted,
                      RuntimeStrategy::Standalone}) {
      for (auto to : {RuntimeStrategy::Passive, RuntimeStrategy::ServerHosted,
                      RuntimeStrategy::Standalone}) {
        auto report = pack::conversion_report(from, to, pkg);
        std::set<std::string> source;
        for (const auto& f : pack::features_of(pkg, from)) source.insert(f);
        std::set<std::string> seen;
        for (const auto& f : report.retained) CHECK(seen.insert(f).second);
        for (const auto& f : report.dropped) CHECK(seen.insert(f).second);
        CHECK(seen == source);
      }
    }
  }
}

TEST_CASE("conversion_report: the contract's anchor cases") {
  // Leaving a standalone runtime loses service execution for a level 5 shell.
  auto report = pack::conversion_report(RuntimeStrategy::Standalone,
                                        RuntimeStrategy::Passive, level_pkg(5));
  CHECK(contains(report.dropped, "service_engine"));
  CHECK(contains(report.dropped, "api"));

  // Level 0 between passive and server loses nothing and warns about nothing.
  report = pack::conversion_report(RuntimeStrategy::Passive,
                                   RuntimeStrategy::ServerHosted, level_pkg(0));
  CHECK(report.dropped.empty());
  CHECK(report.warnings.empty());

  // Moving a level 2 shell to another host keeps features but warns that
  // endpoint addresses are system-specific.
  report = pack::conversion_report(RuntimeStrategy::ServerHosted,
                                   RuntimeStrategy::ServerHosted, level_pkg(2));
  CHECK(report.dropped.empty());
  REQUIRE(!report.warnings.empty());
  CHECK(report.warnings[0].find("system-specific") != std::string::npos);

  // Custom standalone features always drop on the way out.
  report = pack::conversion_report(RuntimeStrategy::Standalone,
                                   RuntimeStrategy::ServerHosted, level_pkg(5),
                                   {"custom:cnc_optimizer"});
  CHECK(contains(report.dropped, "custom:cnc_optimizer"));
}

TEST_CASE("export report: live runtime state shows up as dropped") {
  testsupport::TempDir dir("export");
  fixtures::FixtureOptions opts;
  opts.build_dir = testsupport::shared_build_dir();
  fixtures::write_level_fixtures(dir.str(), opts);
  server::RepoConfig cfg;
  cfg.package_dir = dir.str();
  cfg.work_dir = dir.str() + "/.work";
  server::Repository repo(cfg);
  repo.load_directory();

  // Two live subscriptions on the level 4 shell.
  repo.events().add_subscription("http://127.0.0.1:1/hook",
                                 server::SubscriptionFilter{"urn:avg4", {}});
  repo.events().add_subscription("http://127.0.0.1:1/hook2",
                                 server::SubscriptionFilter{"urn:avg4", {}});

  pack::ConversionReport report;
  std::string bytes = repo.export_package("urn:avg4", &report);
  CHECK(model::parse_package(bytes).shells[0].id.value == "urn:avg4");
  CHECK(contains(report.dropped, "subscriptions(2)"));
  CHECK(contains(report.dropped, "service_engine"));
  // No build has happened yet, so no cache warning...
  CHECK_FALSE(contains(report.warnings, "build cache discarded; rebuild required"));
  // ...but after one invoke the cache exists and export warns about it.
  repo.invoke("urn:avg4", "SoftwareServices.AvgTemp",
              json{{"samples", {20.0, 25.0}}});
  repo.export_package("urn:avg4", &report);
  CHECK(contains(report.warnings, "build cache discarded; rebuild required"));

  // A level 0 shell drops nothing.
  repo.export_package("urn:pump1", &report);
  CHECK(report.dropped.empty());
}

TEST_CASE("export: model values at quiescence survive the round trip") {
  testsupport::TempDir dir("quiesce");
  fixtures::FixtureOptions opts;
  fixtures::write_level_fixtures(dir.str(), opts);
  server::RepoConfig cfg;
  cfg.package_dir = dir.str();
  server::Repository repo(cfg);
  repo.load_directory();

  repo.patch_value("urn:pump2", "Telemetry.temp", json(31.25));
  std::string bytes = repo.export_package("urn:pump2");
  model::AasPackage round = model::parse_package(bytes);
  const auto& e = model::resolve_element(round, model::Identifier{"urn:pump2"},
                                         "Telemetry.temp");
  CHECK(std::get<double>(std::get<model::Property>(e).value) == 31.25);
  // Canonical: exporting twice yields identical bytes.
  CHECK(repo.export_package("urn:pump2") == bytes);
}

TEST_CASE("require_runtime: passive contexts refuse execution features") {
  auto code_of = [](const char* feature) {
    try {
      pack::require_runtime(RuntimeStrategy::Passive, feature);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::IoError;
  };
  CHECK(code_of("service_engine") == ErrorCode::NotExecutableInPassiveRuntime);
  CHECK(code_of("api") == ErrorCode::NotExecutableInPassiveRuntime);
  CHECK(code_of("eventing") == ErrorCode::NotExecutableInPassiveRuntime);
  CHECK(code_of("sync") == ErrorCode::StrategyForbidsSync);
  CHECK_NOTHROW(pack::require_runtime(RuntimeStrategy::ServerHosted, "api"));
}

TEST_CASE("build_standalone: layout, gates, and warnings") {
  testsupport::TempDir dir("bundle");
  model::AasPackage pkg = level_pkg(3);

  pack::StandaloneConfig cfg;
  cfg.target_dir = dir.str() + "/b1";
  auto report = pack::build_standalone(pkg, cfg);
  CHECK(std::filesystem::exists(dir.path() / "b1" / "launch.json"));
  CHECK(std::filesystem::exists(dir.path() / "b1" / "package.aaspkg"));
  CHECK(std::filesystem::exists(dir.path() / "b1" / "README.md"));
  CHECK(std::filesystem::exists(dir.path() / "b1" / "shellforge"));
  CHECK(contains(report.retained, "service_engine"));
  // The embedded package is the canonical serialization.
  CHECK(testsupport::read_file(dir.path() / "b1" / "package.aaspkg") ==
        model::serialize_package(pkg));

  // service_engine without api is inconsistent.
  pack::StandaloneConfig bad;
  bad.target_dir = dir.str() + "/b2";
  bad.features = {"service_engine"};
  bool threw = false;
  try {
    pack::build_standalone(pkg, bad);
  } catch (const Error& e) {
    threw = e.code() == ErrorCode::FeatureUnavailable;
  }
  CHECK(threw);

  // Level 0 with an engine requested is allowed but called out.
  pack::StandaloneConfig idle;
  idle.target_dir = dir.str() + "/b3";
  report = pack::build_standalone(level_pkg(0), idle);
  CHECK(contains(report.warnings, "no artifacts; engine idle"));

  // Restricting features drops them in the report.
  pack::StandaloneConfig api_only;
  api_only.target_dir = dir.str() + "/b4";
  api_only.features = {"api"};
  report = pack::build_standalone(pkg, api_only);
  CHECK(contains(report.dropped, "service_engine"));
  CHECK(contains(report.retained, "api"));
}

TEST_CASE("bundle: launched bundle answers like the repository") {
  testsupport::TempDir dir("bundle-run");
  fixtures::FixtureOptions opts;
  opts.build_dir = testsupport::shared_build_dir();
  fixtures::write_level_fixtures(dir.str(), opts);

  // Server-hosted reference.
  server::RepoConfig cfg;
  cfg.package_dir = dir.str();
  cfg.work_dir = dir.str() + "/.work";
  server::Repository repo(cfg);
  repo.load_directory();
  repo.start();

  model::AasPackage pkg = level_pkg(3);
  pack::StandaloneConfig bundle_cfg;
  bundle_cfg.target_dir = dir.str() + "/bundle";
  bundle_cfg.runtime_binary = SHELLFORGE_BIN;  // tests embed the real CLI
  pack::build_standalone(pkg, bundle_cfg);

  testsupport::BackgroundProcess bundle(
      {dir.str() + "/bundle/shellforge", "serve", "--bundle",
       dir.str() + "/bundle"});
  REQUIRE(bundle.started());
  std::string line = bundle.wait_for_line("listening on http://127.0.0.1:");
  REQUIRE(!line.empty());
  int bundle_port = std::stoi(line.substr(line.rfind(':') + 1));

  httplib::Client hosted("127.0.0.1", repo.port());
  httplib::Client standalone("127.0.0.1", bundle_port);
  hosted.set_read_timeout(30, 0);
  standalone.set_read_timeout(30, 0);

  auto strip_ts = [](json j) {
    if (j.is_object()) j.erase("ts");
    return j;
  };
  std::string value_route = "/shells/" + util::base64url_encode("urn:avg3") +
                            "/elements/Telemetry.temp/value";
  auto a = hosted.Get(value_route);
  auto b = standalone.Get(value_route);
  REQUIRE(a);
  REQUIRE(b);
  CHECK(a->status == b->status);
  CHECK(strip_ts(json::parse(a->body)) == strip_ts(json::parse(b->body)));

  json body{{"inputs", {{"samples", {20.0, 25.0, 20.0, 15.0}}}}};
  std::string invoke_route = "/shells/" + util::base64url_encode("urn:avg3") +
                             "/elements/SoftwareServices.AvgTemp/invoke";
  auto ia = hosted.Post(invoke_route, body.dump(), "application/json");
  auto ib = standalone.Post(invoke_route, body.dump(), "application/json");
  REQUIRE(ia);
  REQUIRE(ib);
  CHECK(ia->status == 200);
  CHECK(json::parse(ia->body) == json::parse(ib->body));

  repo.stop();
}
