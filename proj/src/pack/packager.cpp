#include "shellforge/pack/packager.hpp"

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "shellforge/model/package_io.hpp"
#include "shellforge/util/error.hpp"

namespace shellforge::pack {

namespace fs = std::filesystem;
using nlohmann::json;
using classify::RuntimeStrategy;

std::string ConversionReport::to_json_text() const {
  json j;
  j["from"] = classify::runtime_strategy_name(from);
  j["to"] = classify::runtime_strategy_name(to);
  j["retained"] = retained;
  j["dropped"] = dropped;
  j["warnings"] = warnings;
  return j.dump();
}

std::string ConversionReport::to_text() const {
  std::string out;
  out += "conversion: " + std::string(classify::runtime_strategy_name(from)) +
         " -> " + std::string(classify::runtime_strategy_name(to)) + "\n";
  auto list = [&](const char* label, const std::vector<std::string>& items) {
    out += std::string(label) + ":";
    if (items.empty()) out += " (none)";
    for (const auto& i : items) out += " " + i;
    out += "\n";
  };
  list("retained", retained);
  list("dropped", dropped);
  list("warnings", warnings);
  return out;
}

std::vector<std::string> features_of(const model::AasPackage& pkg,
                                     RuntimeStrategy strategy) {
  if (strategy == RuntimeStrategy::Passive) return {};
  std::set<std::string> fs;
  // A static level-0 model exercises no runtime feature, so a strategy
  // change loses nothing for it.
  if (classify::classify_level(pkg).value >= 1) {
    fs.insert("api");
    fs.insert("eventing");
  }
  if (!pkg.artifacts.empty()) fs.insert("service_engine");
  bool any_bundle =
      std::any_of(pkg.artifacts.begin(), pkg.artifacts.end(), [](const auto& a) {
        return a.kind == model::ArtifactKind::SourceBundle;
      });
  if (any_bundle) fs.insert("build_cache");
  if (pkg.sync_config && !pkg.endpoints.empty() &&
      (pkg.sync_config->inbound == model::FlowMode::Automatic ||
       pkg.sync_config->outbound == model::FlowMode::Automatic)) {
    fs.insert("sync");
  }
  return {fs.begin(), fs.end()};
}

ConversionReport conversion_report(
    RuntimeStrategy from, RuntimeStrategy to, const model::AasPackage& pkg,
    const std::vector<std::string>& extra_from_features) {
  ConversionReport report;
  report.from = from;
  report.to = to;

  std::set<std::string> source;
  for (const auto& f : features_of(pkg, from)) source.insert(f);
  for (const auto& f : extra_from_features) source.insert(f);
  std::set<std::string> target;
  for (const auto& f : features_of(pkg, to)) target.insert(f);

  for (const auto& f : source) {
    if (target.count(f)) report.retained.push_back(f);
    else report.dropped.push_back(f);
  }
  if (!pkg.endpoints.empty()) {
    report.warnings.push_back(
        "endpoint host names are system-specific; re-parameterize after transfer");
  }
  return report;
}

namespace {

void write_text(const fs::path& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::IoError, "cannot write " + path.string());
  }
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
}

constexpr std::string_view bundle_readme =
    "Standalone shellforge bundle.\n"
    "\n"
    "Contents: launch.json (features and port), package.aaspkg (the shell),\n"
    "and a copy of the shellforge runtime.\n"
    "\n"
    "Run it with:\n"
    "\n"
    "    ./shellforge serve --bundle .\n"
    "\n"
    "The bundle serves the same HTTP surface as a server-hosted deployment\n"
    "of this single package.\n";

}  // namespace

ConversionReport build_standalone(const model::AasPackage& pkg,
                                  const StandaloneConfig& cfg,
                                  const engine::ServiceEngine* build_cache) {
  std::set<std::string> requested(cfg.features.begin(), cfg.features.end());
  if (requested.empty()) {
    throw Error(ErrorCode::FeatureUnavailable, "feature set must be non-empty");
  }
  for (const auto& f : requested) {
    if (f != "api" && f != "sync" && f != "service_engine" && f != "eventing") {
      throw Error(ErrorCode::FeatureUnavailable, "unknown feature '" + f + "'");
    }
  }
  if (requested.count("service_engine") && !requested.count("api")) {
    throw Error(ErrorCode::FeatureUnavailable,
                "invoke requires api: add 'api' or drop 'service_engine'");
  }

  ConversionReport report;
  report.from = RuntimeStrategy::ServerHosted;
  report.to = RuntimeStrategy::Standalone;
  std::vector<std::string> source = features_of(pkg, RuntimeStrategy::ServerHosted);
  for (const auto& f : source) {
    bool gated = f == "api" || f == "sync" || f == "service_engine" ||
                 f == "eventing";
    if (gated && !requested.count(f)) report.dropped.push_back(f);
    else report.retained.push_back(f);
  }
  if (requested.count("service_engine") && pkg.artifacts.empty()) {
    report.warnings.push_back("no artifacts; engine idle");
  }
  if (requested.count("sync") && !pkg.sync_config) {
    report.warnings.push_back("no sync config; sync idle");
  }
  if (!pkg.endpoints.empty()) {
    report.warnings.push_back(
        "endpoint host names are system-specific; re-parameterize after transfer");
  }

  fs::path dir(cfg.target_dir);
  fs::create_directories(dir);
  write_text(dir / "package.aaspkg", model::serialize_package(pkg));
  json launch;
  launch["features"] = json::array();
  for (const auto& f : requested) launch["features"].push_back(f);
  launch["port"] = 0;
  write_text(dir / "launch.json", launch.dump(2) + "\n");
  write_text(dir / "README.md", bundle_readme);

  std::error_code ec;
  fs::copy_file(cfg.runtime_binary.empty() ? "/proc/self/exe"
                                           : cfg.runtime_binary,
                dir / "shellforge", fs::copy_options::overwrite_existing, ec);
  if (ec) {
    report.warnings.push_back("runtime binary not embedded: " + ec.message());
  } else {
    fs::permissions(dir / "shellforge",
                    fs::perms::owner_all | fs::perms::group_read |
                        fs::perms::group_exec | fs::perms::others_read |
                        fs::perms::others_exec);
  }

  bool has_bundles =
      std::any_of(pkg.artifacts.begin(), pkg.artifacts.end(), [](const auto& a) {
        return a.kind == model::ArtifactKind::SourceBundle;
      });
  if (has_bundles && cfg.include_build_cache && build_cache) {
    // The cache is content-addressed, so copying staged products wholesale
    // stays correct for the bundle runtime.
    fs::path src = fs::path(build_cache->work_dir()) / "bin";
    size_t copied = 0;
    if (fs::exists(src)) {
      fs::create_directories(dir / "cache" / "bin");
      for (const auto& entry : fs::directory_iterator(src)) {
        fs::copy_file(entry.path(),
                      dir / "cache" / "bin" / entry.path().filename(),
                      fs::copy_options::overwrite_existing, ec);
        if (!ec) ++copied;
      }
    }
    if (copied == 0) {
      report.warnings.push_back(
          "build cache requested but empty; first invoke rebuilds");
    }
  } else if (has_bundles) {
    report.warnings.push_back("build cache discarded; rebuild required");
  }
  return report;
}

void require_runtime(RuntimeStrategy strategy, std::string_view feature) {
  if (strategy != RuntimeStrategy::Passive) return;
  if (feature == "sync") {
    throw Error(ErrorCode::StrategyForbidsSync,
                "a passive runtime cannot run sync loops");
  }
  throw Error(ErrorCode::NotExecutableInPassiveRuntime,
              "feature '" + std::string(feature) +
                  "' needs a runtime environment; the package is only a "
                  "knowledge store here");
}

}  // namespace shellforge::pack
