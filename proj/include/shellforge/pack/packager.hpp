#pragma once

#include <string>
#include <vector>

#include "shellforge/classify/classify.hpp"
#include "shellforge/engine/engine.hpp"
#include "shellforge/model/model.hpp"

namespace shellforge::pack {

// Runtime feature taxonomy used by the functionality-loss reports:
// "api", "sync", "service_engine", "eventing", "build_cache", plus runtime
// state entries like "subscriptions(2)" and bundle-specific "custom:<name>".
struct ConversionReport {
  classify::RuntimeStrategy from = classify::RuntimeStrategy::Passive;
  classify::RuntimeStrategy to = classify::RuntimeStrategy::Passive;
  std::vector<std::string> retained;
  std::vector<std::string> dropped;
  std::vector<std::string> warnings;

  std::string to_json_text() const;
  std::string to_text() const;
};

// Features a package can offer under a strategy. Passive offers none.
std::vector<std::string> features_of(const model::AasPackage& pkg,
                                     classify::RuntimeStrategy strategy);

// Dry-run analysis of a strategy transition; no side effects.
// extra_from_features carries runtime state of the source (live
// subscriptions, standalone custom features) that a plain package cannot
// know about.
ConversionReport conversion_report(
    classify::RuntimeStrategy from, classify::RuntimeStrategy to,
    const model::AasPackage& pkg,
    const std::vector<std::string>& extra_from_features = {});

struct StandaloneConfig {
  std::string target_dir;
  bool include_build_cache = false;
  std::vector<std::string> features = {"api", "sync", "service_engine",
                                       "eventing"};
  // Runtime binary to embed; empty means the running executable.
  std::string runtime_binary;
};

// Builds a self-contained bundle: launch.json, the canonical package, a
// README, and a copy of the running shellforge binary. The bundle serves the
// same HTTP surface for its single package via `serve --bundle <dir>`.
// Throws Error{FeatureUnavailable} when the feature set is inconsistent
// (service_engine requires api).
ConversionReport build_standalone(const model::AasPackage& pkg,
                                  const StandaloneConfig& cfg,
                                  const engine::ServiceEngine* build_cache = nullptr);

// Guard shared by the CLI's passive context and the report-soundness tests:
// exercising an execution feature under the passive strategy fails with
// NotExecutableInPassiveRuntime (StrategyForbidsSync for "sync").
void require_runtime(classify::RuntimeStrategy strategy,
                     std::string_view feature);

}  // namespace shellforge::pack
