#include "shellforge/classify/classify.hpp"

#include "shellforge/util/error.hpp"

namespace shellforge::classify {

using model::ArtifactKind;
using model::FlowMode;

std::string_view runtime_strategy_name(RuntimeStrategy s) {
  switch (s) {
    case RuntimeStrategy::Passive: return "passive";
    case RuntimeStrategy::ServerHosted: return "server_hosted";
    case RuntimeStrategy::Standalone: return "standalone";
  }
  return "passive";
}

RuntimeStrategy runtime_strategy_from_name(std::string_view name) {
  if (name == "passive") return RuntimeStrategy::Passive;
  if (name == "server_hosted") return RuntimeStrategy::ServerHosted;
  if (name == "standalone") return RuntimeStrategy::Standalone;
  throw Error(ErrorCode::SchemaViolation,
              "unknown runtime strategy: " + std::string(name));
}

std::string_view data_flow_class_name(DataFlowClass c) {
  switch (c) {
    case DataFlowClass::DigitalModel: return "digital_model";
    case DataFlowClass::DigitalShadow: return "digital_shadow";
    case DataFlowClass::DigitalTwin: return "digital_twin";
  }
  return "digital_model";
}

std::string_view logic_form_name(LogicForm f) {
  switch (f) {
    case LogicForm::None: return "none";
    case LogicForm::Interpreted: return "interpreted";
    case LogicForm::Translated: return "translated";
    case LogicForm::Executable: return "executable";
  }
  return "none";
}

std::string_view quality_rating_name(QualityRating r) {
  switch (r) {
    case QualityRating::WithoutHesitation: return "without_hesitation";
    case QualityRating::PartlyConsider: return "partly_consider";
    case QualityRating::StronglyConsider: return "strongly_consider";
  }
  return "without_hesitation";
}

HeavinessLevel classify_level(const model::AasPackage& pkg) {
  bool any_executable = false, any_source = false, any_pipeline = false;
  for (const auto& a : pkg.artifacts) {
    switch (a.kind) {
      case ArtifactKind::Executable: any_executable = true; break;
      case ArtifactKind::SourceBundle: any_source = true; break;
      case ArtifactKind::PipelineScript: any_pipeline = true; break;
    }
  }
  if (any_executable) return {5};
  if (any_source) return {4};
  if (any_pipeline) return {3};
  for (const auto& e : pkg.endpoints) {
    if (e.parameterized) return {2};
  }
  if (!pkg.endpoints.empty()) return {1};
  return {0};
}

CapabilityVector capability_matrix(HeavinessLevel level) {
  CapabilityVector v;
  int k = level.value;
  v.needs_runtime = k >= 1;
  v.api_access = k >= 1;
  v.parameterized_requests = k >= 2;
  v.embedded_logic = k >= 3;
  switch (k) {
    case 3: v.logic_form = LogicForm::Interpreted; break;
    case 4: v.logic_form = LogicForm::Translated; break;
    case 5: v.logic_form = LogicForm::Executable; break;
    default: v.logic_form = LogicForm::None; break;
  }
  return v;
}

DataFlowClass classify_data_flow(const model::SyncConfig& sync,
                                 RuntimeStrategy strategy) {
  if (strategy == RuntimeStrategy::Passive) {
    return DataFlowClass::DigitalModel;
  }
  bool in_auto = sync.inbound == FlowMode::Automatic;
  bool out_auto = sync.outbound == FlowMode::Automatic;
  if (!in_auto && !out_auto) return DataFlowClass::DigitalModel;
  if (in_auto && !out_auto) return DataFlowClass::DigitalShadow;
  if (in_auto && out_auto) return DataFlowClass::DigitalTwin;
  throw Error(ErrorCode::UnclassifiedFlow,
              "manual inbound with automatic outbound has no class");
}

namespace {
constexpr QualityRating G = QualityRating::WithoutHesitation;
constexpr QualityRating O = QualityRating::PartlyConsider;
constexpr QualityRating R = QualityRating::StronglyConsider;
}  // namespace

std::array<QualityRow, 6> full_quality_table() {
  // Columns Lvl 0..5 of the ISO/IEC 25000 assessment matrix.
  return {{
      /* 0 */ {G, G, G, G, G, G},
      /* 1 */ {G, O, O, O, G, R},
      /* 2 */ {O, O, O, O, G, R},
      /* 3 */ {R, R, R, R, O, O},
      /* 4 */ {R, R, R, R, O, O},
      /* 5 */ {R, R, R, R, R, G},
  }};
}

QualityRow assess_quality(HeavinessLevel level) {
  return full_quality_table()[static_cast<size_t>(level.value)];
}

std::vector<Recommendation> recommend_level(const UseCaseProfile& p) {
  std::vector<Recommendation> out;
  auto push = [&](int level, std::string rule_id, std::string rationale) {
    for (const auto& r : out) {
      if (r.level.value == level) return;  // keep first (highest priority)
    }
    out.push_back({HeavinessLevel{level}, std::move(rule_id), std::move(rationale)});
  };

  // Embedded logic (levels 3-5) only makes sense when the provider does not
  // need the raw data and no cross-source consolidation is required; with
  // either need, a single parameterized interface (level 2) scales instead.
  bool embedded_applicable = !p.consolidation_needed && !p.provider_needs_raw_data;

  if (!embedded_applicable) {
    push(2, "R-SINGLE-INTERFACE",
         "parameterized requests let a single interface serve the fleet and "
         "keep raw data accessible for consolidation");
  } else {
    switch (p.deployment_target) {
      case DeploymentTarget::CustomerSide:
        if (p.code_visibility == CodeVisibility::BlackBoxOk) {
          push(5, "R-CUSTOMER-L5",
               "customer-side deployment favors a bundled executable with "
               "its dependencies included");
        } else {
          push(p.task_complexity == TaskComplexity::Complex ? 4 : 3,
               "R-WHITEBOX",
               "white-box requirement keeps source accessible for "
               "transparency, debugging, and modification");
        }
        break;
      case DeploymentTarget::ProviderInternal:
        push(p.task_complexity == TaskComplexity::Complex ? 4 : 3,
             "R-INTERNAL-SOURCE",
             "internal use prefers accessible source; scripts suit simple "
             "calculations, full services suit complex tasks");
        push(p.task_complexity == TaskComplexity::Complex ? 3 : 4,
             "R-INTERNAL-SOURCE-ALT",
             "the sibling white-box form remains a maintainable fallback");
        break;
      case DeploymentTarget::Research:
        push(4, "R-RESEARCH-L4",
             "runtime code injection and dynamic adaptation suit research "
             "and testing");
        break;
    }
  }

  if (p.fleet_size == FleetSize::Many) {
    push(2, "R-FLEET-SCALE",
         "per-shell fixed endpoints scale poorly; one parameterized "
         "interface keeps effort low across many shells");
  } else {
    push(1, "R-SINGLE-ASSET",
         "a fixed per-variable endpoint is enough for a single asset");
  }

  push(0, "R-KNOWLEDGE-STORE",
       "a static model remains usable everywhere as a knowledge store");
  return out;
}

std::vector<model::Violation> validate_declared_level(
    const model::AasPackage& pkg) {
  std::vector<model::Violation> out;
  if (pkg.manifest.declared_level) {
    int actual = classify_level(pkg).value;
    if (*pkg.manifest.declared_level != actual) {
      out.push_back(model::Violation{
          "manifest.declaredLevel", "DECLARED_LEVEL_MATCHES",
          "declared level " + std::to_string(*pkg.manifest.declared_level) +
              " but classifier says " + std::to_string(actual)});
    }
  }
  return out;
}

}  // namespace shellforge::classify
