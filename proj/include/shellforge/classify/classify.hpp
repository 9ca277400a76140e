#pragma once

#include <array>
#include <string>
#include <vector>

#include "shellforge/model/model.hpp"
#include "shellforge/model/validate.hpp"

namespace shellforge::classify {

// Software-heaviness ladder, level 0 (pure model) to level 5 (embedded
// executable service).
struct HeavinessLevel {
  int value = 0;
  auto operator<=>(const HeavinessLevel&) const = default;
};

enum class RuntimeStrategy { Passive, ServerHosted, Standalone };

std::string_view runtime_strategy_name(RuntimeStrategy s);
RuntimeStrategy runtime_strategy_from_name(std::string_view name);

enum class DataFlowClass { DigitalModel, DigitalShadow, DigitalTwin };

std::string_view data_flow_class_name(DataFlowClass c);

enum class LogicForm { None, Interpreted, Translated, Executable };

std::string_view logic_form_name(LogicForm f);

struct CapabilityVector {
  bool needs_runtime = false;
  bool api_access = false;
  bool parameterized_requests = false;
  bool embedded_logic = false;
  LogicForm logic_form = LogicForm::None;
  bool operator==(const CapabilityVector&) const = default;
};

enum class QualityRating { WithoutHesitation, PartlyConsider, StronglyConsider };

std::string_view quality_rating_name(QualityRating r);

struct QualityRow {
  QualityRating reliability;
  QualityRating usability;
  QualityRating performance;
  QualityRating security;
  QualityRating supportability;
  QualityRating transferability;
  bool operator==(const QualityRow&) const = default;
};

enum class DeploymentTarget { CustomerSide, ProviderInternal, Research };
enum class CodeVisibility { WhiteBoxRequired, BlackBoxOk };
enum class TaskComplexity { Simple, Complex };
enum class FleetSize { Single, Many };

struct UseCaseProfile {
  DeploymentTarget deployment_target = DeploymentTarget::CustomerSide;
  CodeVisibility code_visibility = CodeVisibility::BlackBoxOk;
  TaskComplexity task_complexity = TaskComplexity::Simple;
  FleetSize fleet_size = FleetSize::Single;
  bool consolidation_needed = false;
  bool provider_needs_raw_data = false;
};

struct Recommendation {
  HeavinessLevel level;
  std::string rule_id;    // row of the rule table that fired
  std::string rationale;  // human-readable citation string
};

// Highest applicable level: 5 executable > 4 source bundle > 3 pipeline
// script > 2 parameterized endpoint > 1 any endpoint > 0.
HeavinessLevel classify_level(const model::AasPackage& pkg);

CapabilityVector capability_matrix(HeavinessLevel level);

// Kritzinger's classes from the sync directions. A passive runtime is always
// a digital model. (manual inbound, automatic outbound) has no class in the
// source taxonomy and surfaces as Error{UnclassifiedFlow}.
DataFlowClass classify_data_flow(const model::SyncConfig& sync,
                                 RuntimeStrategy strategy);

// One column of the ISO/IEC 25000 assessment matrix.
QualityRow assess_quality(HeavinessLevel level);

std::array<QualityRow, 6> full_quality_table();

// Ordered rule table compiled from the use-case guidance. Deterministic:
// identical profiles yield identical ranked lists.
std::vector<Recommendation> recommend_level(const UseCaseProfile& profile);

// Manifest declared_level must equal the classifier's result
// (rule DECLARED_LEVEL_MATCHES). Lives here to keep model-core free of a
// dependency on the classifier.
std::vector<model::Violation> validate_declared_level(const model::AasPackage& pkg);

}  // namespace shellforge::classify
