#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "shellforge/classify/classify.hpp"
#include "shellforge/fixtures/fixtures.hpp"
#include "shellforge/model/package_io.hpp"
#include "shellforge/util/error.hpp"
#include "support.hpp"

using namespace shellforge;
using namespace shellforge::classify;
using model::AasPackage;
using model::FlowMode;

namespace {

constexpr QualityRating G = QualityRating::WithoutHesitation;
constexpr QualityRating O = QualityRating::PartlyConsider;
constexpr QualityRating R = QualityRating::StronglyConsider;

AasPackage level_pkg(int level) {
  fixtures::FixtureOptions opts;
  opts.build_dir = testsupport::shared_build_dir();
  return fixtures::make_level_package(level, opts);
}

// Adds one artifact of the given kind, keeping the package valid.
void augment(AasPackage& pkg, model::ArtifactKind kind, int salt) {
  model::ServiceArtifact a;
  a.name = "aug" + std::to_string(salt);
  a.kind = kind;
  a.io.outputs["out"] = model::IoType::Double;
  std::string payload;
  switch (kind) {
    case model::ArtifactKind::PipelineScript:
      a.entrypoint = "artifacts/" + a.name + ".pipeline.json";
      payload = R"({"steps":[{"op":"mean"}]})";
      break;
    case model::ArtifactKind::SourceBundle:
      a.entrypoint = "artifacts/" + a.name + "/main.cpp";
      payload = "int main(){return 0;}\n";
      break;
    case model::ArtifactKind::Executable:
      a.entrypoint = "artifacts/" + a.name + ".exe.bin";
      payload = "\x7f" "ELF fake payload";
      break;
  }
  model::Submodel* services = nullptr;
  for (auto& sm : pkg.submodels) {
    if (sm.id_short == "SoftwareServices") services = &sm;
  }
  if (!services) {
    model::Submodel sm;
    sm.id.value = "urn:sm:aug:" + std::to_string(salt);
    sm.id_short = "SoftwareServices";
    pkg.submodels.push_back(sm);
    for (auto& shell : pkg.shells) shell.submodel_refs.push_back(sm.id);
    services = &pkg.submodels.back();
  }
  services->elements.push_back(
      model::FileElement{a.name, "application/octet-stream", a.entrypoint});
  // The augmented package classifies differently, so drop the declaration.
  pkg.manifest.declared_level.reset();
  model::attach_artifact(pkg, a, {{a.entrypoint, payload}});
}

}  // namespace

TEST_CASE("classify_level: the six fixtures land on their levels") {
  for (int level = 0; level <= 5; ++level) {
    AasPackage pkg = level_pkg(level);
    CHECK(classify_level(pkg).value == level);
    CHECK(model::validate(pkg).empty());
    CHECK(validate_declared_level(pkg).empty());
  }
}

TEST_CASE("classify_level: max rule over artifact kinds") {
  AasPackage pkg = level_pkg(3);  // pipeline only
  augment(pkg, model::ArtifactKind::Executable, 1);
  CHECK(classify_level(pkg).value == 5);  // pipeline AND executable
  AasPackage pkg2 = level_pkg(3);
  augment(pkg2, model::ArtifactKind::SourceBundle, 2);
  CHECK(classify_level(pkg2).value == 4);
}

TEST_CASE("classify_level: monotone under augmentation (randomized)") {
  std::mt19937 rng(41);
  for (int iter = 0; iter < 100; ++iter) {
    int base = int(rng() % 4);  // levels 0-3 avoid compiling in the loop
    AasPackage pkg = level_pkg(base);
    int before = classify_level(pkg).value;
    auto kind = static_cast<model::ArtifactKind>(rng() % 3);
    augment(pkg, kind, int(iter));
    int after = classify_level(pkg).value;
    CHECK(after >= before);
    CHECK(model::validate(pkg).empty());
    if (kind == model::ArtifactKind::Executable) CHECK(after == 5);
  }
}

TEST_CASE("capability_matrix: anchors and monotonicity") {
  CapabilityVector l0 = capability_matrix(HeavinessLevel{0});
  CHECK_FALSE(l0.needs_runtime);
  CHECK_FALSE(l0.api_access);
  CHECK_FALSE(l0.parameterized_requests);
  CHECK_FALSE(l0.embedded_logic);
  CHECK(l0.logic_form == LogicForm::None);

  CHECK(capability_matrix(HeavinessLevel{1}).needs_runtime);
  CHECK(capability_matrix(HeavinessLevel{2}).parameterized_requests);
  CHECK(capability_matrix(HeavinessLevel{3}).logic_form == LogicForm::Interpreted);
  CHECK(capability_matrix(HeavinessLevel{4}).logic_form == LogicForm::Translated);
  CHECK(capability_matrix(HeavinessLevel{5}).logic_form == LogicForm::Executable);

  for (int k = 0; k < 5; ++k) {
    CapabilityVector lo = capability_matrix(HeavinessLevel{k});
    CapabilityVector hi = capability_matrix(HeavinessLevel{k + 1});
    CHECK((!lo.needs_runtime || hi.needs_runtime));
    CHECK((!lo.api_access || hi.api_access));
    CHECK((!lo.parameterized_requests || hi.parameterized_requests));
    CHECK((!lo.embedded_logic || hi.embedded_logic));
    CHECK(static_cast<int>(lo.logic_form) <= static_cast<int>(hi.logic_form));
  }
}

TEST_CASE("classify_data_flow: truth table") {
  model::SyncConfig sync;
  sync.poll_interval_s = 1;
  auto flow = [&](FlowMode in, FlowMode out, RuntimeStrategy s) {
    sync.inbound = in;
    sync.outbound = out;
    return classify_data_flow(sync, s);
  };
  CHECK(flow(FlowMode::Manual, FlowMode::Manual, RuntimeStrategy::ServerHosted) ==
        DataFlowClass::DigitalModel);
  CHECK(flow(FlowMode::Automatic, FlowMode::Manual, RuntimeStrategy::ServerHosted) ==
        DataFlowClass::DigitalShadow);
  CHECK(flow(FlowMode::Automatic, FlowMode::Automatic, RuntimeStrategy::Standalone) ==
        DataFlowClass::DigitalTwin);
  // The passive strategy dominates every sync combination.
  for (FlowMode in : {FlowMode::Manual, FlowMode::Automatic}) {
    for (FlowMode out : {FlowMode::Manual, FlowMode::Automatic}) {
      CHECK(flow(in, out, RuntimeStrategy::Passive) == DataFlowClass::DigitalModel);
    }
  }
  bool threw = false;
  try {
    flow(FlowMode::Manual, FlowMode::Automatic, RuntimeStrategy::ServerHosted);
  } catch (const Error& e) {
    threw = e.code() == ErrorCode::UnclassifiedFlow;
  }
  CHECK(threw);
}

TEST_CASE("quality table: all 36 cells") {
  // Reference matrix, row-major criterion x level.
  const QualityRating expected[6][6] = {
      /* reliability     */ {G, G, O, R, R, R},
      /* usability       */ {G, O, O, R, R, R},
      /* performance     */ {G, O, O, R, R, R},
      /* security        */ {G, O, O, R, R, R},
      /* supportability  */ {G, G, G, O, O, R},
      /* transferability */ {G, R, R, O, O, G},
  };
  auto table = full_quality_table();
  for (int lvl = 0; lvl < 6; ++lvl) {
    CHECK(table[lvl].reliability == expected[0][lvl]);
    CHECK(table[lvl].usability == expected[1][lvl]);
    CHECK(table[lvl].performance == expected[2][lvl]);
    CHECK(table[lvl].security == expected[3][lvl]);
    CHECK(table[lvl].supportability == expected[4][lvl]);
    CHECK(table[lvl].transferability == expected[5][lvl]);
    CHECK(assess_quality(HeavinessLevel{lvl}) == table[lvl]);
  }
  // Spot anchors called out in the build contract.
  CHECK(table[0] == QualityRow{G, G, G, G, G, G});
  CHECK(table[2] == QualityRow{O, O, O, O, G, R});
  CHECK(table[5] == QualityRow{R, R, R, R, R, G});
  CHECK(table[1].supportability == G);
  CHECK(table[1].transferability == R);
  CHECK(table[3].transferability == O);
}

TEST_CASE("recommend_level: guidance anchors") {
  UseCaseProfile customer;
  customer.deployment_target = DeploymentTarget::CustomerSide;
  customer.code_visibility = CodeVisibility::BlackBoxOk;
  customer.task_complexity = TaskComplexity::Complex;
  customer.fleet_size = FleetSize::Single;
  auto recs = recommend_level(customer);
  REQUIRE(!recs.empty());
  CHECK(recs.front().level.value == 5);
  CHECK(recs.front().rule_id == "R-CUSTOMER-L5");

  UseCaseProfile internal_simple;
  internal_simple.deployment_target = DeploymentTarget::ProviderInternal;
  internal_simple.code_visibility = CodeVisibility::WhiteBoxRequired;
  internal_simple.task_complexity = TaskComplexity::Simple;
  recs = recommend_level(internal_simple);
  REQUIRE(!recs.empty());
  CHECK(recs.front().level.value == 3);

  UseCaseProfile consolidating;
  consolidating.fleet_size = FleetSize::Many;
  consolidating.provider_needs_raw_data = true;
  consolidating.consolidation_needed = true;
  recs = recommend_level(consolidating);
  REQUIRE(!recs.empty());
  CHECK(recs.front().level.value == 2);

  UseCaseProfile research;
  research.deployment_target = DeploymentTarget::Research;
  recs = recommend_level(research);
  CHECK(recs.front().level.value == 4);
}

TEST_CASE("recommend_level: deterministic, ranked, rule ids attached") {
  std::mt19937 rng(59);
  for (int iter = 0; iter < 60; ++iter) {
    UseCaseProfile p;
    p.deployment_target = static_cast<DeploymentTarget>(rng() % 3);
    p.code_visibility = static_cast<CodeVisibility>(rng() % 2);
    p.task_complexity = static_cast<TaskComplexity>(rng() % 2);
    p.fleet_size = static_cast<FleetSize>(rng() % 2);
    p.consolidation_needed = (rng() & 1) != 0;
    p.provider_needs_raw_data = (rng() & 1) != 0;
    auto a = recommend_level(p);
    auto b = recommend_level(p);
    REQUIRE(a.size() == b.size());
    REQUIRE(!a.empty());
    for (size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].level.value == b[i].level.value);
      CHECK(a[i].rule_id == b[i].rule_id);
      CHECK(!a[i].rule_id.empty());
      CHECK(!a[i].rationale.empty());
    }
    // No level appears twice.
    for (size_t i = 0; i < a.size(); ++i) {
      for (size_t j = i + 1; j < a.size(); ++j) {
        CHECK(a[i].level.value != a[j].level.value);
      }
    }
  }
}

TEST_CASE("validate_declared_level flags a mismatch") {
  AasPackage pkg = level_pkg(3);
  pkg.manifest.declared_level = 2;
  auto vs = validate_declared_level(pkg);
  REQUIRE(vs.size() == 1);
  CHECK(vs[0].rule == "DECLARED_LEVEL_MATCHES");
}
