#pragma once

#include <string>
#include <vector>

#include "shellforge/model/model.hpp"

namespace shellforge::model {

struct Violation {
  std::string path;     // where in the package, e.g. "submodels[Telemetry]"
  std::string rule;     // machine-readable rule id, e.g. "ID_SHORT_UNIQUE"
  std::string message;
  bool operator==(const Violation&) const = default;
};

// Structural invariant check. Returns an empty list iff the package is valid.
// Violations are data, not errors. Consistency between a declared level and
// the classifier lives in the classification module (validate_declared_level).
std::vector<Violation> validate(const AasPackage& pkg);

// Resolves "Submodel.Element" against a shell's referenced submodels.
// Throws Error{NotFound} when the shell, submodel, or element is absent.
const SubmodelElement& resolve_element(const AasPackage& pkg,
                                       const Identifier& shell_id,
                                       std::string_view id_short_path);

}  // namespace shellforge::model
