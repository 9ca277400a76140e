#include "shellforge/model/validate.hpp"

#include <set>

#include "shellforge/model/package_io.hpp"
#include "shellforge/util/error.hpp"

namespace shellforge::model {

namespace {

bool has_control_chars(std::string_view s) {
  for (unsigned char c : s) {
    if (c < 0x20 || c == 0x7f) return true;
  }
  return false;
}

bool valid_id_short(std::string_view s) {
  if (s.empty()) return false;
  if (!std::isalpha(static_cast<unsigned char>(s[0]))) return false;
  for (char c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  }
  return true;
}

bool scalar_matches(const ScalarValue& v, ValueType t) {
  switch (t) {
    case ValueType::Double: return std::holds_alternative<double>(v);
    case ValueType::Int64: return std::holds_alternative<int64_t>(v);
    case ValueType::String: return std::holds_alternative<std::string>(v);
    case ValueType::Bool: return std::holds_alternative<bool>(v);
  }
  return false;
}

struct Checker {
  std::vector<Violation> out;

  void add(std::string path, std::string rule, std::string message) {
    out.push_back(Violation{std::move(path), std::move(rule), std::move(message)});
  }

  void check_identifier(const std::string& path, const Identifier& id) {
    if (id.value.empty()) {
      add(path, "ID_NONEMPTY", "identifier is empty");
    } else if (has_control_chars(id.value)) {
      add(path, "ID_CONTROL", "identifier contains control characters");
    }
  }

  void check_property(const std::string& path, const Property& p) {
    if (!valid_id_short(p.id_short)) {
      add(path, "ID_SHORT_FORMAT", "idShort '" + p.id_short + "' is not valid");
    }
    if (!scalar_matches(p.value, p.value_type)) {
      add(path, "PROPERTY_VALUE_TYPE",
          "value does not parse as " + std::string(value_type_name(p.value_type)));
    }
  }
};

}  // namespace

std::vector<Violation> validate(const AasPackage& pkg) {
  Checker c;

  std::set<std::string> seen_ids;
  auto check_unique_id = [&](const std::string& path, const Identifier& id) {
    c.check_identifier(path, id);
    if (!id.value.empty() && !seen_ids.insert(id.value).second) {
      c.add(path, "ID_UNIQUE", "duplicate identifier '" + id.value + "'");
    }
  };

  for (const auto& sh : pkg.shells) {
    std::string path = "shells[" + sh.id.value + "]";
    check_unique_id(path, sh.id);
    c.check_identifier(path + ".assetId", sh.asset_id);
    std::set<std::string> refs;
    for (const auto& r : sh.submodel_refs) {
      if (!refs.insert(r.value).second) {
        c.add(path, "SUBMODEL_REF_UNIQUE", "duplicate ref '" + r.value + "'");
      }
      if (!pkg.find_submodel(r)) {
        c.add(path, "SUBMODEL_REF_RESOLVES",
              "ref '" + r.value + "' does not resolve");
      }
    }
  }

  for (const auto& sm : pkg.submodels) {
    std::string path = "submodels[" + sm.id_short + "]";
    check_unique_id(path, sm.id);
    if (!valid_id_short(sm.id_short)) {
      c.add(path, "ID_SHORT_FORMAT",
            "idShort '" + sm.id_short + "' is not valid");
    }
    std::set<std::string> shorts;
    for (const auto& e : sm.elements) {
      std::string id_short(element_id_short(e));
      std::string epath = path + "." + id_short;
      if (!shorts.insert(id_short).second) {
        c.add(epath, "ID_SHORT_UNIQUE", "duplicate element idShort");
      }
      if (const auto* p = std::get_if<Property>(&e)) {
        c.check_property(epath, *p);
      } else if (const auto* op = std::get_if<OperationElement>(&e)) {
        if (!valid_id_short(op->id_short)) {
          c.add(epath, "ID_SHORT_FORMAT", "idShort is not valid");
        }
        if (op->output_vars.empty()) {
          c.add(epath, "OP_OUTPUT_REQUIRED", "operation needs >= 1 output");
        }
        for (const auto& v : op->input_vars) c.check_property(epath, v);
        for (const auto& v : op->output_vars) c.check_property(epath, v);
        for (const auto& q : op->qualifiers) {
          if (q.kind.empty()) {
            c.add(epath, "QUALIFIER_KIND_NONEMPTY", "qualifier kind is empty");
          }
        }
      } else if (const auto* f = std::get_if<FileElement>(&e)) {
        if (!valid_id_short(f->id_short)) {
          c.add(epath, "ID_SHORT_FORMAT", "idShort is not valid");
        }
        if (!pkg.artifact_files.count(f->artifact_path)) {
          c.add(epath, "ARTIFACT_MISSING",
                "artifact path '" + f->artifact_path + "' not in package");
        }
      }
    }
  }

  for (const auto& [path, data] : pkg.artifact_files) {
    if (!path.starts_with("artifacts/")) {
      c.add(path, "ARTIFACT_PATH_PREFIX", "artifact files must live under artifacts/");
    }
  }

  // Every artifact must be reachable from a FileElement in "SoftwareServices".
  const Submodel* services = pkg.find_submodel_by_short("SoftwareServices");
  for (const auto& a : pkg.artifacts) {
    std::string path = "artifacts[" + a.name + "]";
    if (!pkg.artifact_files.count(a.entrypoint)) {
      c.add(path, "ARTIFACT_ENTRYPOINT_EXISTS",
            "entrypoint '" + a.entrypoint + "' not in package");
    }
    if (a.io.outputs.empty()) {
      c.add(path, "ARTIFACT_OUTPUT_SCHEMA", "io schema has no outputs");
    }
    if (a.budget.cpu_time_s <= 0 || a.budget.wall_time_s <= 0 ||
        a.budget.memory_bytes == 0) {
      c.add(path, "BUDGET_POSITIVE", "resource budget values must be positive");
    }
    bool reachable = false;
    if (services) {
      for (const auto& e : services->elements) {
        const auto* f = std::get_if<FileElement>(&e);
        if (f && (f->artifact_path == a.entrypoint ||
                  f->artifact_path == descriptor_path(a.name))) {
          reachable = true;
          break;
        }
      }
    }
    if (!reachable) {
      c.add(path, "ARTIFACT_REACHABLE",
            "no FileElement in SoftwareServices references this artifact");
    }
  }

  for (size_t i = 0; i < pkg.endpoints.size(); ++i) {
    const auto& e = pkg.endpoints[i];
    std::string path = "endpoints[" + std::to_string(i) + "]";
    if (e.host.empty()) {
      c.add(path, "ENDPOINT_HOST_NONEMPTY", "host is empty");
    }
    if (e.port < 1 || e.port > 65535) {
      c.add(path, "ENDPOINT_PORT_RANGE", "port out of [1, 65535]");
    }
  }

  if (pkg.sync_config) {
    const auto& s = *pkg.sync_config;
    bool any_auto = s.inbound == FlowMode::Automatic ||
                    s.outbound == FlowMode::Automatic;
    if (any_auto && s.poll_interval_s <= 0) {
      c.add("syncConfig", "SYNC_POLL_POSITIVE",
            "pollInterval must be > 0 when any direction is automatic");
    }
  }

  // Coverage both ways: files without checksum entry and stale entries.
  for (const auto& [path, data] : pkg.artifact_files) {
    if (!pkg.manifest.checksums.count(path)) {
      c.add(path, "CHECKSUM_COVERAGE", "artifact file has no checksum entry");
    }
  }
  for (const auto& [path, hex] : pkg.manifest.checksums) {
    if (!pkg.artifact_files.count(path)) {
      c.add(path, "CHECKSUM_COVERAGE", "checksum entry without artifact file");
    }
  }

  return c.out;
}

const SubmodelElement& resolve_element(const AasPackage& pkg,
                                       const Identifier& shell_id,
                                       std::string_view id_short_path) {
  const AasShell* shell = pkg.find_shell(shell_id);
  if (!shell) {
    throw Error(ErrorCode::NotFound, "shell '" + shell_id.value + "'");
  }
  size_t dot = id_short_path.find('.');
  if (dot == std::string_view::npos || dot == 0 ||
      dot + 1 >= id_short_path.size()) {
    throw Error(ErrorCode::NotFound,
                "path '" + std::string(id_short_path) +
                    "' (expected Submodel.Element)");
  }
  std::string_view sm_short = id_short_path.substr(0, dot);
  std::string_view el_short = id_short_path.substr(dot + 1);
  for (const auto& ref : shell->submodel_refs) {
    const Submodel* sm = pkg.find_submodel(ref);
    if (!sm || sm->id_short != sm_short) continue;
    for (const auto& e : sm->elements) {
      if (element_id_short(e) == el_short) return e;
    }
  }
  throw Error(ErrorCode::NotFound, "path '" + std::string(id_short_path) + "'");
}

}  // namespace shellforge::model
