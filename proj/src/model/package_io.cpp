#include "shellforge/model/package_io.hpp"

#include <json.hpp>

#include <algorithm>

#include "shellforge/model/validate.hpp"
#include "shellforge/util/codec.hpp"
#include "shellforge/util/error.hpp"
#include "shellforge/util/zipfile.hpp"

namespace shellforge::model {

using nlohmann::json;

namespace {

constexpr std::string_view artifacts_prefix = "artifacts/";
constexpr std::string_view descriptor_suffix = ".artifact.json";

json parse_json(std::string_view text, const std::string& where) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) {
    throw Error(ErrorCode::SchemaViolation, where + ": invalid JSON");
  }
  return j;
}

const json& require(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw Error(ErrorCode::SchemaViolation,
                where + ": missing key '" + key + "'");
  }
  return *it;
}

std::string require_string(const json& j, const char* key,
                           const std::string& where) {
  const json& v = require(j, key, where);
  if (!v.is_string()) {
    throw Error(ErrorCode::SchemaViolation,
                where + ": '" + key + "' must be a string");
  }
  return v.get<std::string>();
}

ScalarValue scalar_from_json(const json& v, ValueType t,
                             const std::string& where) {
  switch (t) {
    case ValueType::Double:
      if (v.is_number()) return v.get<double>();
      break;
    case ValueType::Int64:
      if (v.is_number_integer()) return v.get<int64_t>();
      break;
    case ValueType::String:
      if (v.is_string()) return v.get<std::string>();
      break;
    case ValueType::Bool:
      if (v.is_boolean()) return v.get<bool>();
      break;
  }
  throw Error(ErrorCode::SchemaViolation,
              where + ": value does not parse as " +
                  std::string(value_type_name(t)));
}

json scalar_to_json(const ScalarValue& v) {
  return std::visit([](const auto& x) { return json(x); }, v);
}

json property_to_json(const Property& p) {
  json j;
  j["kind"] = "Property";
  j["idShort"] = p.id_short;
  j["valueType"] = value_type_name(p.value_type);
  j["value"] = scalar_to_json(p.value);
  return j;
}

Property property_from_json(const json& j, const std::string& where) {
  Property p;
  p.id_short = require_string(j, "idShort", where);
  p.value_type = value_type_from_name(require_string(j, "valueType", where));
  p.value = scalar_from_json(require(j, "value", where), p.value_type, where);
  return p;
}

json element_to_json(const SubmodelElement& e) {
  if (const auto* p = std::get_if<Property>(&e)) {
    return property_to_json(*p);
  }
  if (const auto* op = std::get_if<OperationElement>(&e)) {
    json j;
    j["kind"] = "Operation";
    j["idShort"] = op->id_short;
    json in = json::array(), out = json::array(), quals = json::array();
    for (const auto& v : op->input_vars) in.push_back(property_to_json(v));
    for (const auto& v : op->output_vars) out.push_back(property_to_json(v));
    for (const auto& q : op->qualifiers) {
      quals.push_back(json{{"kind", q.kind}, {"value", q.value}});
    }
    j["inputVars"] = std::move(in);
    j["outputVars"] = std::move(out);
    j["qualifiers"] = std::move(quals);
    return j;
  }
  const auto& f = std::get<FileElement>(e);
  json j;
  j["kind"] = "File";
  j["idShort"] = f.id_short;
  j["contentType"] = f.content_type;
  j["artifactPath"] = f.artifact_path;
  return j;
}

SubmodelElement element_from_json(const json& j, const std::string& where) {
  std::string kind = require_string(j, "kind", where);
  if (kind == "Property") {
    return property_from_json(j, where);
  }
  if (kind == "Operation") {
    OperationElement op;
    op.id_short = require_string(j, "idShort", where);
    for (const auto& v : require(j, "inputVars", where)) {
      op.input_vars.push_back(property_from_json(v, where));
    }
    for (const auto& v : require(j, "outputVars", where)) {
      op.output_vars.push_back(property_from_json(v, where));
    }
    for (const auto& q : require(j, "qualifiers", where)) {
      op.qualifiers.push_back(Qualifier{require_string(q, "kind", where),
                                        require_string(q, "value", where)});
    }
    return op;
  }
  if (kind == "File") {
    FileElement f;
    f.id_short = require_string(j, "idShort", where);
    f.content_type = require_string(j, "contentType", where);
    f.artifact_path = require_string(j, "artifactPath", where);
    return f;
  }
  throw Error(ErrorCode::SchemaViolation, where + ": unknown element kind '" +
                                              kind + "'");
}

json endpoint_to_json(const EndpointDescriptor& e) {
  json j;
  j["host"] = e.host;
  j["port"] = e.port;
  j["parameterized"] = e.parameterized;
  json vars = json::array();
  for (const auto& v : e.variables) {
    vars.push_back(json{{"name", v.name},
                        {"valueType", value_type_name(v.value_type)}});
  }
  j["variables"] = std::move(vars);
  if (!e.commands.empty()) {
    json cmds = json::array();
    for (const auto& c : e.commands) {
      json args = json::array();
      for (auto t : c.arg_types) args.push_back(value_type_name(t));
      cmds.push_back(json{{"argTypes", std::move(args)}, {"name", c.name}});
    }
    j["commands"] = std::move(cmds);
  }
  return j;
}

EndpointDescriptor endpoint_from_json(const json& j, const std::string& where) {
  EndpointDescriptor e;
  e.host = require_string(j, "host", where);
  e.port = require(j, "port", where).get<int>();
  e.parameterized = require(j, "parameterized", where).get<bool>();
  for (const auto& v : require(j, "variables", where)) {
    e.variables.push_back(
        EndpointVariable{require_string(v, "name", where),
                         value_type_from_name(require_string(v, "valueType", where))});
  }
  if (j.contains("commands")) {
    for (const auto& c : j["commands"]) {
      EndpointCommand cmd;
      cmd.name = require_string(c, "name", where);
      for (const auto& t : require(c, "argTypes", where)) {
        cmd.arg_types.push_back(value_type_from_name(t.get<std::string>()));
      }
      e.commands.push_back(std::move(cmd));
    }
  }
  return e;
}

json sync_to_json(const SyncConfig& s) {
  json j;
  j["inbound"] = flow_mode_name(s.inbound);
  j["outbound"] = flow_mode_name(s.outbound);
  j["pollInterval"] = s.poll_interval_s;
  json maps = json::array();
  for (const auto& m : s.mappings) {
    maps.push_back(json{{"target", m.target}, {"var", m.var}});
  }
  j["mappings"] = std::move(maps);
  json rules = json::array();
  for (const auto& r : s.write_back_rules) {
    rules.push_back(json{
        {"command", json{{"value", r.command.value}, {"var", r.command.var}}},
        {"trigger", r.trigger}});
  }
  j["writeBackRules"] = std::move(rules);
  return j;
}

SyncConfig sync_from_json(const json& j, const std::string& where) {
  SyncConfig s;
  s.inbound = flow_mode_from_name(require_string(j, "inbound", where));
  s.outbound = flow_mode_from_name(require_string(j, "outbound", where));
  s.poll_interval_s = require(j, "pollInterval", where).get<double>();
  for (const auto& m : require(j, "mappings", where)) {
    s.mappings.push_back(SyncMapping{require_string(m, "var", where),
                                     require_string(m, "target", where)});
  }
  for (const auto& r : require(j, "writeBackRules", where)) {
    WriteBackRule rule;
    rule.trigger = require_string(r, "trigger", where);
    const json& cmd = require(r, "command", where);
    rule.command.var = require_string(cmd, "var", where);
    rule.command.value = require(cmd, "value", where).get<double>();
    s.write_back_rules.push_back(std::move(rule));
  }
  return s;
}

json model_to_json(const AasPackage& pkg) {
  json j;
  json shells = json::array();
  for (const auto& sh : pkg.shells) {
    json refs = json::array();
    for (const auto& r : sh.submodel_refs) refs.push_back(r.value);
    shells.push_back(json{{"assetId", sh.asset_id.value},
                          {"id", sh.id.value},
                          {"submodelRefs", std::move(refs)}});
  }
  j["shells"] = std::move(shells);
  json submodels = json::array();
  for (const auto& sm : pkg.submodels) {
    json elems = json::array();
    for (const auto& e : sm.elements) elems.push_back(element_to_json(e));
    submodels.push_back(json{{"elements", std::move(elems)},
                             {"id", sm.id.value},
                             {"idShort", sm.id_short}});
  }
  j["submodels"] = std::move(submodels);
  if (!pkg.endpoints.empty()) {
    json eps = json::array();
    for (const auto& e : pkg.endpoints) eps.push_back(endpoint_to_json(e));
    j["endpoints"] = std::move(eps);
  }
  if (pkg.sync_config) {
    j["syncConfig"] = sync_to_json(*pkg.sync_config);
  }
  return j;
}

json manifest_to_json(const PackageManifest& m) {
  json j;
  j["formatVersion"] = m.format_version;
  j["createdAt"] = m.created_at;
  if (m.declared_level) j["declaredLevel"] = *m.declared_level;
  if (m.model_immutable) j["modelImmutable"] = true;
  json sums = json::object();
  for (const auto& [path, hex] : m.checksums) sums[path] = hex;
  j["checksums"] = std::move(sums);
  return j;
}

json budget_to_json(const ResourceBudget& b) {
  json j;
  j["cpuTime"] = b.cpu_time_s;
  j["wallTime"] = b.wall_time_s;
  j["memoryBytes"] = b.memory_bytes;
  j["networkAllowed"] = b.network_allowed;
  return j;
}

ResourceBudget budget_from_json(const json& j, const std::string& where) {
  ResourceBudget b;
  b.cpu_time_s = require(j, "cpuTime", where).get<double>();
  b.wall_time_s = require(j, "wallTime", where).get<double>();
  b.memory_bytes = require(j, "memoryBytes", where).get<uint64_t>();
  b.network_allowed = require(j, "networkAllowed", where).get<bool>();
  return b;
}

ServiceArtifact artifact_from_descriptor(std::string_view text,
                                         const std::string& path) {
  json j = parse_json(text, path);
  ServiceArtifact a;
  a.name = require_string(j, "name", path);
  a.kind = artifact_kind_from_name(require_string(j, "kind", path));
  a.entrypoint = require_string(j, "entrypoint", path);
  const json& io = require(j, "io", path);
  for (const auto& [name, t] : require(io, "inputs", path).items()) {
    a.io.inputs[name] = io_type_from_name(t.get<std::string>());
  }
  for (const auto& [name, t] : require(io, "outputs", path).items()) {
    a.io.outputs[name] = io_type_from_name(t.get<std::string>());
  }
  for (const auto& d : require(j, "dependencies", path)) {
    a.dependencies.push_back(d.get<std::string>());
  }
  a.budget = budget_from_json(require(j, "budget", path), path);
  return a;
}

}  // namespace

std::string descriptor_path(std::string_view artifact_name) {
  return std::string(artifacts_prefix) + std::string(artifact_name) +
         std::string(descriptor_suffix);
}

std::string canonical_descriptor_json(const ServiceArtifact& a) {
  json j;
  j["name"] = a.name;
  j["kind"] = artifact_kind_name(a.kind);
  j["entrypoint"] = a.entrypoint;
  json inputs = json::object(), outputs = json::object();
  for (const auto& [name, t] : a.io.inputs) inputs[name] = io_type_name(t);
  for (const auto& [name, t] : a.io.outputs) outputs[name] = io_type_name(t);
  j["io"] = json{{"inputs", std::move(inputs)}, {"outputs", std::move(outputs)}};
  j["dependencies"] = a.dependencies;
  j["budget"] = budget_to_json(a.budget);
  return j.dump();
}

AasPackage parse_package(std::string_view bytes) {
  if (bytes.empty()) {
    throw Error(ErrorCode::MalformedArchive, "empty input");
  }
  auto entries = util::read_zip(bytes);
  const std::string* model_text = nullptr;
  const std::string* manifest_text = nullptr;
  AasPackage pkg;
  for (const auto& e : entries) {
    if (e.path == "model.json") {
      model_text = &e.data;
    } else if (e.path == "manifest.json") {
      manifest_text = &e.data;
    } else if (e.path.starts_with(artifacts_prefix)) {
      pkg.artifact_files[e.path] = e.data;
    } else {
      throw Error(ErrorCode::MalformedArchive, "unexpected entry: " + e.path);
    }
  }
  if (!model_text) {
    throw Error(ErrorCode::MalformedArchive, "missing model.json");
  }
  if (!manifest_text) {
    throw Error(ErrorCode::MalformedArchive, "missing manifest.json");
  }

  json mj = parse_json(*manifest_text, "manifest.json");
  pkg.manifest.format_version = require_string(mj, "formatVersion", "manifest.json");
  pkg.manifest.created_at = require_string(mj, "createdAt", "manifest.json");
  if (mj.contains("declaredLevel")) {
    pkg.manifest.declared_level = mj["declaredLevel"].get<int>();
  }
  if (mj.contains("modelImmutable")) {
    pkg.manifest.model_immutable = mj["modelImmutable"].get<bool>();
  }
  for (const auto& [path, hex] : require(mj, "checksums", "manifest.json").items()) {
    pkg.manifest.checksums[path] = hex.get<std::string>();
  }

  // Checksums must cover exactly the artifacts/ entries.
  for (const auto& [path, data] : pkg.artifact_files) {
    auto it = pkg.manifest.checksums.find(path);
    if (it == pkg.manifest.checksums.end()) {
      throw Error(ErrorCode::ChecksumMismatch, path + " (no checksum entry)");
    }
    if (util::sha256_hex(data) != it->second) {
      throw Error(ErrorCode::ChecksumMismatch, path);
    }
  }
  for (const auto& [path, hex] : pkg.manifest.checksums) {
    if (!pkg.artifact_files.count(path)) {
      throw Error(ErrorCode::ChecksumMismatch, path + " (file missing)");
    }
  }

  json j = parse_json(*model_text, "model.json");
  for (const auto& sh : require(j, "shells", "model.json")) {
    AasShell shell;
    shell.id.value = require_string(sh, "id", "model.json");
    shell.asset_id.value = require_string(sh, "assetId", "model.json");
    for (const auto& r : require(sh, "submodelRefs", "model.json")) {
      shell.submodel_refs.push_back(Identifier{r.get<std::string>()});
    }
    pkg.shells.push_back(std::move(shell));
  }
  for (const auto& sm : require(j, "submodels", "model.json")) {
    Submodel submodel;
    submodel.id.value = require_string(sm, "id", "model.json");
    submodel.id_short = require_string(sm, "idShort", "model.json");
    std::string where = "model.json submodel " + submodel.id_short;
    for (const auto& e : require(sm, "elements", "model.json")) {
      submodel.elements.push_back(element_from_json(e, where));
    }
    pkg.submodels.push_back(std::move(submodel));
  }
  if (j.contains("endpoints")) {
    for (const auto& e : j["endpoints"]) {
      pkg.endpoints.push_back(endpoint_from_json(e, "model.json endpoints"));
    }
  }
  if (j.contains("syncConfig")) {
    pkg.sync_config = sync_from_json(j["syncConfig"], "model.json syncConfig");
  }

  for (const auto& [path, data] : pkg.artifact_files) {
    if (path.ends_with(descriptor_suffix)) {
      ServiceArtifact a = artifact_from_descriptor(data, path);
      if (descriptor_path(a.name) != path) {
        throw Error(ErrorCode::SchemaViolation,
                    path + ": descriptor name does not match file name");
      }
      pkg.artifacts.push_back(std::move(a));
    }
  }

  auto violations = validate(pkg);
  if (!violations.empty()) {
    const Violation& v = violations.front();
    throw Error(ErrorCode::SchemaViolation,
                v.path + ": " + v.rule + " (" + v.message + ")");
  }
  return pkg;
}

std::string serialize_package(const AasPackage& pkg) {
  std::vector<util::ZipEntry> entries;
  entries.push_back({"manifest.json", manifest_to_json(pkg.manifest).dump()});
  entries.push_back({"model.json", model_to_json(pkg).dump()});
  for (const auto& [path, data] : pkg.artifact_files) {
    entries.push_back({path, data});
  }
  return util::write_zip(std::move(entries));
}

void attach_artifact(AasPackage& pkg, ServiceArtifact artifact,
                     const std::map<std::string, std::string>& payload_files) {
  pkg.artifact_files[descriptor_path(artifact.name)] =
      canonical_descriptor_json(artifact);
  for (const auto& [path, data] : payload_files) {
    pkg.artifact_files[path] = data;
  }
  pkg.artifacts.push_back(std::move(artifact));
  refresh_checksums(pkg);
}

void refresh_checksums(AasPackage& pkg) {
  pkg.manifest.checksums.clear();
  for (const auto& [path, data] : pkg.artifact_files) {
    pkg.manifest.checksums[path] = util::sha256_hex(data);
  }
}

}  // namespace shellforge::model
