#include "shellforge/engine/doc.hpp"

#include <json.hpp>

#include "shellforge/util/error.hpp"

namespace shellforge::engine {

using nlohmann::json;
using model::IoType;

bool doc_value_matches(const DocValue& v, IoType t) {
  switch (t) {
    case IoType::Double:
      return std::holds_alternative<double>(v) ||
             std::holds_alternative<int64_t>(v);
    case IoType::Int64: return std::holds_alternative<int64_t>(v);
    case IoType::String: return std::holds_alternative<std::string>(v);
    case IoType::Bool: return std::holds_alternative<bool>(v);
    case IoType::DoubleArray:
      return std::holds_alternative<std::vector<double>>(v);
  }
  return false;
}

bool doc_value_as_number(const DocValue& v, double& out) {
  if (const auto* d = std::get_if<double>(&v)) {
    out = *d;
    return true;
  }
  if (const auto* i = std::get_if<int64_t>(&v)) {
    out = static_cast<double>(*i);
    return true;
  }
  return false;
}

std::string doc_to_json(const ServiceDoc& doc) {
  json j = json::object();
  for (const auto& [name, value] : doc.fields) {
    std::visit([&](const auto& v) { j[name] = v; }, value);
  }
  return j.dump();
}

ServiceDoc doc_from_json(std::string_view text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorCode::ProtocolError, "expected one JSON object");
  }
  ServiceDoc doc;
  for (const auto& [name, v] : j.items()) {
    if (v.is_number_integer()) {
      doc.fields[name] = v.get<int64_t>();
    } else if (v.is_number()) {
      doc.fields[name] = v.get<double>();
    } else if (v.is_string()) {
      doc.fields[name] = v.get<std::string>();
    } else if (v.is_boolean()) {
      doc.fields[name] = v.get<bool>();
    } else if (v.is_array()) {
      std::vector<double> arr;
      arr.reserve(v.size());
      for (const auto& x : v) {
        if (!x.is_number()) {
          throw Error(ErrorCode::ProtocolError,
                      "field '" + name + "': arrays must be numeric");
        }
        arr.push_back(x.get<double>());
      }
      doc.fields[name] = std::move(arr);
    } else {
      throw Error(ErrorCode::ProtocolError,
                  "field '" + name + "': unsupported value");
    }
  }
  return doc;
}

void check_schema(const ServiceDoc& doc,
                  const std::map<std::string, model::IoType>& schema,
                  std::string_view side) {
  for (const auto& [name, type] : schema) {
    auto it = doc.fields.find(name);
    if (it == doc.fields.end()) {
      throw Error(ErrorCode::SchemaMismatch,
                  std::string(side) + " field '" + name + "' missing");
    }
    if (!doc_value_matches(it->second, type)) {
      throw Error(ErrorCode::SchemaMismatch,
                  std::string(side) + " field '" + name + "' is not " +
                      std::string(io_type_name(type)));
    }
  }
  for (const auto& [name, value] : doc.fields) {
    if (!schema.count(name)) {
      throw Error(ErrorCode::SchemaMismatch,
                  std::string(side) + " field '" + name + "' not declared");
    }
  }
}

}  // namespace shellforge::engine
