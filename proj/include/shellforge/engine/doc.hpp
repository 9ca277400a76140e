#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "shellforge/model/model.hpp"

namespace shellforge::engine {

using DocValue = std::variant<double, int64_t, std::string, bool,
                              std::vector<double>>;

// Flat record of named values exchanged with services, plus a metadata
// block. ts is sample time in seconds (input-derived, never wall clock, so
// pipeline output stays bit-identical across runs).
struct ServiceDoc {
  std::map<std::string, DocValue> fields;
  double ts = 0;
  std::string source;
  bool operator==(const ServiceDoc&) const = default;
};

bool doc_value_matches(const DocValue& v, model::IoType t);

// Numeric view of a field; int64 promotes to double. Returns false for
// strings, bools, and arrays.
bool doc_value_as_number(const DocValue& v, double& out);

std::string doc_to_json(const ServiceDoc& doc);          // fields only, canonical
ServiceDoc doc_from_json(std::string_view text);         // throws ProtocolError

// Validates the fields against one side of an io schema: every declared
// field present with a matching type, no undeclared fields.
// Throws Error{SchemaMismatch}.
void check_schema(const ServiceDoc& doc,
                  const std::map<std::string, model::IoType>& schema,
                  std::string_view side);

}  // namespace shellforge::engine
