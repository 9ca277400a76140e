#pragma once

#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "shellforge/engine/doc.hpp"
#include "shellforge/engine/expr.hpp"

namespace shellforge::engine {

enum class Comparison { Lt, Le, Eq, Ge, Gt };

Comparison comparison_from_token(std::string_view tok);  // "<" "<=" "=" ">=" ">"
std::string_view comparison_token(Comparison c);

// One step of the interpreted service DSL. Steps transform a document
// stream left to right:
//   window(n)      keep the last n documents (EmptyWindow if fewer exist)
//   mean/min/max   aggregate every numeric field into one document
//   map            per document: target := arithmetic expression
//   filter         keep documents where field cmp literal holds
//   regex_extract  per document: to := capture group of pattern over `from`;
//                  non-matching documents are dropped
//   select         project each document onto the named fields
struct PipelineStep {
  enum class Op { Window, Mean, Min, Max, Map, Filter, RegexExtract, Select } op;
  // window
  int64_t window_n = 0;
  // map
  std::string target;
  std::optional<ArithExpr> expr;
  // filter
  std::string field;
  Comparison cmp = Comparison::Eq;
  DocValue literal;
  // regex_extract
  std::string pattern;
  int group = 0;
  std::string from_field;
  std::string to_field;
  std::optional<std::regex> regex;
  // select
  std::vector<std::string> fields;
};

struct PipelineSpec {
  std::vector<PipelineStep> steps;
};

// Parses and validates "{steps: [...]}". Throws Error{ParseError} with the
// offending step index and reason.
PipelineSpec parse_pipeline(std::string_view json_text);

// Applies the steps to the input stream and returns the last surviving
// document. Deterministic: same spec and input give bit-identical output.
// Throws Error{EmptyWindow} when a window or aggregate has no documents.
ServiceDoc run_pipeline(const PipelineSpec& spec,
                        const std::vector<ServiceDoc>& input);

}  // namespace shellforge::engine
