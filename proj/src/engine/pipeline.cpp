#include "shellforge/engine/pipeline.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>

#include "shellforge/util/error.hpp"

namespace shellforge::engine {

using nlohmann::json;

Comparison comparison_from_token(std::string_view tok) {
  if (tok == "<") return Comparison::Lt;
  if (tok == "<=") return Comparison::Le;
  if (tok == "=") return Comparison::Eq;
  if (tok == ">=") return Comparison::Ge;
  if (tok == ">") return Comparison::Gt;
  throw Error(ErrorCode::ParseError,
              "unknown comparison '" + std::string(tok) + "'");
}

std::string_view comparison_token(Comparison c) {
  switch (c) {
    case Comparison::Lt: return "<";
    case Comparison::Le: return "<=";
    case Comparison::Eq: return "=";
    case Comparison::Ge: return ">=";
    case Comparison::Gt: return ">";
  }
  return "=";
}

namespace {

[[noreturn]] void step_error(size_t index, const std::string& reason) {
  throw Error(ErrorCode::ParseError,
              "step " + std::to_string(index) + ": " + reason);
}

template <typename T>
bool compare(Comparison c, const T& a, const T& b) {
  switch (c) {
    case Comparison::Lt: return a < b;
    case Comparison::Le: return a <= b;
    case Comparison::Eq: return a == b;
    case Comparison::Ge: return a >= b;
    case Comparison::Gt: return a > b;
  }
  return false;
}

bool filter_keeps(const PipelineStep& step, const ServiceDoc& doc) {
  auto it = doc.fields.find(step.field);
  if (it == doc.fields.end()) return false;
  if (const auto* want = std::get_if<std::string>(&step.literal)) {
    const auto* have = std::get_if<std::string>(&it->second);
    return have && compare(step.cmp, *have, *want);
  }
  double want = 0, have = 0;
  if (!doc_value_as_number(step.literal, want)) return false;
  if (!doc_value_as_number(it->second, have)) return false;
  return compare(step.cmp, have, want);
}

std::vector<ServiceDoc> aggregate(PipelineStep::Op op,
                                  std::vector<ServiceDoc> stream) {
  if (stream.empty()) {
    throw Error(ErrorCode::EmptyWindow, "aggregate over empty stream");
  }
  // Collect field names that are numeric in every document.
  std::vector<std::string> names;
  for (const auto& [name, value] : stream.front().fields) {
    double unused;
    if (doc_value_as_number(value, unused)) names.push_back(name);
  }
  ServiceDoc out;
  out.ts = stream.back().ts;
  out.source = stream.back().source;
  for (const auto& name : names) {
    double acc = 0;
    bool first = true;
    size_t count = 0;
    for (const auto& doc : stream) {
      auto it = doc.fields.find(name);
      double v;
      if (it == doc.fields.end() || !doc_value_as_number(it->second, v)) {
        throw Error(ErrorCode::SchemaMismatch,
                    "field '" + name + "' is not numeric in every document");
      }
      ++count;
      if (op == PipelineStep::Op::Mean) {
        acc += v;
      } else if (first) {
        acc = v;
      } else if (op == PipelineStep::Op::Min) {
        acc = std::min(acc, v);
      } else {
        acc = std::max(acc, v);
      }
      first = false;
    }
    out.fields[name] = op == PipelineStep::Op::Mean
                           ? acc / static_cast<double>(count)
                           : acc;
  }
  return {std::move(out)};
}

}  // namespace

PipelineSpec parse_pipeline(std::string_view json_text) {
  json j = json::parse(json_text, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("steps") ||
      !j["steps"].is_array()) {
    throw Error(ErrorCode::ParseError, "pipeline spec needs a 'steps' array");
  }
  PipelineSpec spec;
  size_t index = 0;
  for (const auto& s : j["steps"]) {
    PipelineStep step;
    if (!s.is_object() || !s.contains("op") || !s["op"].is_string()) {
      step_error(index, "missing 'op'");
    }
    std::string op = s["op"].get<std::string>();
    auto need_string = [&](const char* key) -> std::string {
      if (!s.contains(key) || !s[key].is_string()) {
        step_error(index, std::string("missing string '") + key + "'");
      }
      return s[key].get<std::string>();
    };
    if (op == "window") {
      step.op = PipelineStep::Op::Window;
      if (!s.contains("n") || !s["n"].is_number_integer()) {
        step_error(index, "window needs integer 'n'");
      }
      step.window_n = s["n"].get<int64_t>();
      if (step.window_n < 1) step_error(index, "window n must be >= 1");
    } else if (op == "mean") {
      step.op = PipelineStep::Op::Mean;
    } else if (op == "min") {
      step.op = PipelineStep::Op::Min;
    } else if (op == "max") {
      step.op = PipelineStep::Op::Max;
    } else if (op == "map") {
      step.op = PipelineStep::Op::Map;
      step.target = need_string("target");
      step.expr = ArithExpr::parse(need_string("expr"));
    } else if (op == "filter") {
      step.op = PipelineStep::Op::Filter;
      step.field = need_string("field");
      step.cmp = comparison_from_token(need_string("cmp"));
      if (!s.contains("literal")) step_error(index, "filter needs 'literal'");
      const json& lit = s["literal"];
      if (lit.is_number_integer()) step.literal = lit.get<int64_t>();
      else if (lit.is_number()) step.literal = lit.get<double>();
      else if (lit.is_string()) step.literal = lit.get<std::string>();
      else step_error(index, "filter literal must be number or string");
    } else if (op == "regex_extract") {
      step.op = PipelineStep::Op::RegexExtract;
      step.pattern = need_string("pattern");
      if (!s.contains("group") || !s["group"].is_number_integer()) {
        step_error(index, "regex_extract needs integer 'group'");
      }
      step.group = s["group"].get<int>();
      if (step.group < 0) step_error(index, "group must be >= 0");
      step.from_field = need_string("from");
      step.to_field = s.contains("to") ? need_string("to") : step.from_field;
      try {
        step.regex.emplace(step.pattern, std::regex::ECMAScript);
      } catch (const std::regex_error& e) {
        step_error(index, std::string("pattern does not compile: ") + e.what());
      }
    } else if (op == "select") {
      step.op = PipelineStep::Op::Select;
      if (!s.contains("fields") || !s["fields"].is_array() ||
          s["fields"].empty()) {
        step_error(index, "select needs a non-empty 'fields' array");
      }
      for (const auto& f : s["fields"]) {
        if (!f.is_string()) step_error(index, "select fields must be strings");
        step.fields.push_back(f.get<std::string>());
      }
    } else {
      step_error(index, "unknown op '" + op + "'");
    }
    spec.steps.push_back(std::move(step));
    ++index;
  }
  return spec;
}

ServiceDoc run_pipeline(const PipelineSpec& spec,
                        const std::vector<ServiceDoc>& input) {
  std::vector<ServiceDoc> stream = input;
  for (const auto& step : spec.steps) {
    switch (step.op) {
      case PipelineStep::Op::Window: {
        if (std::cmp_less(stream.size(), step.window_n)) {
          throw Error(ErrorCode::EmptyWindow,
                      "window(" + std::to_string(step.window_n) + ") with " +
                          std::to_string(stream.size()) + " samples");
        }
        stream.erase(stream.begin(),
                     stream.end() - static_cast<ptrdiff_t>(step.window_n));
        break;
      }
      case PipelineStep::Op::Mean:
      case PipelineStep::Op::Min:
      case PipelineStep::Op::Max:
        stream = aggregate(step.op, std::move(stream));
        break;
      case PipelineStep::Op::Map: {
        for (auto& doc : stream) {
          std::map<std::string, double> env;
          for (const auto& [name, value] : doc.fields) {
            double v;
            if (doc_value_as_number(value, v)) env[name] = v;
          }
          doc.fields[step.target] = step.expr->eval(env);
        }
        break;
      }
      case PipelineStep::Op::Filter: {
        std::vector<ServiceDoc> kept;
        kept.reserve(stream.size());
        for (auto& doc : stream) {
          if (filter_keeps(step, doc)) kept.push_back(std::move(doc));
        }
        stream = std::move(kept);
        break;
      }
      case PipelineStep::Op::RegexExtract: {
        std::vector<ServiceDoc> kept;
        kept.reserve(stream.size());
        for (auto& doc : stream) {
          auto it = doc.fields.find(step.from_field);
          const std::string* text =
              it == doc.fields.end() ? nullptr
                                     : std::get_if<std::string>(&it->second);
          if (!text) continue;
          std::smatch m;
          if (!std::regex_search(*text, m, *step.regex) ||
              step.group >= static_cast<int>(m.size())) {
            continue;
          }
          doc.fields[step.to_field] = m[step.group].str();
          kept.push_back(std::move(doc));
        }
        stream = std::move(kept);
        break;
      }
      case PipelineStep::Op::Select: {
        for (auto& doc : stream) {
          std::map<std::string, DocValue> projected;
          for (const auto& name : step.fields) {
            auto it = doc.fields.find(name);
            if (it == doc.fields.end()) {
              throw Error(ErrorCode::SchemaMismatch,
                          "select: field '" + name + "' missing");
            }
            projected[name] = it->second;
          }
          doc.fields = std::move(projected);
        }
        break;
      }
    }
  }
  if (stream.empty()) {
    throw Error(ErrorCode::EmptyWindow, "pipeline produced no documents");
  }
  return std::move(stream.back());
}

}  // namespace shellforge::engine
