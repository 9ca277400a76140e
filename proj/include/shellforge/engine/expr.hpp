#pragma once

#include <map>
#include <memory>
#include <string>
#include <string_view>

namespace shellforge::engine {

// Arithmetic over field names and numeric literals with + - * / and
// parentheses. IEEE doubles, left-to-right association.
class ArithExpr {
public:
  // Throws Error{ParseError} on syntax errors.
  static ArithExpr parse(std::string_view text);

  // Throws Error{SchemaMismatch} when a referenced field is missing from
  // the environment.
  double eval(const std::map<std::string, double>& fields) const;

  const std::string& text() const { return text_; }

  struct Node;

private:
  std::shared_ptr<const Node> root_;
  std::string text_;
};

}  // namespace shellforge::engine
