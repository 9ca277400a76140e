#include "shellforge/engine/expr.hpp"

#include <cctype>
#include <charconv>
#include <vector>

#include "shellforge/util/error.hpp"

namespace shellforge::engine {

struct ArithExpr::Node {
  enum class Kind { Literal, Field, Add, Sub, Mul, Div } kind;
  double literal = 0;
  std::string field;
  std::shared_ptr<const Node> lhs, rhs;
};

namespace {

using Node = ArithExpr::Node;
using NodePtr = std::shared_ptr<const Node>;

class Parser {
public:
  explicit Parser(std::string_view text) : text_(text) {}

  NodePtr run() {
    NodePtr n = sum();
    skip_ws();
    if (pos_ != text_.size()) {
      fail("unexpected trailing input");
    }
    return n;
  }

private:
  [[noreturn]] void fail(const std::string& what) {
    throw Error(ErrorCode::ParseError,
                "expression '" + std::string(text_) + "': " + what);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(uint8_t(text_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr sum() {
    NodePtr lhs = product();
    for (;;) {
      if (eat('+')) lhs = binary(Node::Kind::Add, lhs, product());
      else if (eat('-')) lhs = binary(Node::Kind::Sub, lhs, product());
      else return lhs;
    }
  }

  NodePtr product() {
    NodePtr lhs = unary();
    for (;;) {
      if (eat('*')) lhs = binary(Node::Kind::Mul, lhs, unary());
      else if (eat('/')) lhs = binary(Node::Kind::Div, lhs, unary());
      else return lhs;
    }
  }

  NodePtr unary() {
    if (eat('-')) {
      auto zero = std::make_shared<Node>();
      zero->kind = Node::Kind::Literal;
      zero->literal = 0;
      return binary(Node::Kind::Sub, zero, unary());
    }
    return atom();
  }

  NodePtr atom() {
    skip_ws();
    if (eat('(')) {
      NodePtr n = sum();
      if (!eat(')')) fail("missing ')'");
      return n;
    }
    if (pos_ >= text_.size()) fail("unexpected end of input");
    char c = text_[pos_];
    if (std::isdigit(uint8_t(c)) || c == '.') {
      size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isdigit(uint8_t(text_[pos_])) || text_[pos_] == '.' ||
              text_[pos_] == 'e' || text_[pos_] == 'E' ||
              ((text_[pos_] == '+' || text_[pos_] == '-') &&
               (text_[pos_ - 1] == 'e' || text_[pos_ - 1] == 'E')))) {
        ++pos_;
      }
      double v = 0;
      auto [p, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, v);
      if (ec != std::errc() || p != text_.data() + pos_) {
        fail("bad numeric literal");
      }
      auto n = std::make_shared<Node>();
      n->kind = Node::Kind::Literal;
      n->literal = v;
      return n;
    }
    if (std::isalpha(uint8_t(c)) || c == '_') {
      size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(uint8_t(text_[pos_])) || text_[pos_] == '_')) {
        ++pos_;
      }
      auto n = std::make_shared<Node>();
      n->kind = Node::Kind::Field;
      n->field = std::string(text_.substr(start, pos_ - start));
      return n;
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  static NodePtr binary(Node::Kind kind, NodePtr lhs, NodePtr rhs) {
    auto n = std::make_shared<Node>();
    n->kind = kind;
    n->lhs = std::move(lhs);
    n->rhs = std::move(rhs);
    return n;
  }

  std::string_view text_;
  size_t pos_ = 0;
};

double eval_node(const Node& n, const std::map<std::string, double>& fields) {
  switch (n.kind) {
    case Node::Kind::Literal: return n.literal;
    case Node::Kind::Field: {
      auto it = fields.find(n.field);
      if (it == fields.end()) {
        throw Error(ErrorCode::SchemaMismatch,
                    "expression references unknown field '" + n.field + "'");
      }
      return it->second;
    }
    case Node::Kind::Add: return eval_node(*n.lhs, fields) + eval_node(*n.rhs, fields);
    case Node::Kind::Sub: return eval_node(*n.lhs, fields) - eval_node(*n.rhs, fields);
    case Node::Kind::Mul: return eval_node(*n.lhs, fields) * eval_node(*n.rhs, fields);
    case Node::Kind::Div: return eval_node(*n.lhs, fields) / eval_node(*n.rhs, fields);
  }
  return 0;
}

}  // namespace

ArithExpr ArithExpr::parse(std::string_view text) {
  ArithExpr e;
  e.root_ = Parser(text).run();
  e.text_ = std::string(text);
  return e;
}

double ArithExpr::eval(const std::map<std::string, double>& fields) const {
  return eval_node(*root_, fields);
}

}  // namespace shellforge::engine
