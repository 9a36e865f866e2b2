#pragma once

#include "lmo/core/error.hpp"
#include "lmo/core/linalg.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

namespace lmo {

/// Arithmetic expression in x, y and r = |(x, y)| compiled once and
/// evaluated at points. Grammar:
///   expr   := term (('+' | '-') term)*
///   term   := unary (('*' | '/') unary)*
///   unary  := ('+' | '-') unary | power
///   power  := atom ('^' unary)?
///   atom   := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'
/// Names: x, y, r, pi, e. Functions: sin cos tan exp log sqrt abs tanh
/// atan, atan2(a, b), min(a, b), max(a, b), pow(a, b).
class Expression {
 public:
  explicit Expression(std::string source) : source_(std::move(source)) {
    pos_ = 0;
    root_ = parse_expr();
    skip_space();
    if (pos_ != source_.size()) fail("unexpected '" + std::string(1, source_[pos_]) + "'");
  }

  double operator()(const Point& p) const { return eval(*root_, p); }
  const std::string& source() const { return source_; }

 private:
  enum class Op { kNum, kX, kY, kR, kAdd, kSub, kMul, kDiv, kPow, kNeg, kCall };
  struct Node {
    Op op = Op::kNum;
    double value = 0.0;
    std::string name;
    std::vector<std::shared_ptr<Node>> args;
  };
  using NodePtr = std::shared_ptr<Node>;

  [[noreturn]] void fail(const std::string& what) const {
    throw InvalidInput("expression '" + source_ + "': " + what + " at offset " + std::to_string(pos_));
  }

  void skip_space() {
    while (pos_ < source_.size() && std::isspace(static_cast<unsigned char>(source_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < source_.size() && source_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  static NodePtr binary(Op op, NodePtr a, NodePtr b) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->args = {std::move(a), std::move(b)};
    return n;
  }

  NodePtr parse_expr() {
    NodePtr lhs = parse_term();
    while (true) {
      if (accept('+')) lhs = binary(Op::kAdd, lhs, parse_term());
      else if (accept('-')) lhs = binary(Op::kSub, lhs, parse_term());
      else return lhs;
    }
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_unary();
    while (true) {
      if (accept('*')) lhs = binary(Op::kMul, lhs, parse_unary());
      else if (accept('/')) lhs = binary(Op::kDiv, lhs, parse_unary());
      else return lhs;
    }
  }

  NodePtr parse_unary() {
    if (accept('+')) return parse_unary();
    if (accept('-')) {
      auto n = std::make_shared<Node>();
      n->op = Op::kNeg;
      n->args = {parse_unary()};
      return n;
    }
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_atom();
    if (accept('^')) return binary(Op::kPow, base, parse_unary());
    return base;
  }

  NodePtr parse_atom() {
    skip_space();
    if (pos_ >= source_.size()) fail("unexpected end");
    if (accept('(')) {
      NodePtr inner = parse_expr();
      if (!accept(')')) fail("missing ')'");
      return inner;
    }
    const char c = source_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = source_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) fail("bad number");
      pos_ += static_cast<std::size_t>(end - begin);
      auto n = std::make_shared<Node>();
      n->value = v;
      return n;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string name;
      while (pos_ < source_.size() && (std::isalnum(static_cast<unsigned char>(source_[pos_])) || source_[pos_] == '_')) {
        name += source_[pos_++];
      }
      auto n = std::make_shared<Node>();
      if (accept('(')) {
        n->op = Op::kCall;
        n->name = name;
        n->args.push_back(parse_expr());
        while (accept(',')) n->args.push_back(parse_expr());
        if (!accept(')')) fail("missing ')' after arguments of " + name);
        const std::size_t want = arity(name);
        if (want == 0) fail("unknown function '" + name + "'");
        if (n->args.size() != want) fail("wrong number of arguments to " + name);
        return n;
      }
      if (name == "x") n->op = Op::kX;
      else if (name == "y") n->op = Op::kY;
      else if (name == "r") n->op = Op::kR;
      else if (name == "pi") n->value = std::numbers::pi;
      else if (name == "e") n->value = std::numbers::e;
      else fail("unknown name '" + name + "'");
      return n;
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  static std::size_t arity(const std::string& f) {
    for (const char* one : {"sin", "cos", "tan", "exp", "log", "sqrt", "abs", "tanh", "atan"}) {
      if (f == one) return 1;
    }
    for (const char* two : {"atan2", "min", "max", "pow"}) {
      if (f == two) return 2;
    }
    return 0;
  }

  static double call(const std::string& f, const std::vector<double>& a) {
    if (f == "sin") return std::sin(a[0]);
    if (f == "cos") return std::cos(a[0]);
    if (f == "tan") return std::tan(a[0]);
    if (f == "exp") return std::exp(a[0]);
    if (f == "log") return std::log(a[0]);
    if (f == "sqrt") return std::sqrt(a[0]);
    if (f == "abs") return std::abs(a[0]);
    if (f == "tanh") return std::tanh(a[0]);
    if (f == "atan") return std::atan(a[0]);
    if (f == "atan2") return std::atan2(a[0], a[1]);
    if (f == "min") return std::min(a[0], a[1]);
    if (f == "max") return std::max(a[0], a[1]);
    return std::pow(a[0], a[1]);
  }

  static double eval(const Node& n, const Point& p) {
    switch (n.op) {
      case Op::kNum: return n.value;
      case Op::kX: return p.x();
      case Op::kY: return p.y();
      case Op::kR: return p.norm();
      case Op::kAdd: return eval(*n.args[0], p) + eval(*n.args[1], p);
      case Op::kSub: return eval(*n.args[0], p) - eval(*n.args[1], p);
      case Op::kMul: return eval(*n.args[0], p) * eval(*n.args[1], p);
      case Op::kDiv: return eval(*n.args[0], p) / eval(*n.args[1], p);
      case Op::kPow: return std::pow(eval(*n.args[0], p), eval(*n.args[1], p));
      case Op::kNeg: return -eval(*n.args[0], p);
      case Op::kCall: {
        std::vector<double> a;
        for (const auto& arg : n.args) a.push_back(eval(*arg, p));
        return call(n.name, a);
      }
    }
    return 0.0;
  }

  std::string source_;
  std::size_t pos_ = 0;
  NodePtr root_;
};

}  // namespace lmo
