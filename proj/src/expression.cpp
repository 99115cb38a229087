#include "heis/expression.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <vector>

namespace heis {

struct Expression::Node {
  enum class Kind { number, name, unary, binary, call } kind;
  double number = 0.0;
  std::string name;  // variable, operator or function
  std::vector<std::shared_ptr<const Node>> args;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Kind = Expression::Node::Kind;

NodePtr make(Kind k, std::string name, std::vector<NodePtr> args = {}, double num = 0.0) {
  auto n = std::make_shared<Expression::Node>();
  n->kind = k;
  n->name = std::move(name);
  n->args = std::move(args);
  n->number = num;
  return n;
}

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodePtr parse() {
    NodePtr n = parse_or();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return n;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ExpressionError("cannot parse \"" + s_ + "\" at offset " + std::to_string(pos_) +
                          ": " + what);
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(std::string_view tok) {
    skip();
    if (s_.compare(pos_, tok.size(), tok) != 0) return false;
    pos_ += tok.size();
    return true;
  }

  NodePtr parse_or() {
    NodePtr l = parse_and();
    while (eat("||")) l = make(Kind::binary, "||", {l, parse_and()});
    return l;
  }
  NodePtr parse_and() {
    NodePtr l = parse_cmp();
    while (eat("&&")) l = make(Kind::binary, "&&", {l, parse_cmp()});
    return l;
  }
  NodePtr parse_cmp() {
    NodePtr l = parse_sum();
    for (const char* op : {"<=", ">=", "==", "!=", "<", ">"}) {
      if (eat(op)) return make(Kind::binary, op, {l, parse_sum()});
    }
    return l;
  }
  NodePtr parse_sum() {
    NodePtr l = parse_prod();
    for (;;) {
      if (eat("+")) l = make(Kind::binary, "+", {l, parse_prod()});
      else if (eat("-")) l = make(Kind::binary, "-", {l, parse_prod()});
      else return l;
    }
  }
  NodePtr parse_prod() {
    NodePtr l = parse_unary();
    for (;;) {
      if (eat("*")) l = make(Kind::binary, "*", {l, parse_unary()});
      else if (eat("/")) l = make(Kind::binary, "/", {l, parse_unary()});
      else return l;
    }
  }
  NodePtr parse_unary() {
    if (eat("-")) return make(Kind::unary, "-", {parse_unary()});
    skip();
    if (pos_ < s_.size() && s_[pos_] == '!' && s_.compare(pos_, 2, "!=") != 0) {
      ++pos_;
      return make(Kind::unary, "!", {parse_unary()});
    }
    NodePtr base = parse_atom();
    if (eat("^")) return make(Kind::binary, "^", {base, parse_unary()});
    return base;
  }
  NodePtr parse_atom() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr n = parse_or();
      if (!eat(")")) fail("expected ')'");
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      double v = 0.0;
      const auto [end, ec] = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), v);
      if (ec != std::errc()) fail("bad number");
      pos_ = static_cast<std::size_t>(end - s_.data());
      return make(Kind::number, "", {}, v);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
        ++pos_;
      std::string name = s_.substr(start, pos_ - start);
      if (eat("(")) {
        std::vector<NodePtr> args;
        if (!eat(")")) {
          do args.push_back(parse_or());
          while (eat(","));
          if (!eat(")")) fail("expected ')' after arguments");
        }
        return make(Kind::call, std::move(name), std::move(args));
      }
      return make(Kind::name, std::move(name));
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

bool near_equal(double a, double b) {
  if (a == b) return true;
  return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b));
}

double eval_node(const Expression::Node& n, const Expression::Vars& vars) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  switch (n.kind) {
    case Kind::number:
      return n.number;
    case Kind::name: {
      if (auto it = vars.find(n.name); it != vars.end()) return it->second;
      if (n.name == "inf") return inf;
      throw UnboundName(n.name);
    }
    case Kind::unary: {
      const double v = eval_node(*n.args[0], vars);
      return n.name == "-" ? -v : (v == 0.0 ? 1.0 : 0.0);
    }
    case Kind::binary: {
      const double a = eval_node(*n.args[0], vars);
      if (n.name == "&&" && a == 0.0) return 0.0;
      if (n.name == "||" && a != 0.0) return 1.0;
      const double b = eval_node(*n.args[1], vars);
      const std::string& op = n.name;
      if (op == "+") return a + b;
      if (op == "-") return a - b;
      if (op == "*") return a * b;
      if (op == "/") return a / b;
      if (op == "^") return std::pow(a, b);
      if (op == "<") return a < b && !near_equal(a, b);
      if (op == ">") return a > b && !near_equal(a, b);
      if (op == "<=") return a <= b || near_equal(a, b);
      if (op == ">=") return a >= b || near_equal(a, b);
      if (op == "==") return near_equal(a, b);
      if (op == "!=") return !near_equal(a, b);
      return b != 0.0;  // && and || after short-circuit
    }
    case Kind::call: {
      std::vector<double> a;
      for (const auto& arg : n.args) a.push_back(eval_node(*arg, vars));
      auto arity = [&](std::size_t k) {
        if (a.size() != k)
          throw ExpressionError(n.name + " expects " + std::to_string(k) + " argument(s)");
      };
      if (n.name == "abs") return arity(1), std::abs(a[0]);
      if (n.name == "min") return arity(2), std::min(a[0], a[1]);
      if (n.name == "max") return arity(2), std::max(a[0], a[1]);
      if (n.name == "dual") {
        arity(1);
        if (std::isinf(a[0])) return 1.0;
        return a[0] == 1.0 ? inf : a[0] / (a[0] - 1.0);
      }
      if (n.name == "rh_factor") {
        arity(1);
        return std::isinf(a[0]) ? 1.0 : a[0] / (a[0] - 1.0);
      }
      throw ExpressionError("unknown function '" + n.name + "'");
    }
  }
  return 0.0;
}

}  // namespace

Expression::Expression(const std::string& text) : text_(text), root_(Parser(text_).parse()) {}

double Expression::eval(const Vars& vars) const { return eval_node(*root_, vars); }

}  // namespace heis
