#pragma once

#include <map>
#include <memory>
#include <stdexcept>
#include <string>

namespace heis {

// Arithmetic over named reals, used by the constant catalog. Grammar:
//   or  := and ('||' and)*      and := cmp ('&&' cmp)*
//   cmp := sum (op sum)?        op  := < <= > >= == !=
//   sum := prod (('+'|'-') prod)*
//   prod := unary (('*'|'/') unary)*
//   unary := ('-'|'!') unary | power      power := atom ('^' unary)?
//   atom := number | name | name '(' args ')' | '(' or ')'
// Booleans are 1/0. '==' compares with relative tolerance 1e-12. `inf` is a
// name. Functions: abs, min, max, dual(s) = s/(s-1), rh_factor(r) (1 for inf).
class Expression {
 public:
  using Vars = std::map<std::string, double, std::less<>>;

  explicit Expression(const std::string& text);
  double eval(const Vars& vars) const;
  const std::string& text() const { return text_; }

  struct Node;

 private:
  std::string text_;
  std::shared_ptr<const Node> root_;
};

struct ExpressionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when an expression names a variable that is not bound.
struct UnboundName : ExpressionError {
  std::string name;
  explicit UnboundName(std::string n)
      : ExpressionError("unbound name '" + n + "'"), name(std::move(n)) {}
};

}  // namespace heis
