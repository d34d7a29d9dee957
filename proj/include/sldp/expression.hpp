#pragma once

// A small expression language for dynamics, running costs and exact value
// functions.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' ['-'] primary)*          (left associative)
//   primary := number | 'pi' | y<i> | u<i> | name '(' expr [',' expr] ')' | '(' expr ')'
//
// Variables are 1-based: y1..yn are states, u1..um are controls. Functions:
// sin cos exp log (unary), abs, min max (binary). abs, min and max cannot be
// differentiated.

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace sldp {

enum class VarKind { State, Control };

struct Variable {
  VarKind kind;
  std::size_t index;  // 0-based

  bool operator==(const Variable&) const = default;
  std::string name() const;
};

class Expression {
 public:
  enum class Op { Const, Var, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Exp, Log, Abs, Min, Max };

  Expression();  // the constant 0

  static Expression constant(double c);
  static Expression variable(Variable v);

  Op op() const noexcept;
  double constant_value() const;  // only for Op::Const
  const Variable& var() const;    // only for Op::Var
  const Expression& lhs() const;  // first operand
  const Expression& rhs() const;  // second operand of binary nodes

  double eval(std::span<const double> y, std::span<const double> u) const;

  /// True when the expression mentions v.
  bool depends_on(const Variable& v) const;
  /// 1 + largest state / control index used (0 when unused).
  std::size_t state_arity() const;
  std::size_t control_arity() const;

  bool is_constant() const noexcept { return op() == Op::Const; }

  /// Fully parenthesized text that parses back to an identical tree.
  std::string to_string() const;

  // Builders with light constant folding (used by differentiate).
  friend Expression operator+(const Expression& a, const Expression& b);
  friend Expression operator-(const Expression& a, const Expression& b);
  friend Expression operator*(const Expression& a, const Expression& b);
  friend Expression operator/(const Expression& a, const Expression& b);
  friend Expression operator-(const Expression& a);
  static Expression pow(const Expression& a, const Expression& b);
  static Expression unary(Op fn, const Expression& a);
  static Expression binary(Op fn, const Expression& a, const Expression& b);
  /// Builds a node verbatim, without folding (the parser uses this so that
  /// printed text mirrors the source tree).
  static Expression make_node(Op op, const Expression& a,
                              const std::optional<Expression>& b = std::nullopt);

 private:
  struct Node;
  explicit Expression(std::shared_ptr<const Node> node);
  std::shared_ptr<const Node> node_;
};

/// Parses text. Throws ExpressionError carrying the 0-based offending position.
/// When max_states / max_controls are given, variables beyond them are
/// rejected as unknown identifiers.
Expression parse_expression(std::string_view text, std::size_t max_states = 0,
                            std::size_t max_controls = 0);

/// Symbolic partial derivative. Throws ExpressionError naming the node when
/// abs/min/max sit on a path that depends on var.
Expression differentiate(const Expression& expr, const Variable& var);

}  // namespace sldp
