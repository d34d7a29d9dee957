#include "sldp/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "sldp/error.hpp"

namespace sldp {

std::string Variable::name() const {
  return (kind == VarKind::State ? "y" : "u") + std::to_string(index + 1);
}

struct Expression::Node {
  Op op = Op::Const;
  double value = 0.0;
  Variable var{VarKind::State, 0};
  std::vector<Expression> args;
};

namespace {

using Op = Expression::Op;

bool is_unary_fn(Op op) {
  return op == Op::Sin || op == Op::Cos || op == Op::Exp || op == Op::Log || op == Op::Abs;
}
bool is_binary_fn(Op op) { return op == Op::Min || op == Op::Max; }

const char* fn_name(Op op) {
  switch (op) {
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Abs: return "abs";
    case Op::Min: return "min";
    case Op::Max: return "max";
    default: return "?";
  }
}

char op_symbol(Op op) {
  switch (op) {
    case Op::Add: return '+';
    case Op::Sub: return '-';
    case Op::Mul: return '*';
    case Op::Div: return '/';
    case Op::Pow: return '^';
    default: return '?';
  }
}

std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

Expression::Expression() : Expression(constant(0.0)) {}

Expression::Expression(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

Expression Expression::constant(double c) {
  auto n = std::make_shared<Node>();
  n->op = Op::Const;
  n->value = c;
  return Expression(std::move(n));
}

Expression Expression::variable(Variable v) {
  auto n = std::make_shared<Node>();
  n->op = Op::Var;
  n->var = v;
  return Expression(std::move(n));
}

Expression::Op Expression::op() const noexcept { return node_->op; }

double Expression::constant_value() const {
  if (node_->op != Op::Const) throw std::logic_error("not a constant");
  return node_->value;
}

const Variable& Expression::var() const {
  if (node_->op != Op::Var) throw std::logic_error("not a variable");
  return node_->var;
}

const Expression& Expression::lhs() const {
  if (node_->args.empty()) throw std::logic_error("leaf node has no operands");
  return node_->args[0];
}

const Expression& Expression::rhs() const {
  if (node_->args.size() < 2) throw std::logic_error("node has no second operand");
  return node_->args[1];
}

Expression Expression::make_node(Op op, const Expression& a, const std::optional<Expression>& b) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->args.push_back(a);
  if (b) n->args.push_back(*b);
  return Expression(std::move(n));
}

double Expression::eval(std::span<const double> y, std::span<const double> u) const {
  const Node& n = *node_;
  switch (n.op) {
    case Op::Const: return n.value;
    case Op::Var: {
      const auto& src = n.var.kind == VarKind::State ? y : u;
      if (n.var.index >= src.size()) throw InvalidArgument("variable " + n.var.name() + " is not bound");
      return src[n.var.index];
    }
    case Op::Neg: return -n.args[0].eval(y, u);
    case Op::Add: return n.args[0].eval(y, u) + n.args[1].eval(y, u);
    case Op::Sub: return n.args[0].eval(y, u) - n.args[1].eval(y, u);
    case Op::Mul: return n.args[0].eval(y, u) * n.args[1].eval(y, u);
    case Op::Div: return n.args[0].eval(y, u) / n.args[1].eval(y, u);
    case Op::Pow: {
      const double base = n.args[0].eval(y, u);
      const Node& e = *n.args[1].node_;
      if (e.op == Op::Const && e.value == 2.0) return base * base;
      return std::pow(base, n.args[1].eval(y, u));
    }
    case Op::Sin: return std::sin(n.args[0].eval(y, u));
    case Op::Cos: return std::cos(n.args[0].eval(y, u));
    case Op::Exp: return std::exp(n.args[0].eval(y, u));
    case Op::Log: return std::log(n.args[0].eval(y, u));
    case Op::Abs: return std::abs(n.args[0].eval(y, u));
    case Op::Min: return std::min(n.args[0].eval(y, u), n.args[1].eval(y, u));
    case Op::Max: return std::max(n.args[0].eval(y, u), n.args[1].eval(y, u));
  }
  return 0.0;
}

bool Expression::depends_on(const Variable& v) const {
  if (node_->op == Op::Var) return node_->var == v;
  for (const auto& c : node_->args)
    if (c.depends_on(v)) return true;
  return false;
}

std::size_t Expression::state_arity() const {
  if (node_->op == Op::Var) return node_->var.kind == VarKind::State ? node_->var.index + 1 : 0;
  std::size_t a = 0;
  for (const auto& c : node_->args) a = std::max(a, c.state_arity());
  return a;
}

std::size_t Expression::control_arity() const {
  if (node_->op == Op::Var) return node_->var.kind == VarKind::Control ? node_->var.index + 1 : 0;
  std::size_t a = 0;
  for (const auto& c : node_->args) a = std::max(a, c.control_arity());
  return a;
}

std::string Expression::to_string() const {
  const Node& n = *node_;
  switch (n.op) {
    case Op::Const:
      return n.value < 0.0 || std::signbit(n.value) ? "(" + format_number(n.value) + ")"
                                                     : format_number(n.value);
    case Op::Var: return n.var.name();
    case Op::Neg: return "(-" + lhs().to_string() + ")";
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div:
    case Op::Pow:
      return "(" + lhs().to_string() + " " + op_symbol(n.op) + " " + rhs().to_string() + ")";
    default:
      if (is_binary_fn(n.op))
        return std::string(fn_name(n.op)) + "(" + lhs().to_string() + ", " + rhs().to_string() + ")";
      return std::string(fn_name(n.op)) + "(" + lhs().to_string() + ")";
  }
}

Expression operator+(const Expression& a, const Expression& b) {
  if (a.is_constant() && b.is_constant()) return Expression::constant(a.constant_value() + b.constant_value());
  if (a.is_constant() && a.constant_value() == 0.0) return b;
  if (b.is_constant() && b.constant_value() == 0.0) return a;
  return Expression::make_node(Op::Add, a, b);
}

Expression operator-(const Expression& a, const Expression& b) {
  if (a.is_constant() && b.is_constant()) return Expression::constant(a.constant_value() - b.constant_value());
  if (b.is_constant() && b.constant_value() == 0.0) return a;
  if (a.is_constant() && a.constant_value() == 0.0) return -b;
  return Expression::make_node(Op::Sub, a, b);
}

Expression operator*(const Expression& a, const Expression& b) {
  if (a.is_constant() && b.is_constant()) return Expression::constant(a.constant_value() * b.constant_value());
  if ((a.is_constant() && a.constant_value() == 0.0) || (b.is_constant() && b.constant_value() == 0.0))
    return Expression::constant(0.0);
  if (a.is_constant() && a.constant_value() == 1.0) return b;
  if (b.is_constant() && b.constant_value() == 1.0) return a;
  return Expression::make_node(Op::Mul, a, b);
}

Expression operator/(const Expression& a, const Expression& b) {
  if (a.is_constant() && b.is_constant() && b.constant_value() != 0.0)
    return Expression::constant(a.constant_value() / b.constant_value());
  if (a.is_constant() && a.constant_value() == 0.0) return Expression::constant(0.0);
  if (b.is_constant() && b.constant_value() == 1.0) return a;
  return Expression::make_node(Op::Div, a, b);
}

Expression operator-(const Expression& a) {
  if (a.is_constant()) return Expression::constant(-a.constant_value());
  if (a.op() == Op::Neg) return a.lhs();
  return Expression::make_node(Op::Neg, a);
}

Expression Expression::pow(const Expression& a, const Expression& b) {
  if (b.is_constant() && b.constant_value() == 1.0) return a;
  if (b.is_constant() && b.constant_value() == 0.0) return constant(1.0);
  if (a.is_constant() && b.is_constant()) return constant(std::pow(a.constant_value(), b.constant_value()));
  return make_node(Op::Pow, a, b);
}

Expression Expression::unary(Op fn, const Expression& a) {
  if (!is_unary_fn(fn)) throw std::logic_error("not a unary function");
  return make_node(fn, a);
}

Expression Expression::binary(Op fn, const Expression& a, const Expression& b) {
  if (!is_binary_fn(fn)) throw std::logic_error("not a binary function");
  return make_node(fn, a, b);
}

namespace {


// ---------------------------------------------------------------------------
// Parser

class Parser {
 public:
  Parser(std::string_view text, std::size_t max_states, std::size_t max_controls)
      : text_(text), max_states_(max_states), max_controls_(max_controls) {}

  Expression parse() {
    skip_ws();
    if (pos_ >= text_.size()) throw ExpressionError("empty expression", pos_);
    Expression e = parse_expr();
    skip_ws();
    if (pos_ < text_.size())
      throw ExpressionError(std::string("unexpected '") + text_[pos_] + "' at position " +
                                std::to_string(pos_),
                            pos_);
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    skip_ws();
    if (pos_ >= text_.size())
      throw ExpressionError(std::string("expected '") + c + "' at end of input", pos_);
    if (text_[pos_] != c)
      throw ExpressionError(std::string("expected '") + c + "' but found '" + text_[pos_] +
                                "' at position " + std::to_string(pos_),
                            pos_);
    ++pos_;
  }

  Expression parse_expr() {
    Expression lhs = parse_term();
    for (;;) {
      if (accept('+')) lhs = Expression::make_node(Op::Add, lhs, parse_term());
      else if (accept('-')) lhs = Expression::make_node(Op::Sub, lhs, parse_term());
      else return lhs;
    }
  }

  Expression parse_term() {
    Expression lhs = parse_unary();
    for (;;) {
      if (accept('*')) lhs = Expression::make_node(Op::Mul, lhs, parse_unary());
      else if (accept('/')) lhs = Expression::make_node(Op::Div, lhs, parse_unary());
      else return lhs;
    }
  }

  Expression parse_unary() {
    if (accept('-')) return Expression::make_node(Op::Neg, parse_unary());
    return parse_power();
  }

  Expression parse_power() {
    Expression lhs = parse_primary();
    while (accept('^')) {
      Expression rhs = accept('-') ? Expression::make_node(Op::Neg, parse_primary()) : parse_primary();
      lhs = Expression::make_node(Op::Pow, lhs, rhs);
    }
    return lhs;
  }

  Expression parse_primary() {
    skip_ws();
    if (pos_ >= text_.size()) throw ExpressionError("unexpected end of input", pos_);
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Expression e = parse_expr();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    throw ExpressionError(std::string("unexpected '") + c + "' at position " + std::to_string(pos_),
                          pos_);
  }

  Expression parse_number() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
      ++pos_;
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < text_.size() && (text_[p] == '+' || text_[p] == '-')) ++p;
      if (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) {
        pos_ = p;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      }
    }
    const std::string token(text_.substr(start, pos_ - start));
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != token.size())
      throw ExpressionError("malformed number '" + token + "' at position " + std::to_string(start),
                            start);
    return Expression::constant(value);
  }

  Expression parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    const std::string name(text_.substr(start, pos_ - start));

    static const std::pair<const char*, Op> functions[] = {
        {"sin", Op::Sin}, {"cos", Op::Cos}, {"exp", Op::Exp}, {"log", Op::Log},
        {"abs", Op::Abs}, {"min", Op::Min}, {"max", Op::Max}};
    for (const auto& [fname, op] : functions) {
      if (name != fname) continue;
      skip_ws();
      if (pos_ >= text_.size() || text_[pos_] != '(')
        throw ExpressionError("function '" + name + "' must be called with parentheses", pos_);
      ++pos_;
      std::vector<Expression> args{parse_expr()};
      while (accept(',')) args.push_back(parse_expr());
      expect(')');
      const std::size_t want = is_binary_fn(op) ? 2 : 1;
      if (args.size() != want)
        throw ExpressionError("function '" + name + "' takes " + std::to_string(want) +
                                  " argument(s), got " + std::to_string(args.size()),
                              start);
      return want == 2 ? Expression::make_node(op, args[0], args[1]) : Expression::make_node(op, args[0]);
    }

    if (name == "pi") return Expression::constant(std::numbers::pi);

    if (name.size() >= 2 && (name[0] == 'y' || name[0] == 'u')) {
      bool digits = true;
      for (std::size_t i = 1; i < name.size(); ++i)
        digits = digits && std::isdigit(static_cast<unsigned char>(name[i]));
      if (digits && name[1] != '0') {
        const std::size_t index = std::stoul(name.substr(1));
        const bool state = name[0] == 'y';
        const std::size_t limit = state ? max_states_ : max_controls_;
        if (limit != 0 && index > limit)
          throw ExpressionError("unknown identifier '" + name + "' at position " +
                                    std::to_string(start) + " (only " + std::to_string(limit) + " " +
                                    (state ? "state" : "control") + " variables)",
                                start);
        return Expression::variable({state ? VarKind::State : VarKind::Control, index - 1});
      }
    }
    throw ExpressionError("unknown identifier '" + name + "' at position " + std::to_string(start),
                          start);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t max_states_;
  std::size_t max_controls_;
};

}  // namespace

Expression parse_expression(std::string_view text, std::size_t max_states, std::size_t max_controls) {
  return Parser(text, max_states, max_controls).parse();
}

Expression differentiate(const Expression& e, const Variable& v) {
  using E = Expression;
  if (!e.depends_on(v)) return E::constant(0.0);
  switch (e.op()) {
    case Op::Const: return E::constant(0.0);
    case Op::Var: return E::constant(e.var() == v ? 1.0 : 0.0);
    case Op::Neg: return -differentiate(e.lhs(), v);
    case Op::Add: return differentiate(e.lhs(), v) + differentiate(e.rhs(), v);
    case Op::Sub: return differentiate(e.lhs(), v) - differentiate(e.rhs(), v);
    case Op::Mul:
      return differentiate(e.lhs(), v) * e.rhs() + e.lhs() * differentiate(e.rhs(), v);
    case Op::Div: {
      const E& a = e.lhs();
      const E& b = e.rhs();
      return (differentiate(a, v) * b - a * differentiate(b, v)) / E::pow(b, E::constant(2.0));
    }
    case Op::Pow: {
      const E& a = e.lhs();
      const E& b = e.rhs();
      if (!b.depends_on(v)) {
        // d(a^c) = c a^(c-1) a'
        const E exponent = b.is_constant() ? E::constant(b.constant_value() - 1.0) : b - E::constant(1.0);
        return b * E::pow(a, exponent) * differentiate(a, v);
      }
      // d(a^b) = a^b (b' log a + b a' / a)
      return e * (differentiate(b, v) * E::unary(Op::Log, a) + b * differentiate(a, v) / a);
    }
    case Op::Sin: return E::unary(Op::Cos, e.lhs()) * differentiate(e.lhs(), v);
    case Op::Cos: return -(E::unary(Op::Sin, e.lhs()) * differentiate(e.lhs(), v));
    case Op::Exp: return e * differentiate(e.lhs(), v);
    case Op::Log: return differentiate(e.lhs(), v) / e.lhs();
    case Op::Abs:
    case Op::Min:
    case Op::Max:
      throw ExpressionError(std::string("cannot differentiate '") + fn_name(e.op()) +
                            "' node " + e.to_string() + " with respect to " + v.name());
  }
  return E::constant(0.0);
}

}  // namespace sldp
