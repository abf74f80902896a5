#pragma once

// Closed-form scalar expressions with exact first and second derivatives,
// and constant-degree differential forms whose coefficients are such
// expressions.

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "morse/errors.hpp"
#include "morse/types.hpp"

namespace morse::expr {

enum class Op : std::uint8_t { Const, Var, Add, Sub, Mul, Div, Neg, Pow, Sin, Cos, Exp, Log, Sqrt };

/// One node of a flattened expression tree. Children always precede their parent.
struct Node {
  Op op = Op::Const;
  int lhs = -1;
  int rhs = -1;
  double constant = 0.0;
  int index = 0;  // variable index for Var, integer exponent for Pow
};

/// Value, gradient and Hessian of a scalar expression at a point.
struct JetValue {
  double value = 0.0;
  Vec gradient;
  Mat hessian;
};

/// Immutable expression over variables x1..xN. Copies share the node storage.
class ScalarExpression {
 public:
  ScalarExpression() = default;
  ScalarExpression(std::shared_ptr<const std::vector<Node>> nodes, int num_vars);

  static ScalarExpression constant(double c, int num_vars);
  static ScalarExpression variable(int index, int num_vars);

  int num_vars() const noexcept { return num_vars_; }
  bool empty() const noexcept { return !nodes_ || nodes_->empty(); }
  const std::vector<Node>& nodes() const { return *nodes_; }
  int root() const noexcept { return static_cast<int>(nodes_->size()) - 1; }

  /// True when the expression folded to a constant; c receives its value.
  bool is_constant(double* c = nullptr) const;

  /// Canonical text; parse(to_string()) reproduces the same text.
  std::string to_string() const;

 private:
  std::shared_ptr<const std::vector<Node>> nodes_;
  int num_vars_ = 0;
};

ScalarExpression operator+(const ScalarExpression& a, const ScalarExpression& b);
ScalarExpression operator-(const ScalarExpression& a, const ScalarExpression& b);
ScalarExpression operator*(const ScalarExpression& a, const ScalarExpression& b);
ScalarExpression operator-(const ScalarExpression& a);
ScalarExpression operator*(double s, const ScalarExpression& a);

/// Parses text over x1..xN (aliases x, y, z, w when N <= 4), real literals,
/// the constant pi, + - * / ^(integer), unary -, and sin cos exp log sqrt pow.
ScalarExpression parse(std::string_view text, int num_vars);

/// Value only. Throws DomainError outside the domain of log/sqrt/division.
double evaluate(const ScalarExpression& e, const Vec& point);

/// Value, gradient and Hessian by second-order forward-mode differentiation.
JetValue eval_jet(const ScalarExpression& e, const Vec& point);

/// Value and gradient only (Hessian left empty).
JetValue eval_gradient(const ScalarExpression& e, const Vec& point);

/// Symbolic partial derivative with respect to variable `var` (0-based).
ScalarExpression differentiate(const ScalarExpression& e, int var);

// ---------------------------------------------------------------------------
// Differential forms with expression coefficients, in ambient coordinates.

using MultiIndex = std::vector<int>;

class FormExpression {
 public:
  FormExpression() = default;
  FormExpression(int degree, int num_vars);

  /// Degree-0 form equal to f.
  static FormExpression function(const ScalarExpression& f);

  /// Adds coeff * dx_{i1} ^ ... ^ dx_{ik}. The index is sorted with the
  /// permutation sign applied; repeated entries make the term vanish.
  void add_term(MultiIndex index, const ScalarExpression& coeff);

  int degree() const noexcept { return degree_; }
  int num_vars() const noexcept { return num_vars_; }
  const std::map<MultiIndex, ScalarExpression>& terms() const noexcept { return terms_; }
  bool is_zero() const noexcept { return terms_.empty(); }

  std::string to_string() const;

 private:
  int degree_ = 0;
  int num_vars_ = 0;
  std::map<MultiIndex, ScalarExpression> terms_;
};

FormExpression operator+(const FormExpression& a, const FormExpression& b);
FormExpression operator*(double s, const FormExpression& a);

/// Parses a form from (monomial, coefficient) pairs. Monomials are written
/// "dx^dy", "dx1^dx3", or "1" for a function.
FormExpression parse_form(const std::vector<std::pair<std::string, std::string>>& terms, int num_vars);

/// Evaluates the form at `point` on the columns of `vectors` (N x k).
double eval_form(const FormExpression& form, const Vec& point, const Mat& vectors);

FormExpression wedge(const FormExpression& a, const FormExpression& b);

/// Symbolic exterior derivative in ambient coordinates. Top-degree forms
/// have no representable derivative and throw DimensionError.
FormExpression exterior_derivative(const FormExpression& form);

/// Determinant of the k x k minor of `vectors` made of the given rows.
double minor_determinant(const Mat& vectors, const MultiIndex& rows);

}  // namespace morse::expr
