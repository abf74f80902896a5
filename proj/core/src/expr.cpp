#include "morse/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace morse::expr {
namespace {

// Builds flattened trees with light constant folding. Node indices returned by
// the builder refer to its own storage.
class Builder {
 public:
  explicit Builder(int num_vars) : num_vars_(num_vars) {}

  int constant(double c) { return push({Op::Const, -1, -1, c, 0}); }
  int var(int i) { return push({Op::Var, -1, -1, 0.0, i}); }

  bool constant_value(int i, double* c) const {
    if (nodes_[i].op != Op::Const) return false;
    *c = nodes_[i].constant;
    return true;
  }
  bool is_value(int i, double v) const {
    double c;
    return constant_value(i, &c) && c == v;
  }

  int add(int a, int b) {
    double ca, cb;
    if (constant_value(a, &ca) && constant_value(b, &cb)) return constant(ca + cb);
    if (is_value(a, 0.0)) return b;
    if (is_value(b, 0.0)) return a;
    return push({Op::Add, a, b, 0.0, 0});
  }
  int sub(int a, int b) {
    double ca, cb;
    if (constant_value(a, &ca) && constant_value(b, &cb)) return constant(ca - cb);
    if (is_value(b, 0.0)) return a;
    if (is_value(a, 0.0)) return neg(b);
    return push({Op::Sub, a, b, 0.0, 0});
  }
  int mul(int a, int b) {
    double ca, cb;
    if (constant_value(a, &ca) && constant_value(b, &cb)) return constant(ca * cb);
    if (is_value(a, 0.0) || is_value(b, 0.0)) return constant(0.0);
    if (is_value(a, 1.0)) return b;
    if (is_value(b, 1.0)) return a;
    if (is_value(a, -1.0)) return neg(b);
    if (is_value(b, -1.0)) return neg(a);
    return push({Op::Mul, a, b, 0.0, 0});
  }
  int div(int a, int b) {
    double ca, cb;
    if (constant_value(a, &ca) && constant_value(b, &cb) && cb != 0.0) return constant(ca / cb);
    if (is_value(b, 1.0)) return a;
    return push({Op::Div, a, b, 0.0, 0});
  }
  int neg(int a) {
    double c;
    if (constant_value(a, &c)) return constant(-c);
    if (nodes_[a].op == Op::Neg) return nodes_[a].lhs;
    return push({Op::Neg, a, -1, 0.0, 0});
  }
  int pow(int a, int k) {
    double c;
    if (k == 0) return constant(1.0);
    if (k == 1) return a;
    if (constant_value(a, &c) && (c != 0.0 || k > 0)) return constant(std::pow(c, k));
    return push({Op::Pow, a, -1, 0.0, k});
  }
  int unary(Op op, int a) {
    double c;
    if (constant_value(a, &c)) {
      switch (op) {
        case Op::Sin: return constant(std::sin(c));
        case Op::Cos: return constant(std::cos(c));
        case Op::Exp: return constant(std::exp(c));
        case Op::Log:
          if (c > 0.0) return constant(std::log(c));
          break;
        case Op::Sqrt:
          if (c >= 0.0) return constant(std::sqrt(c));
          break;
        default: break;
      }
    }
    return push({op, a, -1, 0.0, 0});
  }

  /// Copies an existing expression, returning the index of its root here.
  int import(const ScalarExpression& e) {
    const auto& src = e.nodes();
    const int offset = static_cast<int>(nodes_.size());
    for (Node n : src) {
      if (n.lhs >= 0) n.lhs += offset;
      if (n.rhs >= 0) n.rhs += offset;
      nodes_.push_back(n);
    }
    return offset + e.root();
  }

  const Node& node(int i) const { return nodes_[i]; }

  /// Keeps only nodes reachable from `root`, in topological order.
  ScalarExpression finish(int root) const {
    std::vector<int> remap(nodes_.size(), -1);
    std::vector<char> live(nodes_.size(), 0);
    live[root] = 1;
    for (int i = root; i >= 0; --i) {
      if (!live[i]) continue;
      if (nodes_[i].lhs >= 0) live[nodes_[i].lhs] = 1;
      if (nodes_[i].rhs >= 0) live[nodes_[i].rhs] = 1;
    }
    auto out = std::make_shared<std::vector<Node>>();
    for (int i = 0; i <= root; ++i) {
      if (!live[i]) continue;
      Node n = nodes_[i];
      if (n.lhs >= 0) n.lhs = remap[n.lhs];
      if (n.rhs >= 0) n.rhs = remap[n.rhs];
      remap[i] = static_cast<int>(out->size());
      out->push_back(n);
    }
    return ScalarExpression(std::move(out), num_vars_);
  }

 private:
  int push(const Node& n) {
    nodes_.push_back(n);
    return static_cast<int>(nodes_.size()) - 1;
  }

  int num_vars_;
  std::vector<Node> nodes_;
};

// ---------------------------------------------------------------------------
// Parser

class Parser {
 public:
  Parser(std::string_view text, int num_vars) : text_(text), num_vars_(num_vars), b_(num_vars) {}

  ScalarExpression run() {
    skip_ws();
    if (pos_ >= text_.size()) throw ParseError("empty expression", pos_);
    int root = parse_sum();
    skip_ws();
    if (pos_ < text_.size()) throw ParseError(std::string("unexpected '") + text_[pos_] + "'", pos_);
    return b_.finish(root);
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
    if (!accept(c)) {
      if (pos_ >= text_.size()) throw ParseError(std::string("expected '") + c + "' before end of input", pos_);
      throw ParseError(std::string("expected '") + c + "'", pos_);
    }
  }

  int parse_sum() {
    int lhs = parse_product();
    for (;;) {
      if (accept('+')) {
        lhs = b_.add(lhs, parse_product());
      } else if (accept('-')) {
        lhs = b_.sub(lhs, parse_product());
      } else {
        return lhs;
      }
    }
  }

  int parse_product() {
    int lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        lhs = b_.mul(lhs, parse_unary());
      } else if (accept('/')) {
        lhs = b_.div(lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  int parse_unary() {
    if (accept('-')) return b_.neg(parse_unary());
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  int parse_power() {
    int base = parse_primary();
    while (accept('^')) base = b_.pow(base, parse_integer_exponent());
    return base;
  }

  int parse_integer_exponent() {
    skip_ws();
    const bool paren = accept('(');
    int sign = 1;
    if (accept('-')) {
      sign = -1;
    } else {
      accept('+');
    }
    skip_ws();
    const std::size_t digits = pos_;
    double value = parse_number_literal();
    if (value != std::floor(value) || std::abs(value) > 64) {
      throw ParseError("exponent must be an integer literal", digits);
    }
    if (paren) expect(')');
    return sign * static_cast<int>(value);
  }

  double parse_number_literal() {
    skip_ws();
    const std::size_t start = pos_;
    std::size_t end = pos_;
    auto is_digit = [&](std::size_t i) { return i < text_.size() && std::isdigit(static_cast<unsigned char>(text_[i])); };
    while (is_digit(end)) ++end;
    if (end < text_.size() && text_[end] == '.') {
      ++end;
      while (is_digit(end)) ++end;
    }
    if (end == start || (end == start + 1 && text_[start] == '.')) {
      if (start >= text_.size()) throw ParseError("unexpected end of input", start);
      throw ParseError(std::string("unexpected '") + text_[start] + "'", start);
    }
    if (end < text_.size() && (text_[end] == 'e' || text_[end] == 'E')) {
      std::size_t e = end + 1;
      if (e < text_.size() && (text_[e] == '+' || text_[e] == '-')) ++e;
      if (is_digit(e)) {
        while (is_digit(e)) ++e;
        end = e;
      }
    }
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + end, value);
    if (ec != std::errc() || ptr != text_.data() + end) throw ParseError("malformed number", start);
    pos_ = end;
    return value;
  }

  int parse_primary() {
    skip_ws();
    if (pos_ >= text_.size()) throw ParseError("unexpected end of input", pos_);
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      int inner = parse_sum();
      expect(')');
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return b_.constant(parse_number_literal());
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    throw ParseError(std::string("unexpected '") + c + "'", pos_);
  }

  int parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) ++pos_;
    const std::string name(text_.substr(start, pos_ - start));

    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == '(') {
      ++pos_;
      std::vector<int> args;
      std::vector<std::size_t> arg_pos;
      skip_ws();
      if (!accept(')')) {
        do {
          skip_ws();
          arg_pos.push_back(pos_);
          args.push_back(parse_sum());
        } while (accept(','));
        expect(')');
      }
      return apply_function(name, args, arg_pos, start);
    }

    if (name == "pi") return b_.constant(std::numbers::pi);
    if (int idx = variable_index(name); idx >= 0) return b_.var(idx);
    throw ParseError("unknown identifier '" + name + "'", start);
  }

  int variable_index(const std::string& name) const {
    if (num_vars_ <= 4 && name.size() == 1) {
      static constexpr std::string_view aliases = "xyzw";
      auto k = aliases.find(name[0]);
      if (k != std::string_view::npos && static_cast<int>(k) < num_vars_) return static_cast<int>(k);
    }
    if (name.size() >= 2 && name[0] == 'x') {
      int idx = 0;
      auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), idx);
      if (ec == std::errc() && ptr == name.data() + name.size() && idx >= 1 && idx <= num_vars_ && name[1] != '0') {
        return idx - 1;
      }
    }
    return -1;
  }

  int apply_function(const std::string& name, const std::vector<int>& args, const std::vector<std::size_t>& arg_pos,
                     std::size_t at) {
    struct Unary {
      const char* name;
      Op op;
    };
    static constexpr Unary unaries[] = {
        {"sin", Op::Sin}, {"cos", Op::Cos}, {"exp", Op::Exp}, {"log", Op::Log}, {"sqrt", Op::Sqrt}};
    for (const auto& u : unaries) {
      if (name == u.name) {
        if (args.size() != 1) throw ParseError("function '" + name + "' expects 1 argument", at);
        return b_.unary(u.op, args[0]);
      }
    }
    if (name == "pow") {
      if (args.size() != 2) throw ParseError("function 'pow' expects 2 arguments", at);
      double k;
      if (!b_.constant_value(args[1], &k) || k != std::floor(k) || std::abs(k) > 64) {
        throw ParseError("exponent must be an integer literal", arg_pos[1]);
      }
      return b_.pow(args[0], static_cast<int>(k));
    }
    throw ParseError("unknown function '" + name + "'", at);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int num_vars_;
  Builder b_;
};

// ---------------------------------------------------------------------------
// Printer

int precedence(Op op) {
  switch (op) {
    case Op::Add:
    case Op::Sub: return 1;
    case Op::Mul:
    case Op::Div: return 2;
    case Op::Neg: return 3;
    case Op::Pow: return 4;
    default: return 5;
  }
}

std::string format_double(double c) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", c);
  return buf;
}

std::string print_node(const std::vector<Node>& nodes, int i) {
  const Node& n = nodes[i];
  auto child = [&](int j, int min_prec) {
    std::string s = print_node(nodes, j);
    if (precedence(nodes[j].op) < min_prec || (nodes[j].op == Op::Const && nodes[j].constant < 0)) return "(" + s + ")";
    return s;
  };
  const int p = precedence(n.op);
  switch (n.op) {
    case Op::Const: return format_double(n.constant);
    case Op::Var: return "x" + std::to_string(n.index + 1);
    case Op::Add: return child(n.lhs, p) + " + " + child(n.rhs, p + 1);
    case Op::Sub: return child(n.lhs, p) + " - " + child(n.rhs, p + 1);
    case Op::Mul: return child(n.lhs, p) + "*" + child(n.rhs, p + 1);
    case Op::Div: return child(n.lhs, p) + "/" + child(n.rhs, p + 1);
    case Op::Neg: return "-" + child(n.lhs, p);
    case Op::Pow: {
      std::string e = n.index < 0 ? "(" + std::to_string(n.index) + ")" : std::to_string(n.index);
      return child(n.lhs, p + 1) + "^" + e;
    }
    case Op::Sin: return "sin(" + print_node(nodes, n.lhs) + ")";
    case Op::Cos: return "cos(" + print_node(nodes, n.lhs) + ")";
    case Op::Exp: return "exp(" + print_node(nodes, n.lhs) + ")";
    case Op::Log: return "log(" + print_node(nodes, n.lhs) + ")";
    case Op::Sqrt: return "sqrt(" + print_node(nodes, n.lhs) + ")";
  }
  return {};
}

// ---------------------------------------------------------------------------
// Forward-mode evaluation with truncated Taylor jets.

struct Jet {
  double v;
  double g[kMaxDim];
  double h[kMaxDim * kMaxDim];
};

template <int Order>
inline void unary_chain(const Jet& u, double f0, double f1, double f2, int n, Jet& out) {
  out.v = f0;
  if constexpr (Order >= 1) {
    for (int i = 0; i < n; ++i) out.g[i] = f1 * u.g[i];
  }
  if constexpr (Order >= 2) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) out.h[i * n + j] = f1 * u.h[i * n + j] + f2 * u.g[i] * u.g[j];
  }
}

template <int Order>
void run(const std::vector<Node>& nodes, const Vec& x, int n, std::vector<Jet>& s) {
  s.resize(nodes.size());
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const Node& node = nodes[k];
    Jet& out = s[k];
    switch (node.op) {
      case Op::Const:
        out.v = node.constant;
        if constexpr (Order >= 1) std::fill_n(out.g, n, 0.0);
        if constexpr (Order >= 2) std::fill_n(out.h, n * n, 0.0);
        break;
      case Op::Var:
        out.v = x[node.index];
        if constexpr (Order >= 1) {
          std::fill_n(out.g, n, 0.0);
          out.g[node.index] = 1.0;
        }
        if constexpr (Order >= 2) std::fill_n(out.h, n * n, 0.0);
        break;
      case Op::Add:
      case Op::Sub: {
        const Jet& a = s[node.lhs];
        const Jet& b = s[node.rhs];
        const double sg = node.op == Op::Add ? 1.0 : -1.0;
        out.v = a.v + sg * b.v;
        if constexpr (Order >= 1)
          for (int i = 0; i < n; ++i) out.g[i] = a.g[i] + sg * b.g[i];
        if constexpr (Order >= 2)
          for (int i = 0; i < n * n; ++i) out.h[i] = a.h[i] + sg * b.h[i];
        break;
      }
      case Op::Mul: {
        const Jet& a = s[node.lhs];
        const Jet& b = s[node.rhs];
        out.v = a.v * b.v;
        if constexpr (Order >= 1)
          for (int i = 0; i < n; ++i) out.g[i] = a.v * b.g[i] + b.v * a.g[i];
        if constexpr (Order >= 2)
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
              out.h[i * n + j] =
                  a.v * b.h[i * n + j] + b.v * a.h[i * n + j] + a.g[i] * b.g[j] + b.g[i] * a.g[j];
        break;
      }
      case Op::Div: {
        const Jet& a = s[node.lhs];
        const Jet& b = s[node.rhs];
        if (b.v == 0.0) throw DomainError("division by zero");
        const double inv = 1.0 / b.v;
        Jet r;
        unary_chain<Order>(b, inv, -inv * inv, 2.0 * inv * inv * inv, n, r);
        out.v = a.v * r.v;
        if constexpr (Order >= 1)
          for (int i = 0; i < n; ++i) out.g[i] = a.v * r.g[i] + r.v * a.g[i];
        if constexpr (Order >= 2)
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
              out.h[i * n + j] =
                  a.v * r.h[i * n + j] + r.v * a.h[i * n + j] + a.g[i] * r.g[j] + r.g[i] * a.g[j];
        break;
      }
      case Op::Neg: {
        const Jet& a = s[node.lhs];
        out.v = -a.v;
        if constexpr (Order >= 1)
          for (int i = 0; i < n; ++i) out.g[i] = -a.g[i];
        if constexpr (Order >= 2)
          for (int i = 0; i < n * n; ++i) out.h[i] = -a.h[i];
        break;
      }
      case Op::Pow: {
        const Jet& a = s[node.lhs];
        const int k = node.index;
        if (k < 0 && a.v == 0.0) throw DomainError("negative power of zero");
        const double f0 = std::pow(a.v, k);
        const double f1 = k * std::pow(a.v, k - 1);
        const double f2 = k == 1 ? 0.0 : double(k) * (k - 1) * std::pow(a.v, k - 2);
        unary_chain<Order>(a, f0, f1, f2, n, out);
        break;
      }
      case Op::Sin: {
        const Jet& a = s[node.lhs];
        const double sv = std::sin(a.v), cv = std::cos(a.v);
        unary_chain<Order>(a, sv, cv, -sv, n, out);
        break;
      }
      case Op::Cos: {
        const Jet& a = s[node.lhs];
        const double sv = std::sin(a.v), cv = std::cos(a.v);
        unary_chain<Order>(a, cv, -sv, -cv, n, out);
        break;
      }
      case Op::Exp: {
        const Jet& a = s[node.lhs];
        const double ev = std::exp(a.v);
        unary_chain<Order>(a, ev, ev, ev, n, out);
        break;
      }
      case Op::Log: {
        const Jet& a = s[node.lhs];
        if (!(a.v > 0.0)) throw DomainError("log of nonpositive value");
        unary_chain<Order>(a, std::log(a.v), 1.0 / a.v, -1.0 / (a.v * a.v), n, out);
        break;
      }
      case Op::Sqrt: {
        const Jet& a = s[node.lhs];
        if (a.v < 0.0 || (Order >= 1 && a.v == 0.0)) throw DomainError("sqrt outside its domain");
        const double r = std::sqrt(a.v);
        if constexpr (Order == 0) {
          out.v = r;
        } else {
          unary_chain<Order>(a, r, 0.5 / r, -0.25 / (r * a.v), n, out);
        }
        break;
      }
    }
  }
}

std::vector<Jet>& scratch() {
  thread_local std::vector<Jet> s;
  return s;
}

void check_point(const ScalarExpression& e, const Vec& point) {
  if (e.empty()) throw DimensionError("evaluating an empty expression");
  if (point.size() != e.num_vars()) {
    throw DimensionError("point has " + std::to_string(point.size()) + " coordinates, expression expects " +
                         std::to_string(e.num_vars()));
  }
}

}  // namespace

// ---------------------------------------------------------------------------

ScalarExpression::ScalarExpression(std::shared_ptr<const std::vector<Node>> nodes, int num_vars)
    : nodes_(std::move(nodes)), num_vars_(num_vars) {
  if (num_vars_ < 1 || num_vars_ > kMaxDim) {
    throw DimensionError("expressions support 1.." + std::to_string(kMaxDim) + " variables");
  }
}

ScalarExpression ScalarExpression::constant(double c, int num_vars) {
  Builder b(num_vars);
  return b.finish(b.constant(c));
}

ScalarExpression ScalarExpression::variable(int index, int num_vars) {
  if (index < 0 || index >= num_vars) throw DimensionError("variable index out of range");
  Builder b(num_vars);
  return b.finish(b.var(index));
}

bool ScalarExpression::is_constant(double* c) const {
  if (empty() || nodes_->back().op != Op::Const) return false;
  if (c) *c = nodes_->back().constant;
  return true;
}

std::string ScalarExpression::to_string() const {
  if (empty()) return {};
  return print_node(*nodes_, root());
}

namespace {
template <class F>
ScalarExpression combine(const ScalarExpression& a, const ScalarExpression& b, F&& f) {
  if (a.num_vars() != b.num_vars()) throw DimensionError("combining expressions over different variable counts");
  Builder builder(a.num_vars());
  const int ia = builder.import(a);
  const int ib = builder.import(b);
  return builder.finish(f(builder, ia, ib));
}
}  // namespace

ScalarExpression operator+(const ScalarExpression& a, const ScalarExpression& b) {
  return combine(a, b, [](Builder& bl, int x, int y) { return bl.add(x, y); });
}
ScalarExpression operator-(const ScalarExpression& a, const ScalarExpression& b) {
  return combine(a, b, [](Builder& bl, int x, int y) { return bl.sub(x, y); });
}
ScalarExpression operator*(const ScalarExpression& a, const ScalarExpression& b) {
  return combine(a, b, [](Builder& bl, int x, int y) { return bl.mul(x, y); });
}
ScalarExpression operator-(const ScalarExpression& a) {
  Builder builder(a.num_vars());
  return builder.finish(builder.neg(builder.import(a)));
}
ScalarExpression operator*(double s, const ScalarExpression& a) {
  return ScalarExpression::constant(s, a.num_vars()) * a;
}

ScalarExpression parse(std::string_view text, int num_vars) {
  if (num_vars < 1 || num_vars > kMaxDim) throw DimensionError("unsupported variable count");
  return Parser(text, num_vars).run();
}

double evaluate(const ScalarExpression& e, const Vec& point) {
  check_point(e, point);
  auto& s = scratch();
  run<0>(e.nodes(), point, e.num_vars(), s);
  return s[e.root()].v;
}

JetValue eval_gradient(const ScalarExpression& e, const Vec& point) {
  check_point(e, point);
  const int n = e.num_vars();
  auto& s = scratch();
  run<1>(e.nodes(), point, n, s);
  const Jet& r = s[e.root()];
  JetValue out;
  out.value = r.v;
  out.gradient.resize(n);
  for (int i = 0; i < n; ++i) out.gradient[i] = r.g[i];
  return out;
}

JetValue eval_jet(const ScalarExpression& e, const Vec& point) {
  check_point(e, point);
  const int n = e.num_vars();
  auto& s = scratch();
  run<2>(e.nodes(), point, n, s);
  const Jet& r = s[e.root()];
  JetValue out;
  out.value = r.v;
  out.gradient.resize(n);
  out.hessian.resize(n, n);
  for (int i = 0; i < n; ++i) {
    out.gradient[i] = r.g[i];
    for (int j = 0; j < n; ++j) out.hessian(i, j) = r.h[i * n + j];
  }
  // Exact symmetry; the accumulated products can differ in the last bit.
  out.hessian = 0.5 * (out.hessian + out.hessian.transpose()).eval();
  return out;
}

ScalarExpression differentiate(const ScalarExpression& e, int var) {
  if (var < 0 || var >= e.num_vars()) throw DimensionError("differentiation variable out of range");
  Builder b(e.num_vars());
  const int base = b.import(e) - e.root();
  const auto& src = e.nodes();
  std::vector<int> d(src.size());
  for (std::size_t k = 0; k < src.size(); ++k) {
    const Node& n = src[k];
    const int self = base + static_cast<int>(k);
    const int a = n.lhs >= 0 ? base + n.lhs : -1;
    const int c = n.rhs >= 0 ? base + n.rhs : -1;
    switch (n.op) {
      case Op::Const: d[k] = b.constant(0.0); break;
      case Op::Var: d[k] = b.constant(n.index == var ? 1.0 : 0.0); break;
      case Op::Add: d[k] = b.add(d[n.lhs], d[n.rhs]); break;
      case Op::Sub: d[k] = b.sub(d[n.lhs], d[n.rhs]); break;
      case Op::Neg: d[k] = b.neg(d[n.lhs]); break;
      case Op::Mul: d[k] = b.add(b.mul(d[n.lhs], c), b.mul(a, d[n.rhs])); break;
      case Op::Div:
        d[k] = b.sub(b.div(d[n.lhs], c), b.div(b.mul(a, d[n.rhs]), b.pow(c, 2)));
        break;
      case Op::Pow:
        d[k] = b.mul(b.mul(b.constant(n.index), b.pow(a, n.index - 1)), d[n.lhs]);
        break;
      case Op::Sin: d[k] = b.mul(b.unary(Op::Cos, a), d[n.lhs]); break;
      case Op::Cos: d[k] = b.neg(b.mul(b.unary(Op::Sin, a), d[n.lhs])); break;
      case Op::Exp: d[k] = b.mul(self, d[n.lhs]); break;
      case Op::Log: d[k] = b.div(d[n.lhs], a); break;
      case Op::Sqrt: d[k] = b.div(d[n.lhs], b.mul(b.constant(2.0), self)); break;
    }
  }
  return b.finish(d[e.root()]);
}

}  // namespace morse::expr
