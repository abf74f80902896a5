#include "morse/geometry.hpp"

#include <cmath>
#include <limits>

namespace morse::geometry {
namespace {

constexpr double kRegularity = 1e-8;

const ImplicitHypersurface& require_implicit(const ManifoldBackend& m) {
  const auto* data = m.implicit_data();
  if (!data) throw DimensionError("operation requires an implicit hypersurface");
  return *data;
}

Vec constraint_gradient(const ImplicitHypersurface& s, const Vec& x, double* value = nullptr) {
  expr::JetValue j = expr::eval_gradient(s.constraint, x);
  if (value) *value = j.value;
  return j.gradient;
}

}  // namespace

ManifoldBackend ManifoldBackend::implicit(expr::ScalarExpression constraint, std::optional<int> euler_characteristic,
                                          std::string name) {
  ManifoldBackend m;
  m.ambient_dim_ = constraint.num_vars();
  if (m.ambient_dim_ < 2) throw DimensionError("implicit hypersurfaces need ambient dimension >= 2");
  m.dim_ = m.ambient_dim_ - 1;
  m.data_ = ImplicitHypersurface{m.ambient_dim_, std::move(constraint), false};
  m.euler_ = euler_characteristic;
  m.name_ = std::move(name);
  return m;
}

ManifoldBackend ManifoldBackend::unit_sphere(int dim) {
  if (dim < 1 || dim + 1 > kMaxDim) throw DimensionError("unsupported sphere dimension");
  const int n = dim + 1;
  expr::ScalarExpression c = expr::ScalarExpression::constant(-1.0, n);
  for (int i = 0; i < n; ++i) {
    auto xi = expr::ScalarExpression::variable(i, n);
    c = c + xi * xi;
  }
  ManifoldBackend m = implicit(c, dim % 2 == 0 ? 2 : 0, dim == 1 ? "circle" : "sphere");
  std::get<ImplicitHypersurface>(m.data_).unit_sphere = true;
  return m;
}

ManifoldBackend ManifoldBackend::flat_torus(int dim) {
  if (dim < 1 || dim > kMaxDim) throw DimensionError("unsupported torus dimension");
  ManifoldBackend m;
  m.dim_ = m.ambient_dim_ = dim;
  m.data_ = FlatQuotient{dim, QuotientKind::Torus};
  m.euler_ = 0;
  m.name_ = "torus";
  return m;
}

ManifoldBackend ManifoldBackend::klein_bottle() {
  ManifoldBackend m;
  m.dim_ = m.ambient_dim_ = 2;
  m.data_ = FlatQuotient{2, QuotientKind::Klein};
  m.orientable_ = false;
  m.euler_ = 0;
  m.name_ = "klein";
  return m;
}

bool ManifoldBackend::is_unit_sphere() const {
  const auto* d = implicit_data();
  return d && d->unit_sphere;
}

Vec ManifoldBackend::fundamental_box() const {
  const auto* q = quotient_data();
  if (!q) throw DimensionError("fundamental box requested for an implicit hypersurface");
  Vec w = Vec::Ones(q->dim);
  if (q->kind == QuotientKind::Klein) w[0] = 0.5;
  return w;
}

Vec retract(const ManifoldBackend& m, const Vec& x, DeckElement* deck) {
  if (x.size() != m.ambient_dim()) throw DimensionError("retract: wrong point dimension");
  if (const auto* q = m.quotient_data()) {
    Vec y = x;
    DeckElement g;
    if (q->kind == QuotientKind::Torus) {
      g.shifts.resize(q->dim);
      for (int i = 0; i < q->dim; ++i) {
        const double k = std::floor(y[i]);
        y[i] -= k;
        if (y[i] >= 1.0) y[i] -= 1.0;  // floor rounding at -tiny
        g.shifts[i] = -static_cast<long>(k);
      }
    } else {
      const double k = std::floor(2.0 * y[0]);
      y[0] -= 0.5 * k;
      if (static_cast<long>(k) % 2 != 0) y[1] = -y[1];
      const double mm = std::floor(y[1]);
      y[1] -= mm;
      if (y[0] >= 0.5) y[0] -= 0.5, y[1] = 1.0 - y[1];  // unreachable except at roundoff
      if (y[1] >= 1.0) y[1] -= 1.0;
      g.shifts = {-static_cast<long>(k), -static_cast<long>(mm)};
    }
    if (deck) *deck = g;
    return y;
  }
  const auto& s = require_implicit(m);
  Vec y = x;
  for (int it = 0; it < 50; ++it) {
    double c;
    Vec g = constraint_gradient(s, y, &c);
    const double g2 = g.squaredNorm();
    if (g2 < kRegularity * kRegularity) throw ConvergenceError("retract: constraint gradient vanishes");
    if (std::abs(c) < 1e-12) {
      if (deck) *deck = {};
      return y;
    }
    y -= (c / g2) * g;
  }
  throw ConvergenceError("retract: Newton projection did not converge in 50 steps");
}

Vec project_along(const ManifoldBackend& m, const Vec& x, const Vec& direction) {
  const auto& s = require_implicit(m);
  double t = 0.0;
  for (int it = 0; it < 50; ++it) {
    double c;
    const Vec y = x + t * direction;
    Vec g = constraint_gradient(s, y, &c);
    if (std::abs(c) < 1e-13) return y;
    const double slope = g.dot(direction);
    if (std::abs(slope) < kRegularity) throw ConvergenceError("project_along: direction tangent to the manifold");
    t -= c / slope;
  }
  throw ConvergenceError("project_along: Newton did not converge");
}

Vec unit_normal(const ManifoldBackend& m, const Vec& x) {
  const auto& s = require_implicit(m);
  Vec g = constraint_gradient(s, x);
  const double norm = g.norm();
  if (norm < kRegularity) throw ConvergenceError("constraint gradient vanishes");
  return g / norm;
}

Vec tangent_project(const ManifoldBackend& m, const Vec& x, const Vec& v) {
  if (m.is_quotient()) return v;
  const Vec n = unit_normal(m, x);
  return v - n.dot(v) * n;
}

Mat tangent_basis(const ManifoldBackend& m, const Vec& x) {
  if (m.is_quotient()) return Mat::Identity(m.dim(), m.dim());
  const int big = m.ambient_dim();
  const Vec n = unit_normal(m, x);
  // Householder reflection taking e_0 to n; its remaining columns span n-perp.
  Vec w = n;
  w[0] -= 1.0;
  Mat h = Mat::Identity(big, big);
  const double w2 = w.squaredNorm();
  if (w2 > 1e-24) h -= (2.0 / w2) * (w * w.transpose());
  Mat basis = h.rightCols(big - 1);
  Mat full(big, big);
  full.col(0) = n;
  full.rightCols(big - 1) = basis;
  if (full.determinant() < 0) basis.col(big - 2) *= -1.0;
  return basis;
}

int orientation_sign(const ManifoldBackend& m, const Vec& x, const Mat& frame) {
  if (!m.orientable() || frame.cols() != m.dim()) return 0;
  double det;
  if (m.is_quotient()) {
    det = frame.determinant();
  } else {
    Mat full(m.ambient_dim(), m.ambient_dim());
    full.col(0) = unit_normal(m, x);
    full.rightCols(m.dim()) = frame;
    det = full.determinant();
  }
  if (det > 0) return 1;
  if (det < 0) return -1;
  return 0;
}

Vec riemannian_gradient(const ManifoldBackend& m, const expr::ScalarExpression& f, const Vec& x) {
  if (f.num_vars() != m.ambient_dim()) throw DimensionError("function and manifold dimensions differ");
  return tangent_project(m, x, expr::eval_gradient(f, x).gradient);
}

Mat lagrangian_hessian(const ManifoldBackend& m, const expr::ScalarExpression& f, const Vec& x, const Mat& basis) {
  expr::JetValue jf = expr::eval_jet(f, x);
  Mat h = jf.hessian;
  if (const auto* s = m.implicit_data()) {
    expr::JetValue jc = expr::eval_jet(s->constraint, x);
    const double mu = jf.gradient.dot(jc.gradient) / jc.gradient.squaredNorm();
    h -= mu * jc.hessian;
  }
  Mat out = basis.transpose() * h * basis;
  return 0.5 * (out + out.transpose());
}

Mat tangent_hessian(const ManifoldBackend& m, const expr::ScalarExpression& f, const Vec& x, double grad_tol,
                    Mat* basis_out) {
  const Vec g = riemannian_gradient(m, f, x);
  if (g.norm() > grad_tol) {
    throw DomainError("tangent_hessian called at a non-critical point (|grad| = " + std::to_string(g.norm()) + ")");
  }
  Mat basis = tangent_basis(m, x);
  Mat h = lagrangian_hessian(m, f, x, basis);
  if (basis_out) *basis_out = basis;
  return h;
}

Vec apply_deck(const ManifoldBackend& m, const DeckElement& g, const Vec& x) {
  const auto* q = m.quotient_data();
  if (!q) return x;
  Vec y = x;
  if (g.shifts.empty()) return y;
  if (q->kind == QuotientKind::Torus) {
    for (int i = 0; i < q->dim; ++i) y[i] += static_cast<double>(g.shifts[i]);
  } else {
    const long a = g.shifts[0];
    y[0] += 0.5 * static_cast<double>(a);
    if (a % 2 != 0) y[1] = -y[1];
    y[1] += static_cast<double>(g.shifts[1]);
  }
  return y;
}

DeckElement deck_identity(const ManifoldBackend& m) {
  const auto* q = m.quotient_data();
  if (!q) return {};
  return DeckElement{std::vector<long>(q->kind == QuotientKind::Torus ? q->dim : 2, 0)};
}

DeckElement deck_compose(const ManifoldBackend& m, const DeckElement& a, const DeckElement& b) {
  const auto* q = m.quotient_data();
  if (!q) return {};
  if (a.shifts.empty()) return b;
  if (b.shifts.empty()) return a;
  if (q->kind == QuotientKind::Torus) {
    DeckElement g = a;
    for (std::size_t i = 0; i < g.shifts.size(); ++i) g.shifts[i] += b.shifts[i];
    return g;
  }
  const long s = (a.shifts[0] % 2 != 0) ? -1 : 1;
  return DeckElement{{a.shifts[0] + b.shifts[0], s * b.shifts[1] + a.shifts[1]}};
}

DeckElement deck_inverse(const ManifoldBackend& m, const DeckElement& g) {
  const auto* q = m.quotient_data();
  if (!q || g.shifts.empty()) return g;
  if (q->kind == QuotientKind::Torus) {
    DeckElement out = g;
    for (auto& s : out.shifts) s = -s;
    return out;
  }
  const long s = (g.shifts[0] % 2 != 0) ? -1 : 1;
  return DeckElement{{-g.shifts[0], -s * g.shifts[1]}};
}

Mat deck_linear(const ManifoldBackend& m, const DeckElement& g) {
  Mat l = Mat::Identity(m.ambient_dim(), m.ambient_dim());
  const auto* q = m.quotient_data();
  if (q && q->kind == QuotientKind::Klein && !g.shifts.empty() && g.shifts[0] % 2 != 0) l(1, 1) = -1.0;
  return l;
}

DeckElement deck_between(const ManifoldBackend& m, const Vec& base, const Vec& lifted) {
  const auto* q = m.quotient_data();
  if (!q) return {};
  DeckElement g;
  if (q->kind == QuotientKind::Torus) {
    g.shifts.resize(q->dim);
    for (int i = 0; i < q->dim; ++i) g.shifts[i] = std::lround(lifted[i] - base[i]);
  } else {
    const long a = std::lround(2.0 * (lifted[0] - base[0]));
    const double y = (a % 2 != 0) ? -base[1] : base[1];
    g.shifts = {a, std::lround(lifted[1] - y)};
  }
  return g;
}

double manifold_distance(const ManifoldBackend& m, const Vec& a, const Vec& b) {
  const auto* q = m.quotient_data();
  if (!q) return (a - b).norm();
  const Vec ra = retract(m, a);
  const Vec rb = retract(m, b);
  if (q->kind == QuotientKind::Torus) {
    Vec d = ra - rb;
    for (int i = 0; i < d.size(); ++i) d[i] -= std::round(d[i]);
    return d.norm();
  }
  double best = std::numeric_limits<double>::infinity();
  for (long ga = -2; ga <= 2; ++ga) {
    for (long gb = -2; gb <= 2; ++gb) {
      best = std::min(best, (apply_deck(m, DeckElement{{ga, gb}}, rb) - ra).norm());
    }
  }
  return best;
}

}  // namespace morse::geometry
