#pragma once

// Compact manifolds: codimension-one implicit hypersurfaces with the induced
// metric, and flat quotients of R^n by a deck group (torus, Klein bottle).

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "morse/expr.hpp"
#include "morse/types.hpp"

namespace morse::geometry {

struct ImplicitHypersurface {
  int ambient_dim = 0;
  expr::ScalarExpression constraint;
  bool unit_sphere = false;  // enables the closed-form global quadrature
};

enum class QuotientKind { Torus, Klein };

struct FlatQuotient {
  int dim = 0;
  QuotientKind kind = QuotientKind::Torus;
};

/// Element of the deck group in normal form.
///   Torus: shifts[i] is the integer translation along axis i.
///   Klein: shifts = {a, b} acting as (x, y) -> (x + a/2, (-1)^a y + b).
struct DeckElement {
  std::vector<long> shifts;
  bool operator==(const DeckElement&) const = default;
  bool operator<(const DeckElement& o) const { return shifts < o.shifts; }
};

class ManifoldBackend {
 public:
  static ManifoldBackend implicit(expr::ScalarExpression constraint, std::optional<int> euler_characteristic,
                                  std::string name = "implicit");
  /// Unit sphere S^dim in R^(dim+1).
  static ManifoldBackend unit_sphere(int dim);
  /// R^dim / Z^dim with fundamental domain [0,1)^dim.
  static ManifoldBackend flat_torus(int dim);
  /// R^2 modulo the glide (x, y) -> (x + 1/2, -y) and (x, y) -> (x, y + 1);
  /// fundamental domain [0, 1/2) x [0, 1).
  static ManifoldBackend klein_bottle();

  int dim() const noexcept { return dim_; }
  int ambient_dim() const noexcept { return ambient_dim_; }
  bool orientable() const noexcept { return orientable_; }
  bool is_quotient() const noexcept { return std::holds_alternative<FlatQuotient>(data_); }
  bool is_unit_sphere() const;
  std::optional<int> euler_characteristic() const noexcept { return euler_; }
  const std::string& name() const noexcept { return name_; }

  const ImplicitHypersurface* implicit_data() const { return std::get_if<ImplicitHypersurface>(&data_); }
  const FlatQuotient* quotient_data() const { return std::get_if<FlatQuotient>(&data_); }

  /// Widths of the fundamental box (quotients only).
  Vec fundamental_box() const;

 private:
  std::variant<ImplicitHypersurface, FlatQuotient> data_;
  int dim_ = 0;
  int ambient_dim_ = 0;
  bool orientable_ = true;
  std::optional<int> euler_;
  std::string name_;
};

/// Ordered tangent vectors (columns) at a base point.
struct TangentFrame {
  Vec base;
  Mat vectors;             // ambient_dim x count
  int orientation_sign = 0;  // +1/-1 for full frames on orientable manifolds, else 0
};

/// Implicit: Newton projection along the constraint gradient. Quotient:
/// reduction into the fundamental domain; `deck` receives the applied element.
Vec retract(const ManifoldBackend& m, const Vec& x, DeckElement* deck = nullptr);

/// Implicit only: the point x + s*direction on the manifold closest to s = 0,
/// found by one-dimensional Newton. Used for exact chart parametrizations.
Vec project_along(const ManifoldBackend& m, const Vec& x, const Vec& direction);

/// Unit normal of an implicit hypersurface (outward for catalog spheres).
Vec unit_normal(const ManifoldBackend& m, const Vec& x);

Vec tangent_project(const ManifoldBackend& m, const Vec& x, const Vec& v);

/// Orthonormal, positively oriented (when orientable) tangent basis, ambient_dim x dim.
Mat tangent_basis(const ManifoldBackend& m, const Vec& x);

/// Sign of det of a full tangent frame relative to the manifold orientation:
/// a frame is positive when (outward normal, v1, ..., vn) is positive in the
/// ambient space. Returns 0 on non-orientable manifolds or degenerate frames.
int orientation_sign(const ManifoldBackend& m, const Vec& x, const Mat& frame);

Vec riemannian_gradient(const ManifoldBackend& m, const expr::ScalarExpression& f, const Vec& x);

/// Hessian of f restricted to the manifold in the basis tangent_basis(m, x),
/// including the second-fundamental-form correction. Valid at any point as
/// the Hessian of the Lagrangian; tangent_hessian additionally checks criticality.
Mat lagrangian_hessian(const ManifoldBackend& m, const expr::ScalarExpression& f, const Vec& x,
                       const Mat& basis);

Mat tangent_hessian(const ManifoldBackend& m, const expr::ScalarExpression& f, const Vec& x,
                    double grad_tol = 1e-6, Mat* basis_out = nullptr);

// Deck group helpers (quotients only).
Vec apply_deck(const ManifoldBackend& m, const DeckElement& g, const Vec& x);
/// Element g with g(base) ~= lifted, where base lies in the fundamental domain.
DeckElement deck_between(const ManifoldBackend& m, const Vec& base, const Vec& lifted);
DeckElement deck_identity(const ManifoldBackend& m);
/// (a o b)(x) = a(b(x)).
DeckElement deck_compose(const ManifoldBackend& m, const DeckElement& a, const DeckElement& b);
DeckElement deck_inverse(const ManifoldBackend& m, const DeckElement& g);
/// Linear part of the affine deck map.
Mat deck_linear(const ManifoldBackend& m, const DeckElement& g);

/// Distance in the quotient (implicit: ambient Euclidean distance).
double manifold_distance(const ManifoldBackend& m, const Vec& a, const Vec& b);

}  // namespace morse::geometry
