#include <cmath>

#include "doctest.h"
#include "morse/geometry.hpp"
#include "support.hpp"

using namespace morse;
using morse::testing::Gen;

TEST_CASE("sphere retraction and tangent frames") {
  Gen g(1);
  for (int dim : {1, 2, 3}) {
    const auto m = geometry::ManifoldBackend::unit_sphere(dim);
    CHECK(m.ambient_dim() == dim + 1);
    CHECK(m.euler_characteristic() == (dim % 2 == 0 ? 2 : 0));
    for (int t = 0; t < 50; ++t) {
      const Vec x = geometry::retract(m, g.vec(dim + 1, -2, 2));
      CHECK(x.norm() == doctest::Approx(1.0).epsilon(1e-12));
      const Mat b = geometry::tangent_basis(m, x);
      CHECK((b.transpose() * b - Mat::Identity(dim, dim)).norm() < 1e-12);
      CHECK((b.transpose() * x).norm() < 1e-12);
      CHECK(geometry::orientation_sign(m, x, b) == 1);
      if (dim > 1) {
        Mat swapped = b;
        swapped.col(0).swap(swapped.col(1));
        CHECK(geometry::orientation_sign(m, x, swapped) == -1);
      }
      const Vec v = g.vec(dim + 1, -1, 1);
      CHECK(std::abs(geometry::tangent_project(m, x, v).dot(x)) < 1e-12);
    }
  }
}

TEST_CASE("implicit ellipsoid") {
  const auto c = expr::parse("x^2 + y^2/4 + z^2 - 1", 3);
  const auto m = geometry::ManifoldBackend::implicit(c, 2, "ellipsoid");
  Gen g(2);
  for (int t = 0; t < 50; ++t) {
    const Vec x = geometry::retract(m, g.vec(3, -2, 2));
    CHECK(std::abs(expr::evaluate(c, x)) < 1e-10);
    const Vec n = geometry::unit_normal(m, x);
    CHECK(n.dot(x) > 0);
    const Vec d = (n + 0.3 * g.unit(3)).normalized();
    const Vec y = geometry::project_along(m, x + 0.01 * n, d);
    CHECK(std::abs(expr::evaluate(c, y)) < 1e-10);
  }
}

TEST_CASE("gradient and Hessian of the height function on S2") {
  const auto m = geometry::ManifoldBackend::unit_sphere(2);
  const auto f = expr::parse("z", 3);
  const Vec north = (Vec(3) << 0, 0, 1).finished();
  CHECK(geometry::riemannian_gradient(m, f, north).norm() < 1e-14);
  const Mat h = geometry::tangent_hessian(m, f, north);
  CHECK((h + Mat::Identity(2, 2)).norm() < 1e-12);
  const Vec eq = (Vec(3) << 1, 0, 0).finished();
  const Vec grad = geometry::riemannian_gradient(m, f, eq);
  CHECK((grad - north).norm() < 1e-14);
}

TEST_CASE("torus reduction and deck transformations") {
  const auto m = geometry::ManifoldBackend::flat_torus(2);
  CHECK(m.orientable());
  Gen g(3);
  for (int t = 0; t < 100; ++t) {
    const Vec x = g.vec(2, -5, 5);
    geometry::DeckElement deck;
    const Vec r = geometry::retract(m, x, &deck);
    CHECK(r.minCoeff() >= 0.0);
    CHECK(r.maxCoeff() < 1.0);
    CHECK((geometry::apply_deck(m, deck, x) - r).norm() < 1e-12);
    CHECK(geometry::deck_between(m, r, x) == geometry::deck_inverse(m, deck));
    const Vec y = g.vec(2, 0, 1);
    CHECK(geometry::manifold_distance(m, r, y) == doctest::Approx(geometry::manifold_distance(m, y, r)));
    CHECK(geometry::manifold_distance(m, r, y) <= std::sqrt(0.5) + 1e-12);
  }
}

TEST_CASE("Klein bottle deck group") {
  const auto m = geometry::ManifoldBackend::klein_bottle();
  CHECK_FALSE(m.orientable());
  CHECK(m.euler_characteristic() == 0);
  const Vec p = (Vec(2) << 0.1, 0.3).finished();
  const geometry::DeckElement glide{{1, 0}};
  const Vec q = geometry::apply_deck(m, glide, p);
  CHECK(q[0] == doctest::Approx(0.6));
  CHECK(q[1] == doctest::Approx(-0.3));
  CHECK(geometry::deck_linear(m, glide).determinant() == doctest::Approx(-1.0));

  Gen g(4);
  for (int t = 0; t < 100; ++t) {
    const geometry::DeckElement a{{g.integer(-3, 3), g.integer(-3, 3)}};
    const geometry::DeckElement b{{g.integer(-3, 3), g.integer(-3, 3)}};
    const Vec x = g.vec(2, 0, 0.5);
    const Vec ab = geometry::apply_deck(m, geometry::deck_compose(m, a, b), x);
    CHECK((ab - geometry::apply_deck(m, a, geometry::apply_deck(m, b, x))).norm() < 1e-12);
    CHECK(geometry::deck_compose(m, a, geometry::deck_inverse(m, a)) == geometry::deck_identity(m));
    geometry::DeckElement back;
    const Vec lifted = geometry::apply_deck(m, a, x);
    const Vec r = geometry::retract(m, lifted, &back);
    CHECK((r - x).norm() < 1e-12);
    CHECK((geometry::apply_deck(m, back, lifted) - r).norm() < 1e-12);
    CHECK(back == geometry::deck_inverse(m, a));
  }
}
