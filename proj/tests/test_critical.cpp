#include <Eigen/Eigenvalues>
#include <cstdio>

#include "doctest.h"
#include "morse/critical.hpp"
#include "support.hpp"

using namespace morse;
using morse::testing::Gen;

namespace {

std::vector<int> counts(const critical::CriticalSet& cs, int n) { return cs.counts_by_index(n); }

std::string quadratic_text(const Mat& a) {
  static const char* v[] = {"x", "y", "z"};
  std::string s;
  char buf[64];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      std::snprintf(buf, sizeof buf, "%s%.17g*%s*%s", s.empty() ? "" : " + ", a(i, j), v[i], v[j]);
      s += buf;
    }
  return s;
}

}  // namespace

TEST_CASE("height function on the sphere") {
  const auto m = geometry::ManifoldBackend::unit_sphere(2);
  const auto cs = critical::find_critical_points(m, expr::parse("z", 3), {});
  REQUIRE(cs.points.size() == 2);
  CHECK(cs.points[0].index == 0);
  CHECK(cs.points[1].index == 2);
  CHECK(cs.points[0].value == doctest::Approx(-1.0));
  CHECK(cs.points[0].location[2] == doctest::Approx(-1.0));
  CHECK(cs.points[1].eigenvalues[0] == doctest::Approx(-1.0));
  CHECK(cs.euler_characteristic() == 2);
}

TEST_CASE("catalog functions") {
  const auto circle = geometry::ManifoldBackend::unit_sphere(1);
  CHECK(counts(critical::find_critical_points(circle, expr::parse("x", 2), {}), 1) == std::vector<int>{1, 1});

  const auto s2 = geometry::ManifoldBackend::unit_sphere(2);
  CHECK(counts(critical::find_critical_points(s2, expr::parse("z^2 + 0.3*x", 3), {}), 2) ==
        std::vector<int>{1, 1, 2});

  const auto t2 = geometry::ManifoldBackend::flat_torus(2);
  const auto ct = critical::find_critical_points(t2, expr::parse("cos(2*pi*x) + cos(2*pi*y)", 2), {});
  CHECK(counts(ct, 2) == std::vector<int>{1, 2, 1});
  for (const auto& p : ct.points) {
    CHECK(p.location.minCoeff() >= 0.0);
    CHECK(p.location.maxCoeff() < 1.0);
  }

  const auto kb = geometry::ManifoldBackend::klein_bottle();
  CHECK(counts(critical::find_critical_points(kb, expr::parse("cos(4*pi*x) + cos(2*pi*y)", 2), {}), 2) ==
        std::vector<int>{1, 2, 1});

  const auto ell = geometry::ManifoldBackend::implicit(expr::parse("x^2 + y^2/4 + z^2 - 1", 3), 2);
  CHECK(counts(critical::find_critical_points(ell, expr::parse("y", 3), {}), 2) == std::vector<int>{1, 0, 1});
}

TEST_CASE("quadratic forms on S2 against the eigen decomposition") {
  Gen g(12);
  const auto m = geometry::ManifoldBackend::unit_sphere(2);
  for (int t = 0; t < 10; ++t) {
    Mat b = Mat::Zero(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) b(i, j) = g.real(-1, 1);
    const Mat a = 0.5 * (b + b.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(a);
    const Vec ev = es.eigenvalues();
    if (ev[1] - ev[0] < 0.1 || ev[2] - ev[1] < 0.1) continue;
    const auto cs = critical::find_critical_points(m, expr::parse(quadratic_text(a), 3), {});
    REQUIRE(cs.points.size() == 6);
    CHECK(counts(cs, 2) == std::vector<int>{2, 2, 2});
    for (const auto& p : cs.points) {
      int k = 0;
      double best = 0.0;
      for (int i = 0; i < 3; ++i) {
        const double c = std::abs(p.location.dot(es.eigenvectors().col(i)));
        if (c > best) best = c, k = i;
      }
      CHECK(best == doctest::Approx(1.0).epsilon(1e-8));
      CHECK(p.index == k);
      CHECK(p.value == doctest::Approx(ev[k]));
    }
  }
}

TEST_CASE("Euler characteristic does not depend on the seeds") {
  const auto m = geometry::ManifoldBackend::unit_sphere(2);
  const auto f = expr::parse("z^2 + 0.3*x + 0.1*y*z", 3);
  for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
    critical::SeedSpec s;
    s.seed = seed;
    s.count = 200;
    CHECK(critical::find_critical_points(m, f, s).euler_characteristic() == 2);
  }
}

TEST_CASE("critical frames are positively ordered") {
  const auto m = geometry::ManifoldBackend::unit_sphere(2);
  const auto cs = critical::find_critical_points(m, expr::parse("z^2 + 0.3*x", 3), {});
  for (const auto& p : cs.points) {
    Mat frame(3, 2);
    frame << p.unstable_frame.vectors, p.stable_frame.vectors;
    CHECK(geometry::orientation_sign(m, p.location, frame) == 1);
    CHECK(p.dim_stable() == p.index);
  }
}

TEST_CASE("seeding is deterministic") {
  const auto m = geometry::ManifoldBackend::flat_torus(2);
  const auto f = expr::parse("cos(2*pi*x) + cos(2*pi*y) + 0.1*sin(2*pi*x)", 2);
  const auto a = critical::find_critical_points(m, f, {});
  const auto b = critical::find_critical_points(m, f, {});
  REQUIRE(a.points.size() == b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) CHECK(a.points[i].location == b.points[i].location);
}

TEST_CASE("degenerate critical sets are rejected") {
  const auto m = geometry::ManifoldBackend::unit_sphere(2);
  CHECK_THROWS_AS(critical::find_critical_points(m, expr::parse("z^2", 3), {}), DegenerateCriticalPoint);
}
