#include <Eigen/Dense>

#include "doctest.h"
#include "morse/errors.hpp"
#include "morse/integer_matrix.hpp"
#include "suites.hpp"

using namespace morse;
using algebra::BigInt;
using algebra::IntMatrix;
using morse::testing::Gen;

namespace {

IntMatrix rows_of(std::initializer_list<std::initializer_list<std::int64_t>> rows) {
  IntMatrix m(static_cast<int>(rows.size()), static_cast<int>(rows.begin()->size()));
  int i = 0;
  for (const auto& r : rows) {
    int j = 0;
    for (auto v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

}  // namespace

TEST_CASE("smith normal form of known matrices") {
  const auto s = algebra::smith_normal_form(rows_of({{2, 4, 4}, {-6, 6, 12}, {10, -4, -16}}));
  REQUIRE(s.invariants.size() == 3);
  CHECK(s.invariants[0] == 2);
  CHECK(s.invariants[1] == 6);
  CHECK(s.invariants[2] == 12);

  const auto z = algebra::smith_normal_form(IntMatrix(3, 2));
  CHECK(z.rank == 0);
  CHECK(z.S.is_zero());

  const auto e = algebra::smith_normal_form(IntMatrix(0, 3));
  CHECK(e.rank == 0);
}

TEST_CASE("smith normal form property suite") {
  const std::string failure = morse::testing::snf_suite(1000, 17);
  CHECK_MESSAGE(failure.empty(), failure);
}

TEST_CASE("int64 overflow escalates to big integers") {
  const std::int64_t big = std::int64_t(1) << 62;
  const IntMatrix a = rows_of({{big, big - 1}, {big - 3, big - 7}});
  const auto s = algebra::smith_normal_form(a);
  CHECK(s.escalated);
  CHECK(algebra::multiply(algebra::multiply(s.U, algebra::to_big(a)), s.V) == s.S);
  CHECK_THROWS_AS(algebra::multiply(a, a), VerificationError);
}

TEST_CASE("determinant agrees with floating point on small matrices") {
  Gen g(3);
  for (int t = 0; t < 200; ++t) {
    const int n = g.integer(1, 6);
    const IntMatrix a = g.int_matrix(n, n, -5, 5);
    Eigen::MatrixXd d(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) d(i, j) = static_cast<double>(a(i, j));
    CHECK(static_cast<double>(algebra::determinant(algebra::to_big(a))) == doctest::Approx(d.determinant()));
  }
}

TEST_CASE("unimodular inverse") {
  Gen g(8);
  for (int t = 0; t < 100; ++t) {
    const int n = g.integer(1, 6);
    const IntMatrix u = g.unimodular(n);
    CHECK(algebra::multiply(u, algebra::unimodular_inverse(u)) == IntMatrix::identity(n));
  }
  CHECK_THROWS(algebra::unimodular_inverse(rows_of({{2, 0}, {0, 1}})));
}

TEST_CASE("rank over Z/p counts invariants prime to p") {
  Gen g(21);
  for (int t = 0; t < 200; ++t) {
    const IntMatrix a = g.int_matrix(g.integer(1, 6), g.integer(1, 6), -6, 6);
    const auto s = algebra::smith_normal_form(a);
    for (std::int64_t p : {2, 3, 5}) {
      int expected = 0;
      for (const auto& d : s.invariants) expected += (d % p != 0) ? 1 : 0;
      CHECK(algebra::rank_mod(a, p) == expected);
    }
  }
}

TEST_CASE("to_string") { CHECK(algebra::to_string(rows_of({{1, -2}, {0, 3}})) == "[1 -2; 0 3]"); }
