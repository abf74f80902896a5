#include <cmath>

#include "doctest.h"
#include "morse/expr.hpp"
#include "suites.hpp"

using namespace morse;
using morse::testing::Gen;

TEST_CASE("parse and evaluate") {
  const Vec p = (Vec(3) << 0.5, -1.0, 2.0).finished();
  CHECK(expr::evaluate(expr::parse("x + 2*y - z^2", 3), p) == doctest::Approx(0.5 - 2.0 - 4.0));
  CHECK(expr::evaluate(expr::parse("cos(2*pi*x)", 3), p) == doctest::Approx(-1.0));
  CHECK(expr::evaluate(expr::parse("-x^2", 3), p) == doctest::Approx(-0.25));
  CHECK(expr::evaluate(expr::parse("x3 - x1", 5), (Vec(5) << 1, 2, 3, 4, 5).finished()) == doctest::Approx(2.0));
  CHECK(expr::evaluate(expr::parse("exp(log(3))*sqrt(4)", 1), Vec::Zero(1)) == doctest::Approx(6.0));
}

TEST_CASE("parse errors") {
  CHECK_THROWS_AS(expr::parse("x +", 2), ParseError);
  CHECK_THROWS_AS(expr::parse("q", 2), ParseError);
  CHECK_THROWS_AS(expr::parse("sin(x", 2), ParseError);
  CHECK_THROWS_AS(expr::parse("z", 2), ParseError);
  CHECK_THROWS_AS(expr::evaluate(expr::parse("log(x)", 1), (Vec(1) << -1.0).finished()), DomainError);
}

TEST_CASE("canonical text round-trips") {
  Gen g(11);
  for (int i = 0; i < 200; ++i) {
    const int n = g.integer(1, 5);
    const auto e = expr::parse(g.expression(n, 4), n);
    const std::string text = e.to_string();
    const auto again = expr::parse(text, n);
    CHECK(again.to_string() == text);
    const Vec x = g.vec(n, -1, 1);
    CHECK(expr::evaluate(again, x) == doctest::Approx(expr::evaluate(e, x)).epsilon(1e-12));
  }
}

TEST_CASE("forward-mode derivatives agree with central differences") {
  const std::string failure = morse::testing::ad_suite(100, 2024);
  CHECK_MESSAGE(failure.empty(), failure);
}

TEST_CASE("jet value and symmetric Hessian") {
  Gen g(4);
  for (int i = 0; i < 50; ++i) {
    const int n = g.integer(1, 4);
    const auto e = expr::parse(g.expression(n, 4), n);
    const Vec x = g.vec(n, -1, 1);
    const auto jet = expr::eval_jet(e, x);
    CHECK(jet.value == doctest::Approx(expr::evaluate(e, x)).epsilon(1e-12));
    CHECK((jet.hessian - jet.hessian.transpose()).norm() <= 1e-12 * std::max(1.0, jet.hessian.norm()));
  }
}

TEST_CASE("symbolic derivative matches forward mode") {
  Gen g(5);
  for (int i = 0; i < 50; ++i) {
    const int n = g.integer(1, 3);
    const auto e = expr::parse(g.expression(n, 3), n);
    const Vec x = g.vec(n, -1, 1);
    const auto jet = expr::eval_jet(e, x);
    for (int k = 0; k < n; ++k) {
      CHECK(expr::evaluate(expr::differentiate(e, k), x) == doctest::Approx(jet.gradient[k]).epsilon(1e-10));
    }
  }
}

TEST_CASE("forms: antisymmetry, wedge and d^2 = 0") {
  const auto a = expr::parse_form({{"dy^dx", "1"}}, 2);
  const auto b = expr::parse_form({{"dx^dy", "-1"}}, 2);
  const Mat e = Mat::Identity(2, 2);
  CHECK(expr::eval_form(a, Vec::Zero(2), e) == doctest::Approx(expr::eval_form(b, Vec::Zero(2), e)));
  CHECK(expr::parse_form({{"dx^dx", "1"}}, 2).is_zero());

  Gen g(99);
  for (int i = 0; i < 30; ++i) {
    const int n = 4;
    const auto f = expr::FormExpression::function(expr::parse(g.expression(n, 3), n));
    const auto df = expr::exterior_derivative(f);
    const auto ddf = expr::exterior_derivative(df);
    const Vec x = g.vec(n, -1, 1);
    Mat w(n, 2);
    w.col(0) = g.vec(n, -1, 1);
    w.col(1) = g.vec(n, -1, 1);
    CHECK(std::abs(expr::eval_form(ddf, x, w)) < 1e-9);

    const auto one = expr::parse_form({{"dx", g.expression(n, 2)}, {"dz", g.expression(n, 2)}}, n);
    const auto two = expr::parse_form({{"dy", g.expression(n, 2)}, {"dw", g.expression(n, 2)}}, n);
    const double ab = expr::eval_form(expr::wedge(one, two), x, w);
    Mat swapped(n, 2);
    swapped << w.col(1), w.col(0);
    CHECK(ab == doctest::Approx(-expr::eval_form(expr::wedge(one, two), x, swapped)));
    CHECK(ab == doctest::Approx(-expr::eval_form(expr::wedge(two, one), x, w)));
    const double direct = expr::eval_form(one, x, w.col(0)) * expr::eval_form(two, x, w.col(1)) -
                          expr::eval_form(one, x, w.col(1)) * expr::eval_form(two, x, w.col(0));
    CHECK(ab == doctest::Approx(direct));
  }
}

TEST_CASE("exterior derivative of a top form is rejected") {
  CHECK_THROWS_AS(expr::exterior_derivative(expr::parse_form({{"dx^dy", "x"}}, 2)), DimensionError);
}
