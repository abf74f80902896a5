#include <cmath>

#include "doctest.h"
#include "morse/critical.hpp"
#include "morse/flow.hpp"
#include "morse/ode.hpp"
#include "support.hpp"

using namespace morse;
using morse::testing::Gen;

TEST_CASE("Dormand-Prince on linear and oscillator problems") {
  ode::Options o;
  const auto grow = ode::dormand_prince([](double, const ode::State& y, ode::State& d) { d = y; }, 0.0,
                                        ode::State::Ones(1), 2.0, o);
  CHECK(grow.y[0] == doctest::Approx(std::exp(2.0)).epsilon(1e-8));

  const auto osc = ode::dormand_prince(
      [](double, const ode::State& y, ode::State& d) {
        d.resize(2);
        d << y[1], -y[0];
      },
      0.0, (ode::State(2) << 1.0, 0.0).finished(), 10.0, o);
  CHECK(osc.y[0] == doctest::Approx(std::cos(10.0)).epsilon(1e-7));
  CHECK(osc.y[1] == doctest::Approx(-std::sin(10.0)).epsilon(1e-7));

  int calls = 0;
  const auto stopped = ode::dormand_prince([](double, const ode::State& y, ode::State& d) { d = y; }, 0.0,
                                           ode::State::Ones(1), 10.0, o,
                                           [&](double, ode::State& y) { return ++calls, y[0] > 2.0; });
  CHECK(stopped.stopped_by_hook);
  CHECK(stopped.t < 1.0);
}

TEST_CASE("f increases along the uphill flow") {
  const auto m = geometry::ManifoldBackend::unit_sphere(2);
  const auto f = expr::parse("z^2 + 0.3*x", 3);
  const auto spec = flow::FlowSpec::gradient(m, f);
  const auto cs = critical::find_critical_points(m, f, {});
  Gen g(5);
  for (int t = 0; t < 10; ++t) {
    const Vec x0 = geometry::retract(m, g.unit(3));
    const auto traj = flow::integrate(spec, x0, flow::Direction::Forward, &cs);
    for (std::size_t i = 1; i < traj.points.size(); ++i) {
      CHECK(expr::evaluate(f, traj.points[i]) >= expr::evaluate(f, traj.points[i - 1]) - 1e-12);
      CHECK(traj.points[i].norm() == doctest::Approx(1.0).epsilon(1e-10));
    }
    CHECK(traj.status == flow::Status::Converged);
    CHECK(cs.at(traj.limit).index == 2);
  }
}

TEST_CASE("limits of the height flow") {
  const auto m = geometry::ManifoldBackend::unit_sphere(2);
  const auto f = expr::parse("z", 3);
  const auto spec = flow::FlowSpec::gradient(m, f);
  const auto cs = critical::find_critical_points(m, f, {});
  const Vec x = (Vec(3) << 0.6, 0.0, 0.8).finished();
  CHECK(flow::limit(spec, cs, x, flow::Direction::Forward) == 1);
  CHECK(flow::limit(spec, cs, x, flow::Direction::Backward) == 0);
}

TEST_CASE("flow map is a one-parameter group") {
  const auto m = geometry::ManifoldBackend::flat_torus(2);
  const auto spec = flow::FlowSpec::gradient(m, expr::parse("cos(2*pi*x) + cos(2*pi*y)", 2));
  Gen g(6);
  for (int t = 0; t < 10; ++t) {
    const Vec x = g.vec(2, 0, 1);
    const double s = g.real(0.01, 0.1), u = g.real(0.01, 0.1);
    const Vec a = flow::flow_map(spec, flow::flow_map(spec, x, s), u);
    const Vec b = flow::flow_map(spec, x, s + u);
    CHECK(geometry::manifold_distance(m, a, b) < 1e-7);
    CHECK(geometry::manifold_distance(m, flow::flow_map(spec, flow::flow_map(spec, x, s), -s), x) < 1e-7);
  }
}

TEST_CASE("sphere17 flow is a translation in the chart") {
  const auto m = geometry::ManifoldBackend::unit_sphere(2);
  const Vec u = (Vec(2) << 1.0, 0.5).finished();
  const auto spec = flow::FlowSpec::sphere17(m, u);
  const Vec x = geometry::retract(m, (Vec(3) << 0.3, -0.2, 0.5).finished());
  const Vec y0 = x.head(2) / (1.0 + x[2]);
  const Vec x1 = flow::flow_map(spec, x, 0.7);
  const Vec y1 = x1.head(2) / (1.0 + x1[2]);
  CHECK((y1 - (y0 + 0.7 * u.normalized())).norm() < 1e-8);
  CHECK(flow::velocity(spec, (Vec(3) << 0, 0, -1).finished()).norm() < 1e-14);
}

TEST_CASE("transported frame matches the differential of the flow map") {
  const auto m = geometry::ManifoldBackend::unit_sphere(2);
  const auto spec = flow::FlowSpec::gradient(m, expr::parse("z^2 + 0.3*x", 3));
  Gen g(7);
  for (int t = 0; t < 5; ++t) {
    const Vec x = geometry::retract(m, g.unit(3));
    const Mat w = geometry::tangent_basis(m, x);
    flow::FrameFlowOptions o;
    o.t_end = 0.5;
    const auto ff = flow::flow_with_frame(spec, x, w, flow::Direction::Forward, o);
    const double h = 1e-6;
    for (int k = 0; k < 2; ++k) {
      const Vec xp = geometry::project_along(m, x + h * w.col(k), x);
      const Vec xm = geometry::project_along(m, x - h * w.col(k), x);
      const Vec fd = (flow::flow_map(spec, xp, 0.5) - flow::flow_map(spec, xm, 0.5)) / (2 * h);
      CHECK((fd - ff.frame.col(k)).norm() < 1e-5 * std::max(1.0, fd.norm()));
    }
  }
}
